#!/usr/bin/env python3
"""Kink-scale experiments: fillet crossover radius and the contact-window expansion.

    python3 scripts/kink_scale.py --h 1e-2 1e-3 1e-4 --out out/kink.json
"""

import argparse
from pathlib import Path

from floatsheet.cli import write_json
from floatsheet.energy import fillet_crossover, kink_analysis
from floatsheet.model import LimitConstants
from floatsheet.solver import solve_limit_problem


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, nargs="+", default=[1e-2, 1e-3])
    ap.add_argument("--anchor", type=float, nargs=2, default=[0.0, 0.5])
    ap.add_argument("--solve-h", type=float, default=0.05, help="thickness for the window analysis")
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--window", type=float, default=0.05)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args(argv)

    rows = []
    print(f"{'h':>8} {'eps*':>11} {'r_cross':>11} {'ratio':>8}")
    for h in args.h:
        f = fillet_crossover(h)
        rows.append({"h": f.h, "eps_star": f.eps_star, "r_cross": f.r_cross, "ratio": f.ratio})
        print(f"{h:8.1e} {f.eps_star:11.4e} {f.r_cross:11.4e} {f.ratio:8.5f}")

    lim = LimitConstants(1.0, 0.3, 0.3, 1.0)
    sol = solve_limit_problem(lim, tuple(args.anchor))
    rep = kink_analysis(sol.configuration(4000), lim.at_thickness(args.solve_h, args.alpha), args.window)
    print(f"contact window around {tuple(round(v, 6) for v in rep.contact)}: "
          f"gravity exponent {rep.gravity_exponent:.4f}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        write_json({"fillet": rows, "window": rep.to_dict()}, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
