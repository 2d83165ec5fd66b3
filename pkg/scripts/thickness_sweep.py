#!/usr/bin/env python3
"""Minimize E_h along a thickness sweep and report how the minimizers approach the limit solution.

    python3 scripts/thickness_sweep.py --anchor 0 0.9 --h 0.2 0.1 0.05 0.025 --out out/sweep_lifted.json
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from floatsheet.cli import write_json
from floatsheet.gamma_harness import gamma_convergence_experiment
from floatsheet.model import LimitConstants
from floatsheet.solver import SolveOptions


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--anchor", type=float, nargs=2, default=[0.0, 0.9])
    ap.add_argument("--h", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=400, help="nodes of the discretized sheet")
    ap.add_argument("--constants", type=float, nargs=4, default=[1.0, 0.3, 0.3, 1.0],
                    metavar=("A_LG", "A_SG", "A_SL", "C"))
    ap.add_argument("--lbfgs-iter", type=int, default=5000)
    ap.add_argument("--parallel", action="store_true")
    ap.add_argument("--out", type=Path, default=None, help="write the report as JSON")
    args = ap.parse_args(argv)

    lim = LimitConstants(*args.constants)
    kw = dict(alpha=args.alpha, n=args.n, opts=SolveOptions(lbfgs_iter=args.lbfgs_iter))
    if args.parallel:
        with ProcessPoolExecutor() as ex:
            rep = gamma_convergence_experiment(lim, tuple(args.anchor), args.h, executor=ex, **kw)
    else:
        rep = gamma_convergence_experiment(lim, tuple(args.anchor), args.h, **kw)

    print(f"limit regime: {rep.limit_regime}")
    print(f"{'h':>10} {'image dist':>12} {'param dist':>12} {'energy gap':>12} {'sup strain':>11} "
          f"{'multiplier':>11} {'time':>7}")
    for i, h in enumerate(rep.h[:len(rep.image_distances)]):
        m = rep.multipliers[i]
        print(f"{h:10.4g} {rep.image_distances[i]:12.4e} {rep.parametric_distances[i]:12.4e} "
              f"{rep.energy_gaps[i]:12.4e} {rep.sup_strains[i]:11.4e} "
              f"{'-' if m is None else f'{m:.6f}':>11} {rep.seconds[i]:6.1f}s")
    print(f"fitted rates: distance {rep.distance_rate}, energy gap {rep.gap_rate}")
    for msg in rep.failed:
        print(f"failed: {msg}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        write_json(rep.to_dict(), args.out)
    return 1 if rep.partial else 0


if __name__ == "__main__":
    raise SystemExit(main())
