#!/usr/bin/env python3
"""Build the recovery sequence for a limit solution and print its convergence diagnostics.

    python3 scripts/recovery_sequence.py --anchor 0 0.9 --members 7 --out out/recovery.json
"""

import argparse
from pathlib import Path

import numpy as np

from floatsheet.cli import write_json
from floatsheet.gamma_harness import WEAK_TESTS, recovery_sequence
from floatsheet.model import LimitConstants
from floatsheet.solver import solve_limit_problem


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--anchor", type=float, nargs=2, default=[0.0, 0.9])
    ap.add_argument("--h0", type=float, default=0.01, help="first thickness")
    ap.add_argument("--ratio", type=float, default=4.0, help="h_{n+1} = h_n / ratio")
    ap.add_argument("--members", type=int, default=7)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--target-nodes", type=int, default=400)
    ap.add_argument("--constants", type=float, nargs=4, default=[1.0, 0.3, 0.3, 1.0],
                    metavar=("A_LG", "A_SG", "A_SL", "C"))
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args(argv)

    lim = LimitConstants(*args.constants)
    sol = solve_limit_problem(lim, tuple(args.anchor))
    hs = args.h0 * args.ratio ** -np.arange(args.members)
    seq = recovery_sequence(sol.configuration(args.target_nodes), hs, args.alpha, lim)

    print(f"target: {sol.regime} limit solution, E = {seq.limit_energy:.10f}")
    print(f"{'h':>11} {'sigma':>5} {'n':>5} {'E_h':>14} {'gap':>11} {'h^(2-a) int k^2':>16} {'sup dist':>10}")
    for i, (h, _) in enumerate(seq.members):
        print(f"{h:11.4e} {seq.sigma[i]:5d} {seq.n_mollify[i]:5d} {seq.energies_h[i]:14.10f} "
              f"{seq.gaps[i]:11.3e} {seq.bending_scaled[i]:16.3e} {seq.sup_distances[i]:10.3e}")
    print("weak pairings at the last member:")
    for (name, _), v in zip(WEAK_TESTS, seq.pairings[-1]):
        print(f"  {name:12s} {v:.3e}")
    print(f"sigma rule holds: {seq.sigma_rule_holds()}; gap decreasing over last 3: {seq.gap_decreasing()}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        write_json(seq.to_dict(), args.out)
    return 0 if seq.sigma_rule_holds() and seq.gap_decreasing() else 1


if __name__ == "__main__":
    raise SystemExit(main())
