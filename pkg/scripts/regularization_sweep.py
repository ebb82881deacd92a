"""Trace the monotone approximations u_n along a long n-schedule.

Prints, per stage, the interior minimum, sup increment, [u_n]^p and the
rescaled energy [u_n^q]^p / sum f V with q = (gamma + p - 1) / p.

Usage: python scripts/regularization_sweep.py --p 2 --s 0.3 --gamma 2 --M 65 --nmax 256
"""
import argparse
import sys

import numpy as np

from fracsing.geometry import build_interval
from fracsing.solver import ProblemSpec, SolverConfig, solve_singular


def schedule(nmax):
    n, out = 1, []
    while n <= nmax:
        out.append(n)
        n *= 2
    return tuple(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--s", type=float, default=0.3)
    ap.add_argument("--gamma", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--M", type=int, default=65)
    ap.add_argument("--nmax", type=int, default=256)
    args = ap.parse_args(argv)

    dom = build_interval(-1.0, 1.0, args.M, 0.25)
    cfg = SolverConfig(n_schedule=schedule(args.nmax))
    for gamma in args.gamma:
        rep = solve_singular(ProblemSpec(args.p, args.s, gamma, 1), dom, cfg)
        print(f"\ngamma={gamma:g}  converged={rep.converged}  "
              f"extrapolation error={rep.extrapolation_error}")
        print(f"{'n':>5} {'min(central)':>13} {'sup step':>10} {'[u]^p':>10} {'[u^q]^p/mass':>13}")
        for r in rep.records:
            step = "" if r.sup_change is None else f"{r.sup_change:.3e}"
            print(f"{r.n:5d} {r.interior_min:13.6f} {step:>10} {r.seminorm:10.4f} "
                  f"{r.seminorm_boundary_power / r.source_mass:13.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
