"""Error of the p = 2 Dirichlet solve against the closed-form torsion profile on (-1, 1).

Usage: python scripts/oracle_convergence.py [--s 0.25 0.5 0.75] [--M 65 129 257 513] [--csv out.csv]
"""
import argparse
import csv
import sys
import time

import numpy as np
from scipy.special import gamma as G

from fracsing.geometry import build_interval
from fracsing.kernel import Field, assemble
from fracsing.solver import SolverConfig, solve_dirichlet


def torsion(x, s):
    # A u = 1 with A = 2 p.v. int (u(x) - u(y)) |x - y|^(-1-2s) dy, i.e. (2 / C_s) (-Delta)^s
    c_s = s * 4 ** s * G(0.5 + s) / (np.sqrt(np.pi) * G(1 - s))
    return 0.5 * c_s * G(0.5) / (4 ** s * G(0.5 + s) * G(1 + s)) * np.maximum(1 - x ** 2, 0) ** s


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--M", type=int, nargs="+", default=[65, 129, 257, 513],
                    help="interior node counts")
    ap.add_argument("--pad", type=float, default=0.25)
    ap.add_argument("--csv", help="write the table here")
    args = ap.parse_args(argv)

    rows = []
    for s in args.s:
        prev = None
        for M in args.M:
            dom = build_interval(-1.0, 1.0, M + 2, args.pad)
            t0 = time.perf_counter()
            W = assemble(dom, s, 2.0, strict=False)
            u = solve_dirichlet(W, Field.from_interior(dom, np.ones(M)), SolverConfig()).interior
            ref = torsion(dom.interior_points()[:, 0], s)
            err = float(np.max(np.abs(u - ref)) / np.max(ref))
            rate = None if prev is None else np.log2(prev / err)
            rows.append(dict(s=s, M=M, h=dom.spacing[0], rel_error=err, rate=rate,
                             seconds=time.perf_counter() - t0))
            prev = err
            print(f"s={s:<5g} M={M:<5d} rel.err={err:.4e}  "
                  f"rate={'' if rate is None else f'{rate:.2f}'}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, rows[0].keys())
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
