"""Grid-doubling convergence tables.

Prints, for the numeric operator schemes and for both integration by parts
variants, the error or residual on n = 65 ... 2049 together with the observed
order between consecutive grids.

    python scripts/convergence_study.py [--out results/convergence.csv]
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from fracdual import ClosedFormFn, FracOrder, Grid, OperatorKind, apply
from fracdual.ibp import convergence_study

SIZES = [65, 129, 257, 513, 1025, 2049]


def operator_rows(op_name: str, alpha: float, f) -> list[dict]:
    op = OperatorKind.parse(op_name)
    order = FracOrder(alpha)
    rows, prev = [], None
    for n in SIZES:
        grid = Grid(f.interval, n)
        exact = apply(op, order, f, grid, "analytic")
        approx = apply(op, order, f.sample(grid), grid, "numeric")
        keep = ~(exact.flagged | approx.flagged)
        err = float(np.max(np.abs(exact.values[keep] - approx.values[keep])))
        rate = None if prev is None else float(np.log2(prev / err))
        rows.append({"case": f"{op_name} alpha={alpha}", "n_points": n, "error": err, "observed_order": rate})
        prev = err
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--out", help="write a CSV table here")
    args = parser.parse_args(argv)

    f = ClosedFormFn.sin(2.0, 0.3).on(0.0, 1.0)
    rows = []
    for alpha in (0.25, 0.5, 0.75):
        for op in ("left-rl-integral", "right-rl-integral", "left-caputo", "right-caputo"):
            rows += operator_rows(op, alpha, f)
    g = ClosedFormFn.exp(0.7).on(0.0, 1.0)
    for alpha in (0.25, 0.5, 0.75, 1.0):
        for variant in ("left", "right"):
            for r in convergence_study(variant, FracOrder(alpha), f, g, SIZES):
                rows.append(
                    {
                        "case": f"ibp-{variant} alpha={alpha}",
                        "n_points": r["n_points"],
                        "error": abs(r["residual"]),
                        "observed_order": r["observed_order"],
                    }
                )

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(out, fieldnames=["case", "n_points", "error", "observed_order"], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
