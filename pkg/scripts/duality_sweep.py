"""Direct evaluation against evaluation through the dual function, for every
operator, a set of orders and closed-form functions, on both the analytic and
the numeric path. One line per case with the maximum residual.

    python scripts/duality_sweep.py
"""

from __future__ import annotations

import sys

from fracdual import ALL_OPERATORS, ClosedFormFn, FracOrder, Grid, Kind, check_duality
from fracdual.gridfn import format_funcspec

FUNCTIONS = [
    ClosedFormFn.const(2.0),
    ClosedFormFn.poly(1.0, -2.0, 0.5, 3.0),
    ClosedFormFn.power(1.5),
    ClosedFormFn.power(2.5, right=True),
    ClosedFormFn.exp(-0.8),
    ClosedFormFn.sin(3.0, 0.2),
]


def main() -> int:
    grid = Grid.on(0.5, 2.0, 129)
    failures = 0
    print(f"{'operator':<22}{'alpha':>6}  {'function':<34}{'path':<9}{'residual':>12}  verdict")
    for op in ALL_OPERATORS:
        for alpha in (0.25, 0.5, 0.75, 1.25, 1.5):
            for fn in FUNCTIONS:
                f = fn.on(grid.a, grid.b)
                for method in ("analytic", "numeric"):
                    if method == "numeric" and (alpha > 1 or op.kind is Kind.CAPUTO and alpha >= 1):
                        continue
                    rep = check_duality(op, FracOrder(alpha), f, grid, method=method)
                    failures += not rep.passed
                    print(
                        f"{op.name:<22}{alpha:>6}  {format_funcspec(fn):<34}{method:<9}"
                        f"{rep.max_abs_residual:>12.3e}  {rep.verdict}"
                    )
    print(f"{failures} failing case(s)")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
