"""Linear friction through a right Caputo term.

Minimizes int_0^1 m/2 u'^2 - u^2/2 + gamma/2 (C_D_b^(1/2) u)^2 dt with
u(0) = 1, u(1) = 0 for several friction strengths gamma, and writes the
trajectories side by side. gamma = 0 is the frictionless oscillator, whose
exact minimizer sin(1 - t) / sin(1) is printed as a reference column.

    python scripts/friction_demo.py [--n 129] [--out results/friction.csv]
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from fracdual.varcalc import friction_problem, minimize

GAMMAS = (0.0, 0.1, 0.5, 2.0)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--n", type=int, default=129)
    parser.add_argument("--m", type=float, default=1.0)
    parser.add_argument("--out")
    args = parser.parse_args(argv)

    columns, ok = {}, True
    for gamma in GAMMAS:
        res = minimize(friction_problem(args.m, gamma, args.n))
        ok &= res.converged
        columns[f"gamma={gamma}"] = res.minimizer.values
        print(
            f"gamma={gamma:<4} J={res.functional_value:.10f} |grad|={res.gradient_norm:.2e} "
            f"iterations={res.iterations} converged={res.converged}",
            file=sys.stderr,
        )
    x = res.minimizer.grid.nodes
    if args.m == 1.0:
        columns["exact gamma=0"] = np.sin(1.0 - x) / np.sin(1.0)

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["x", *columns])
    for i, xi in enumerate(x):
        w.writerow([repr(float(xi)), *(repr(float(c[i])) for c in columns.values())])
    if args.out:
        out.close()
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
