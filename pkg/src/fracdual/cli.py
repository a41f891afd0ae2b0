"""Command-line interface.

    fracdual eval --op left-rl-integral --alpha 0.5 --f exp:lam=1 --n 65
    fracdual check-duality --op left-caputo --alpha 0.5 --f pow:beta=2 --n 257
    fracdual check-ibp --variant right --alpha 0.5 --f pow:beta=2 --g pow:beta=3 --study 129:2049
    fracdual check-bound --alpha 0.25,0.5,0.75 --r 1,2,inf --samples 50
    fracdual minimize --term cap2:0.5 --term u2:0.5 --alpha 0.5 --ua 1 --ub 0
    fracdual demo-friction --report friction.json

Every subcommand also reads ``--config FILE`` with ``key = value`` lines
using the long flag names; flags on the command line take precedence.
Exit codes: 0 success or pass, 1 failing verdict, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from importlib import resources

import numpy as np

from .duality import check_duality
from .fracops import FracOrder, OperatorKind, apply
from .gridfn import Grid, parse_funcspec
from .ibp import check_ibp_left, check_ibp_right, convergence_study
from .varcalc import (
    LagrangianSpec,
    Term,
    VariationalProblem,
    check_norm_bound,
    diagnose_tonelli,
    evaluate_dual_functional,
    friction_problem,
    minimize,
    random_smooth,
)

log = logging.getLogger("fracdual")

DUAL_ANCHOR_NOTE = (
    "the dual problem lives on [-b, -a]; its left operators are anchored at -b, "
    "and E* is the set of reflections of admissible functions"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line diagnostics, no usage dump
        self.exit(2, f"{self.prog}: error: {message}\n")


# -- argument types ------------------------------------------------------------

def _positive(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return v


def _n_points(text: str) -> int:
    n = int(text)
    if n < 2:
        raise argparse.ArgumentTypeError(f"need at least 2 grid points, got {n}")
    return n


def _funcspec(text: str):
    try:
        return parse_funcspec(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc).splitlines()[0]) from None


def _operator(text: str) -> OperatorKind:
    try:
        return OperatorKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _study(text: str) -> list[int]:
    """``N0:N1`` is the doubling sequence N0, 2(N0-1)+1, ... up to N1."""
    try:
        lo, hi = (int(s) for s in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N0:N1, got {text!r}") from None
    if lo < 3 or hi <= lo:
        raise argparse.ArgumentTypeError(f"need 3 <= N0 < N1, got {text!r}")
    sizes = [lo]
    while sizes[-1] < hi:
        sizes.append(2 * (sizes[-1] - 1) + 1)
    if sizes[-1] != hi:
        raise argparse.ArgumentTypeError(f"{hi} is not reached from {lo} by doubling the cell count")
    return sizes


def _float_list(text: str, check=_positive) -> list[float]:
    return [check(s) for s in text.split(",") if s.strip()]


def _r_list(text: str) -> list[float]:
    out = []
    for s in text.split(","):
        s = s.strip().lower()
        r = math.inf if s in ("inf", "infinity") else float(s)
        if not r >= 1:
            raise argparse.ArgumentTypeError(f"r must lie in [1, inf], got {s!r}")
        out.append(r)
    return out


def _term(text: str) -> Term:
    kind, _, rest = text.partition(":")
    coef_text, _, spec = rest.partition(":")
    try:
        coef = float(coef_text) if coef_text else 1.0
        fn = parse_funcspec(spec) if spec else None
        return Term(kind, coef, fn)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad term {text!r}: {str(exc).splitlines()[0]}") from None


# -- parser --------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, fmt: str) -> None:
    p.add_argument("--config", metavar="FILE", help="key = value lines using the long flag names")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--output", metavar="PATH", help="write the main output here instead of stdout")
    p.add_argument("--verbose", action="store_true")


def _interval(p: argparse.ArgumentParser, n: int) -> None:
    p.add_argument("--a", type=_finite, default=0.0)
    p.add_argument("--b", type=_finite, default=1.0)
    p.add_argument("--n", type=_n_points, default=n, help="number of grid points")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracdual", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="apply one operator and print node values")
    _common(p, "csv")
    _interval(p, 65)
    p.add_argument("--op", type=_operator, required=True)
    p.add_argument("--alpha", type=_positive, required=True)
    p.add_argument("--f", type=_funcspec, required=True)
    p.add_argument("--method", choices=("auto", "analytic", "numeric"), default="auto")

    p = sub.add_parser("check-duality", help="direct evaluation against evaluation through the dual")
    _common(p, "json")
    _interval(p, 257)
    p.add_argument("--op", type=_operator, required=True)
    p.add_argument("--alpha", type=_positive, required=True)
    p.add_argument("--f", type=_funcspec, required=True)
    p.add_argument("--method", choices=("auto", "analytic", "numeric"), default="auto")
    p.add_argument("--tol", type=_positive)

    p = sub.add_parser("check-ibp", help="integration by parts residual or convergence table")
    _common(p, "json")
    _interval(p, 257)
    p.add_argument("--variant", choices=("left", "right"), required=True)
    p.add_argument("--alpha", type=_positive, required=True)
    p.add_argument("--f", type=_funcspec, required=True)
    p.add_argument("--g", type=_funcspec, required=True)
    p.add_argument("--method", choices=("auto", "analytic", "numeric"), default="auto")
    p.add_argument("--study", type=_study, metavar="N0:N1")
    p.add_argument("--tol", type=_positive, help="single-grid pass threshold (default: h)")
    p.add_argument("--min-order", type=float, default=1.0, help="study pass threshold on observed order")

    p = sub.add_parser("check-bound", help="L^r bound of the right RL integral on random samples")
    _common(p, "json")
    _interval(p, 257)
    p.add_argument("--alpha", type=_float_list, default=[0.25, 0.5, 0.75])
    p.add_argument("--r", type=_r_list, default=[1.0, 2.0, math.inf])
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--f", type=_funcspec, help="check this function instead of random samples")
    p.add_argument("--slack", type=_positive, default=1e-6)
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("minimize", help="direct-method minimizer of a right fractional problem")
    _common(p, "csv")
    _interval(p, 65)
    p.add_argument("--term", type=_term, action="append", metavar="KIND:COEF[:FUNCSPEC]")
    p.add_argument("--alpha", type=_positive, default=0.5)
    p.add_argument("--p", type=_positive, default=2.0)
    p.add_argument("--ua", type=_finite)
    p.add_argument("--ub", type=_finite)
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--report", metavar="PATH", help="also write the JSON result here")
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("demo-friction", help="linear friction with a right Caputo dissipation term")
    _common(p, "csv")
    _interval(p, 129)
    p.add_argument("--m", type=_positive, default=1.0)
    p.add_argument("--gamma", type=_finite, default=0.1)
    p.add_argument("--ua", type=_finite, default=1.0)
    p.add_argument("--ub", type=_finite, default=0.0)
    p.add_argument("--report", metavar="PATH", help="also write the JSON result here")
    return parser


# -- config files --------------------------------------------------------------

def _read_config(path: str) -> list[tuple[str, str]]:
    pairs = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        pairs.append((key.strip().replace("_", "-"), value.strip()))
    return pairs


def _config_argv(sub: argparse.ArgumentParser, pairs, user_argv: list[str]) -> list[str]:
    """Translate config pairs into flags placed before the user's flags, so
    the user's win. Repeatable flags given by the user replace the file's."""
    actions = {a.option_strings[0]: a for a in sub._actions if a.option_strings}
    out = []
    for key, value in pairs:
        flag = f"--{key}"
        action = actions.get(flag)
        if action is None or key == "config":
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._AppendAction) and flag in user_argv:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                out.append(flag)
            continue
        out.extend([flag, value])
    return out


def _config_path(argv: list[str]) -> str | None:
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.partition("=")[2]
    return path


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    path = _config_path(argv)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((tok for tok in argv if tok in subparsers.choices), None)
    if path is not None and command is not None:
        # config flags go before the user's, so flags on the command line win
        rest = argv[argv.index(command) + 1 :]
        pairs = _read_config(path)
        argv = [*argv[: argv.index(command) + 1], *_config_argv(subparsers.choices[command], pairs, rest), *rest]
    return parser.parse_args(argv)


# -- output --------------------------------------------------------------------

def _clean(obj):
    """Make a report JSON-safe: non-finite floats become null, numpy
    scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if not math.isfinite(v) else repr(float(v))
    if v is None:
        return ""
    return str(v)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid_dict(grid: Grid) -> dict:
    return {"a": grid.a, "b": grid.b, "n_points": grid.n_points}


def _nodes_csv(grid: Grid, values, flagged=None) -> str:
    x = grid.nodes
    if flagged is not None and np.any(flagged):
        return _csv(["x", "value", "flag"], zip(x, values, np.asarray(flagged, int)))
    return _csv(["x", "value"], zip(x, values))


def report_schema() -> dict:
    """The JSON schema every JSON report validates against."""
    return json.loads(resources.files("fracdual").joinpath("schemas/report.schema.json").read_text())


# -- subcommands ---------------------------------------------------------------

def _cmd_eval(args) -> int:
    grid = Grid.on(args.a, args.b, args.n)
    res = apply(args.op, FracOrder(args.alpha), args.f.on(args.a, args.b), grid, args.method)
    if args.format == "csv":
        _emit(_nodes_csv(grid, res.values, res.flagged), args.output)
    else:
        _emit(
            _dumps(
                {
                    "report_type": "eval",
                    "operator": args.op.name,
                    "order": {"alpha": args.alpha, "n": FracOrder(args.alpha).n},
                    "grid": _grid_dict(grid),
                    "method": res.method,
                    "scheme": res.scheme,
                    "x": grid.nodes.tolist(),
                    "value": res.values.tolist(),
                    "flagged_nodes": res.flagged_nodes,
                }
            ),
            args.output,
        )
    return 0


def _cmd_check_duality(args) -> int:
    grid = Grid.on(args.a, args.b, args.n)
    rep = check_duality(args.op, FracOrder(args.alpha), args.f.on(args.a, args.b), grid, args.tol, args.method)
    d = {"report_type": "identity", **rep.to_dict()}
    if args.format == "json":
        _emit(_dumps(d), args.output)
    else:
        keys = ["identity_name", "verdict", "max_abs_residual", "mean_abs_residual", "tolerance"]
        _emit(_csv(keys, [[d[k] for k in keys]]), args.output)
    if rep.diagnostic:
        log.error("%s", rep.diagnostic)
    return 0 if rep.passed else 1


def _cmd_check_ibp(args) -> int:
    order = FracOrder(args.alpha)
    f, g = args.f.on(args.a, args.b), args.g.on(args.a, args.b)
    if args.study:
        rows = convergence_study(args.variant, order, f, g, args.study, args.method)
        orders = [r["observed_order"] for r in rows[1:]]
        ok = all(o is None or o >= args.min_order for o in orders)
        if args.format == "csv":
            _emit(
                _csv(["n_points", "residual", "observed_order"], ([r["n_points"], r["residual"], r["observed_order"]] for r in rows)),
                args.output,
            )
        else:
            _emit(
                _dumps(
                    {
                        "report_type": "ibp-study",
                        "variant": args.variant,
                        "order": {"alpha": order.alpha, "n": order.n},
                        "rows": rows,
                        "min_order": args.min_order,
                        "verdict": "pass" if ok else "fail",
                    }
                ),
                args.output,
            )
        return 0 if ok else 1
    grid = Grid.on(args.a, args.b, args.n)
    check = check_ibp_left if args.variant == "left" else check_ibp_right
    res = check(order, f, g, grid, args.method)
    tol = grid.h if args.tol is None else args.tol
    ok = abs(res.residual) <= tol
    d = {"report_type": "ibp", **res.to_dict(), "tolerance": tol, "verdict": "pass" if ok else "fail"}
    if args.format == "json":
        _emit(_dumps(d), args.output)
    else:
        keys = ["variant", "lhs", "rhs_integral", "boundary_sum", "residual", "verdict"]
        _emit(_csv(keys, [[d[k] for k in keys]]), args.output)
    return 0 if ok else 1


def _cmd_check_bound(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    grid = Grid.on(args.a, args.b, args.n)
    rng = np.random.default_rng(args.seed)
    if args.f is not None:
        funcs = [args.f.on(args.a, args.b).sample(grid)]
    else:
        funcs = [random_smooth(grid, rng) for _ in range(args.samples)]
    cases = []
    for alpha in args.alpha:
        for r in args.r:
            for i, f in enumerate(funcs):
                rep = check_norm_bound(FracOrder(alpha), f, r, args.slack)
                cases.append({"sample": i, **rep.to_dict()})
    failed = sum(c["verdict"] != "pass" for c in cases)
    if args.format == "json":
        _emit(
            _dumps(
                {
                    "report_type": "bound-sweep",
                    "grid": _grid_dict(grid),
                    "seed": args.seed,
                    "n_cases": len(cases),
                    "n_failed": failed,
                    "verdict": "pass" if failed == 0 else "fail",
                    "cases": cases,
                }
            ),
            args.output,
        )
    else:
        rows = ([c["order"]["alpha"], c["extra"]["r"], c["sample"], c["extra"]["lhs_norm"], c["extra"]["bound"], c["verdict"]] for c in cases)
        _emit(_csv(["alpha", "r", "sample", "lhs_norm", "bound", "verdict"], rows), args.output)
    return 0 if failed == 0 else 1


def _result_report(prob: VariationalProblem, result, seed: int, extra: dict) -> dict:
    diag = diagnose_tonelli(prob, seed)
    return {
        **extra,
        **result.to_dict(),
        "grid": _grid_dict(prob.grid),
        "order": {"alpha": prob.order.alpha, "n": prob.order.n},
        "p": prob.p,
        "p_adjoint": prob.p_adjoint,
        "dual_functional_value": evaluate_dual_functional(prob, result.minimizer),
        "dual_interpretation": DUAL_ANCHOR_NOTE,
        "diagnostics": diag.to_dict(),
    }


def _finish_minimization(args, prob, result, extra: dict) -> int:
    report = _result_report(prob, result, getattr(args, "seed", 42), extra)
    if args.format == "csv":
        _emit(_nodes_csv(prob.grid, result.minimizer.values), args.output)
    else:
        _emit(_dumps(report), args.output)
    if args.report:
        _emit(_dumps(report), args.report)
    if not result.converged:
        print(
            f"fracdual: failed: no convergence, gradient norm {result.gradient_norm:.3e} after {result.iterations} iterations",
            file=sys.stderr,
        )
    return 0 if result.converged else 1


def _cmd_minimize(args) -> int:
    if not args.term:
        raise UsageError("minimize needs at least one --term")
    if args.ua is None and args.ub is None:
        raise UsageError("minimize needs a boundary condition (--ua and/or --ub)")
    if args.p <= 1:
        raise UsageError(f"--p must exceed 1, got {args.p}")
    prob = VariationalProblem(
        LagrangianSpec(tuple(args.term)),
        Grid.on(args.a, args.b, args.n),
        FracOrder(args.alpha),
        p=args.p,
        u_a=args.ua,
        u_b=args.ub,
    )
    result = minimize(prob, tol=args.tol, max_iter=args.max_iter)
    return _finish_minimization(args, prob, result, {"report_type": "minimization"})


def _cmd_demo_friction(args) -> int:
    prob = friction_problem(args.m, args.gamma, args.n, args.a, args.b, args.ua, args.ub)
    result = minimize(prob)
    extra = {"report_type": "friction-demo", "m": args.m, "gamma": args.gamma, "potential": "u**2/2"}
    return _finish_minimization(args, prob, result, extra)


COMMANDS = {
    "eval": _cmd_eval,
    "check-duality": _cmd_check_duality,
    "check-ibp": _cmd_check_ibp,
    "check-bound": _cmd_check_bound,
    "minimize": _cmd_minimize,
    "demo-friction": _cmd_demo_friction,
}


def _check_threads() -> None:
    threads = os.environ.get("FRACDUAL_THREADS")
    if threads is not None and not (threads.strip().isdigit() and int(threads) > 0):
        raise UsageError(f"FRACDUAL_THREADS must be a positive integer, got {threads!r}")


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        _check_threads()
        args = parse_args(argv)
    except UsageError as exc:
        print(f"fracdual: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fracdual: error: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"fracdual: failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"fracdual: error: {str(exc).splitlines()[0]}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
