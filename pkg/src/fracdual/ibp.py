"""Fractional integration by parts, checked numerically.

Left form (Caputo derivative on the left):

    int_a^b g * (C_aD^alpha f) = int_a^b f * (D_b^alpha g)
                                 + sum_j [ D_b^(alpha+j-n) g * f^(n-1-j) ]_a^b

Right form (Caputo derivative on the right):

    int_a^b g * (C_D_b^alpha f) = int_a^b f * (D_a^alpha g)
                                  - sum_j [ D_a^(alpha+j-n) g * (-1)^(n-1-j) f^(n-1-j) ]_a^b

An RL "derivative" of negative order is the RL integral of the opposite
order. The (-1)^m in the right form makes the integer-order factor a
right-sided derivative; with it the two forms map onto each other exactly
under x -> -x, which is also how the right form is derived from the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fracops import (
    FracOrder,
    Kind,
    OperatorKind,
    OperatorResult,
    Side,
    UnsupportedOrderError,
    apply,
    gamma,
)
from .gridfn import Analytic, FuncRep, Grid, SampledFn

__all__ = [
    "IbpResidual",
    "boundary_operator",
    "check_ibp_left",
    "check_ibp_right",
    "trapezoid",
    "gregory",
    "convergence_study",
]


@dataclass
class IbpResidual:
    variant: str
    lhs: float
    rhs_integral: float
    boundary_sum: float
    residual: float
    grid: Grid
    order: FracOrder
    excluded_nodes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "lhs": self.lhs,
            "rhs_integral": self.rhs_integral,
            "boundary_sum": self.boundary_sum,
            "residual": self.residual,
            "grid": {"a": self.grid.a, "b": self.grid.b, "n_points": self.grid.n_points},
            "order": {"alpha": self.order.alpha, "n": self.order.n},
            "excluded_nodes": self.excluded_nodes,
        }


def trapezoid(values: np.ndarray, h: float, flagged: np.ndarray | None = None) -> float:
    """Composite trapezoid rule. A cell touching one flagged node uses the
    value at its other end only (one-sided cell); a cell with two flagged
    ends contributes 0."""
    v = np.asarray(values, dtype=float)
    if flagged is None or not np.any(flagged):
        return float(h * (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1]))
    ok = ~np.asarray(flagged, bool)
    left, right = v[:-1], v[1:]
    lok, rok = ok[:-1], ok[1:]
    cells = np.where(
        lok & rok,
        0.5 * (np.where(lok, left, 0.0) + np.where(rok, right, 0.0)),
        np.where(lok, left, 0.0) + np.where(rok, right, 0.0),
    )
    return float(h * cells.sum())


def gregory(values: np.ndarray, h: float) -> float:
    """Trapezoid rule with the first-difference Gregory end correction,
    third order for smooth integrands. Needs at least 4 nodes; falls back
    to the plain trapezoid below that."""
    v = np.asarray(values, dtype=float)
    t = trapezoid(v, h)
    if v.size < 4:
        return t
    return t - h / 12.0 * ((v[-1] - v[-2]) - (v[1] - v[0]))


def boundary_operator(
    shift: float, g: FuncRep, grid: Grid | None = None, side: Side = Side.LEFT, method: str = "auto"
) -> OperatorResult:
    """RL operator of signed order ``shift`` applied to ``g``: the integral
    of order ``-shift`` if negative, the derivative if positive, ``g`` itself
    at zero. Shifts come from alpha + j - n with n in {1, 2}."""
    if grid is None:
        grid = g.grid
    if not -2.0 < shift <= 1.0:
        raise UnsupportedOrderError(f"boundary shift {shift} implies n > 2, which is not supported")
    if shift == 0.0:
        values = g.values if isinstance(g, SampledFn) else g.values(grid)
        method_used = "numeric" if isinstance(g, SampledFn) else "analytic"
        return OperatorResult(grid, values, method_used, "identity")
    kind = Kind.RL_INTEGRAL if shift < 0 else Kind.RL_DERIVATIVE
    return apply(OperatorKind(side, kind), FracOrder(abs(shift)), g, grid, method)


def _node_values(f: FuncRep, grid: Grid) -> np.ndarray:
    return f.values if isinstance(f, SampledFn) else f.values(grid)


def _endpoint_derivative(f: FuncRep, m: int, index: int, grid: Grid) -> float:
    if isinstance(f, SampledFn):
        if m:
            raise UnsupportedOrderError("boundary terms with n = 2 need a closed-form f")
        return float(f.values[index])
    return float(f.derivative(grid.nodes[index], m))


def _check(order: FracOrder, f: FuncRep, g: FuncRep, grid: Grid | None):
    if order.n > 2:
        raise UnsupportedOrderError(f"integration by parts is implemented for n <= 2, got alpha={order.alpha}")
    if grid is None:
        grid = f.grid
    if f.interval != grid.interval or g.interval != grid.interval:
        raise ValueError("f, g and the grid must share one interval")
    return grid


def _boundary_sum(order, f, g, grid, g_side: Side, companion_sign, method) -> float:
    n = order.n
    total = 0.0
    for j in range(n):
        m = n - 1 - j
        op_vals = boundary_operator(order.alpha + j - n, g, grid, g_side, method)
        sign = companion_sign**m
        bracket = 0.0
        for idx, weight in ((grid.n_points - 1, 1.0), (0, -1.0)):
            comp = sign * _endpoint_derivative(f, m, idx, grid)
            if comp == 0.0:
                continue
            if op_vals.flagged[idx]:
                raise FloatingPointError(
                    f"boundary term j={j} diverges at x={grid.nodes[idx]} (shift {order.alpha + j - n})"
                )
            bracket += weight * op_vals.values[idx] * comp
        total += bracket
    return total


def _integral_against(w: FuncRep, res: OperatorResult, grid: Grid, method: str) -> float:
    """int_a^b w * res by the end-corrected trapezoid. Singular terms c * d**e at the anchor are integrated
    exactly against w as an RL integral of order e + 1 from the other end,
    evaluated at the anchor; the finite remainder goes to the trapezoid."""
    wv = _node_values(w, grid)
    if not res.flagged.any():
        return gregory(wv * res.values, grid.h)
    if res.regular is None or any(e <= -1 for _, e in res.singular):
        return trapezoid(np.where(res.flagged, 0.0, wv * np.nan_to_num(res.values)), grid.h, res.flagged)
    total = gregory(wv * res.regular, grid.h)
    idx = 0 if res.anchor is Side.LEFT else grid.n_points - 1
    opposite = OperatorKind(res.anchor.mirror, Kind.RL_INTEGRAL)
    for c, e in res.singular:
        moment = apply(opposite, FracOrder(e + 1), w, grid, method).values[idx]
        total += c * gamma(e + 1) * moment
    return total


def check_ibp_left(
    order: FracOrder, f: FuncRep, g: FuncRep, grid: Grid | None = None, method: str = "auto"
) -> IbpResidual:
    """Residual of the left form: lhs - (rhs_integral + boundary_sum)."""
    grid = _check(order, f, g, grid)
    cap = apply(OperatorKind(Side.LEFT, Kind.CAPUTO), order, f, grid, method)
    dg = apply(OperatorKind(Side.RIGHT, Kind.RL_DERIVATIVE), order, g, grid, method)
    lhs = _integral_against(g, cap, grid, method)
    rhs = _integral_against(f, dg, grid, method)
    bsum = _boundary_sum(order, f, g, grid, Side.RIGHT, 1.0, method)
    excluded = np.flatnonzero(cap.flagged | dg.flagged).tolist()
    return IbpResidual("left", lhs, rhs, bsum, lhs - (rhs + bsum), grid, order, excluded)


def check_ibp_right(
    order: FracOrder, f: FuncRep, g: FuncRep, grid: Grid | None = None, method: str = "auto"
) -> IbpResidual:
    """Residual of the right form: lhs - (rhs_integral - boundary_sum)."""
    grid = _check(order, f, g, grid)
    cap = apply(OperatorKind(Side.RIGHT, Kind.CAPUTO), order, f, grid, method)
    dg = apply(OperatorKind(Side.LEFT, Kind.RL_DERIVATIVE), order, g, grid, method)
    lhs = _integral_against(g, cap, grid, method)
    rhs = _integral_against(f, dg, grid, method)
    bsum = _boundary_sum(order, f, g, grid, Side.LEFT, -1.0, method)
    excluded = np.flatnonzero(cap.flagged | dg.flagged).tolist()
    return IbpResidual("right", lhs, rhs, bsum, lhs - (rhs - bsum), grid, order, excluded)


def convergence_study(
    variant: str,
    order: FracOrder,
    f: Analytic,
    g: Analytic,
    sizes: list[int],
    method: str = "auto",
) -> list[dict]:
    """Residuals over a sequence of grids, with the observed order
    log(|r_prev| / |r|) / log(h_prev / h) for each refinement."""
    check = check_ibp_left if variant == "left" else check_ibp_right
    rows = []
    prev = None
    for n_points in sizes:
        grid = Grid(f.interval, n_points)
        r = check(order, f, g, grid, method)
        row = {"n_points": n_points, "residual": r.residual, "observed_order": None}
        if prev is not None and prev[1] != 0.0 and r.residual != 0.0:
            row["observed_order"] = float(np.log(abs(prev[1] / r.residual)) / np.log(prev[0] / grid.h))
        rows.append(row)
        prev = (grid.h, r.residual)
    return rows
