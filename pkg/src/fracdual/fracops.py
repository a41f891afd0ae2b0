"""Left and right Riemann-Liouville integrals and derivatives and Caputo
derivatives, evaluated at the nodes of a uniform grid.

Two evaluation routes exist:

* analytic -- the function is expanded in powers of the distance ``d`` from
  the operator's anchor endpoint (``d = x - a`` for left operators,
  ``d = b - x`` for right ones) and the power rule is applied term by term.
  In the distance variable all six operators share one formula, which is
  why both sides are handled by the same code.
* numeric -- product-trapezoid quadrature for the RL integral, the L1 scheme
  for the Caputo derivative, and Caputo plus boundary corrections for the RL
  derivative. Right-side weight matrices are assembled natively (not by
  reflecting the left ones).

A power function anchored at the opposite endpoint with a non-integer
exponent has no expansion about the operator's anchor; it is handled in
closed form through the Gauss hypergeometric function instead.

Integer orders reduce to iterated integrals and classical derivatives, with
the factor (-1)**n on the right side.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import hyp2f1

from .gridfn import Analytic, FuncRep, Grid, SampledFn

__all__ = [
    "FracOrder",
    "Side",
    "Kind",
    "OperatorKind",
    "OperatorResult",
    "UnsupportedOrderError",
    "ALL_OPERATORS",
    "gamma",
    "apply",
    "rl_from_caputo",
    "expansion",
    "weight_matrix",
]


class UnsupportedOrderError(ValueError):
    """The requested order/representation combination has no scheme."""


@dataclass(frozen=True)
class FracOrder:
    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not (math.isfinite(a) and a > 0):
            raise ValueError(f"order must be a positive real, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def n(self) -> int:
        """Smallest integer with n - 1 < alpha <= n."""
        return math.ceil(self.alpha)

    @property
    def is_integer(self) -> bool:
        return self.alpha == self.n


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def mirror(self) -> Side:
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


class Kind(enum.Enum):
    RL_INTEGRAL = "rl-integral"
    RL_DERIVATIVE = "rl-derivative"
    CAPUTO = "caputo"


@dataclass(frozen=True)
class OperatorKind:
    side: Side
    kind: Kind

    @classmethod
    def parse(cls, name: str) -> OperatorKind:
        side, _, kind = name.partition("-")
        try:
            return cls(Side(side), Kind(kind))
        except ValueError:
            names = ", ".join(op.name for op in ALL_OPERATORS)
            raise ValueError(f"unknown operator {name!r}; expected one of {names}") from None

    @property
    def name(self) -> str:
        return f"{self.side.value}-{self.kind.value}"

    @property
    def mirror(self) -> OperatorKind:
        return OperatorKind(self.side.mirror, self.kind)

    def __str__(self) -> str:
        return self.name


ALL_OPERATORS = tuple(OperatorKind(s, k) for s in Side for k in Kind)


@dataclass(frozen=True, eq=False)
class OperatorResult:
    """Operator values at every node of ``grid``.

    Nodes where the exact operator diverges (an RL derivative at its anchor,
    say) carry ``flagged=True`` and a NaN value; they are excluded from any
    residual computed downstream. When the divergence is known in closed
    form, ``singular`` holds its terms ``(coef, exponent)`` in the distance
    from the ``anchor`` endpoint and ``regular`` the finite remainder, so
    that ``values = regular + sum(coef * d**exponent)`` away from the anchor.
    """

    grid: Grid
    values: np.ndarray
    method: str
    scheme: str
    flagged: np.ndarray = field(default=None)  # type: ignore[assignment]
    singular: tuple[tuple[float, float], ...] = ()
    regular: np.ndarray | None = None
    anchor: Side | None = None

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        flagged = np.zeros(v.shape, bool) if self.flagged is None else np.array(self.flagged, bool)
        v[flagged] = np.nan
        if not np.all(np.isfinite(v[~flagged])):
            bad = np.flatnonzero(~np.isfinite(v) & ~flagged)
            raise FloatingPointError(f"non-finite operator values at unflagged nodes {bad.tolist()}")
        v.setflags(write=False)
        flagged.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "flagged", flagged)
        object.__setattr__(self, "singular", tuple(self.singular))
        if self.regular is not None:
            r = np.array(self.regular, dtype=float)
            r.setflags(write=False)
            object.__setattr__(self, "regular", r)

    @property
    def flagged_nodes(self) -> list[int]:
        return np.flatnonzero(self.flagged).tolist()

    def sampled(self) -> SampledFn:
        if self.flagged.any():
            raise ValueError(f"operator diverges at nodes {self.flagged_nodes}")
        return SampledFn(self.grid, self.values)

    def reflected(self) -> OperatorResult:
        return OperatorResult(
            self.grid.reflected(),
            self.values[::-1],
            self.method,
            self.scheme,
            self.flagged[::-1],
            self.singular,
            None if self.regular is None else self.regular[::-1],
            None if self.anchor is None else self.anchor.mirror,
        )


def gamma(x: float) -> float:
    """Euler gamma function for x > 0."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma is only supported for x > 0, got {x}")
    return math.gamma(x)


def _rgamma(x: float) -> float:
    # 1/Gamma(x), zero at the poles
    if x <= 0 and x == int(x):
        return 0.0
    if x > 170.0:
        return math.exp(-math.lgamma(x))
    return 1.0 / math.gamma(x)


def _gamma_ratio(num: float, den: float) -> float:
    """Gamma(num)/Gamma(den) for num > 0, with Gamma(den) possibly at a pole."""
    if num > 170.0 and den > 0:
        return math.exp(math.lgamma(num) - math.lgamma(den))
    return math.gamma(num) * _rgamma(den)


# -- analytic route ------------------------------------------------------------

_SERIES_MAX_TERMS = 400


def _taylor_shift(coeffs, c: float) -> list[float]:
    """Coefficients (ascending) of p(c + y) for p given highest degree first."""
    a = [float(v) for v in coeffs]
    deg = len(a) - 1
    for i in range(deg):
        for j in range(1, deg - i + 1):
            a[j] += c * a[j - 1]
    return a[::-1]


def expansion(f: Analytic, side: Side) -> list[tuple[float, float]] | None:
    """Terms ``(coef, exponent)`` of f written in powers of the distance
    from the anchor endpoint of ``side``; None when no such expansion is
    available (a non-integer power anchored at the opposite end).

    Entire families are truncated once the terms, measured on the whole
    interval, drop below double-precision resolution.
    """
    fn, iv = f.fn, f.interval
    fam, p = fn.family, fn.params
    anchor = iv.a if side is Side.LEFT else iv.b
    sigma = 1.0 if side is Side.LEFT else -1.0
    L = iv.length

    if fam == "const":
        return [(p[0], 0.0)]
    if fam == "pow":
        beta = p[0]
        if fn.right_anchored == (side is Side.RIGHT):
            return [(1.0, beta)]
        if beta != int(beta):
            return None
        m = int(beta)
        # (x - a)^m = (L - (b - x))^m and mirror
        return [(math.comb(m, k) * L ** (m - k) * (-1.0) ** k, float(k)) for k in range(m + 1)]
    if fam == "poly":
        shifted = _taylor_shift(p, anchor)
        return [(c * sigma**k, float(k)) for k, c in enumerate(shifted)]

    # entire functions: f(anchor + sigma*d) = sum_k c_k d^k
    if fam == "exp":
        lam = sigma * p[0]
        rate = abs(lam)
        c0 = math.exp(p[0] * anchor)
        cycle = None
    else:
        omega, phi = p
        lam = sigma * omega
        rate = abs(lam)
        theta = omega * anchor + phi
        s, c = math.sin(theta), math.cos(theta)
        cycle = (s, c, -s, -c) if fam == "sin" else (c, -s, -c, s)
        c0 = 1.0
    terms = []
    scale = 1.0  # lam^k / k!
    peak = 0.0
    for k in range(_SERIES_MAX_TERMS):
        if k > 0:
            scale *= lam / k
        coef = c0 * scale if cycle is None else scale * cycle[k % 4]
        terms.append((coef, float(k)))
        size = abs(scale) * L**k
        peak = max(peak, size)
        if k > rate * L + 2 and size <= 1e-18 * peak:
            return terms
    raise ValueError(
        f"power series for {fam} with rate {rate} on an interval of length {L} does not converge "
        f"within {_SERIES_MAX_TERMS} terms"
    )


def _distances(grid: Grid, side: Side) -> np.ndarray:
    i = np.arange(grid.n_points, dtype=float)
    if side is Side.RIGHT:
        i = i[::-1]
    return i * grid.h


def _power_rule(terms, kind: Kind, order: FracOrder, d: np.ndarray):
    """Returns (regular values, singular terms, flagged) for ``op`` applied
    to sum(coef * d**e); singular terms are those with a negative exponent."""
    alpha, n = order.alpha, order.n
    regular = np.zeros_like(d)
    singular = []
    for coef, e in terms:
        if coef == 0.0:
            continue
        if kind is Kind.RL_INTEGRAL:
            g, new_e = _gamma_ratio(e + 1, e + alpha + 1), e + alpha
        else:
            if kind is Kind.CAPUTO and e < n:
                if e == int(e):
                    continue  # killed by the n-th derivative
                if e < n - 1:
                    raise UnsupportedOrderError(
                        f"Caputo derivative of order {alpha} is undefined for d**{e}: "
                        f"its {n}-th derivative is not integrable"
                    )
            g, new_e = _gamma_ratio(e + 1, e + 1 - alpha), e - alpha
        if g == 0.0:
            continue
        if new_e < 0:
            singular.append((coef * g, new_e))
        else:
            regular += coef * g * d**new_e
    flagged = (d == 0.0) if singular else np.zeros(d.shape, bool)
    return regular, singular, flagged


def _with_singular(regular, singular, d):
    values = regular.copy()
    pos = d > 0
    for c, e in singular:
        values[pos] += c * d[pos] ** e
    return values


def _opposite_power_iterated_integral(beta: float, n: int, L: float, d_far, d_near):
    """n-fold integral from the anchor of D**beta, where D = distance from the
    far endpoint (D = L - d_near). Closed form of the antiderivative minus its
    Taylor polynomial at the anchor."""
    c = (-1.0) ** n * _gamma_ratio(beta + 1, beta + n + 1)
    out = c * d_far ** (beta + n)
    for k in range(n):
        pk = c * (-1.0) ** k * _gamma_ratio(beta + n + 1, beta + n - k + 1) * L ** (beta + n - k)
        out -= d_near**k / math.factorial(k) * pk
    return out


def _falling(beta: float, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= beta - j
    return out


def _opposite_power_integral(beta: float, mu: float, d: np.ndarray, e: np.ndarray) -> np.ndarray:
    """RL integral of order mu > 0 of e**beta, where d is the distance to the
    operator's anchor and e the distance to the far endpoint:

        d**mu e**beta / Gamma(mu + 1) * 2F1(-beta, mu; mu + 1; -d / e),

    and d**(mu + beta) / ((mu + beta) Gamma(mu)) at e = 0 (NaN if divergent).
    """
    out = np.empty_like(d)
    pos = e > 0
    dp, ep = d[pos], e[pos]
    out[pos] = dp**mu * ep**beta * hyp2f1(-beta, mu, mu + 1.0, -dp / ep) * _rgamma(mu + 1.0)
    if mu + beta > 0:
        out[~pos] = d[~pos] ** (mu + beta) / ((mu + beta) * gamma(mu))
    else:
        out[~pos] = np.nan
    return out


def _opposite_power(kind: Kind, order: FracOrder, beta: float, grid: Grid, side: Side) -> OperatorResult:
    """``kind`` of order alpha applied to a power anchored at the far end."""
    d, e = _distances(grid, side), _distances(grid, side.mirror)
    alpha, n = order.alpha, order.n
    if kind is Kind.RL_INTEGRAL:
        values = _opposite_power_integral(beta, alpha, d, e)
        return OperatorResult(grid, values, "analytic", "hypergeometric", ~np.isfinite(values))
    # Caputo: the n-th derivative along d of e**beta is (-1)**n (beta)_n e**(beta - n)
    c = (-1.0) ** n * _falling(beta, n)
    regular = c * _opposite_power_integral(beta - n, n - alpha, d, e)
    if kind is Kind.CAPUTO:
        return OperatorResult(grid, regular, "analytic", "hypergeometric", ~np.isfinite(regular))
    far_flags = ~np.isfinite(regular)
    L = grid.interval.length
    singular = []
    for k in range(n):
        ck = (-1.0) ** k * _falling(beta, k) * L ** (beta - k)
        g = _rgamma(k - alpha + 1)
        if ck == 0.0 or g == 0.0:
            continue
        if k - alpha < 0:
            singular.append((ck * g, k - alpha))
        else:
            regular = regular + ck * g * d ** (k - alpha)
    flagged = far_flags | ((d == 0.0) if singular else False)
    values = _with_singular(np.where(far_flags, 0.0, regular), singular, d)
    keep_regular = singular and not far_flags.any()
    return OperatorResult(
        grid,
        values,
        "analytic",
        "hypergeometric",
        flagged,
        singular if keep_regular else (),
        regular if keep_regular else None,
        side,
    )


# -- numeric route -------------------------------------------------------------

def _power_diff(m: np.ndarray, s: float) -> np.ndarray:
    """m**s - (m-1)**s for integers m >= 1, without cancellation."""
    out = np.ones_like(m, dtype=float)
    big = m >= 2
    mb = m[big].astype(float)
    out[big] = -(mb**s) * np.expm1(s * np.log1p(-1.0 / mb))
    return out


def _first_only(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    out[0] = v[0]
    return out


@lru_cache(maxsize=64)
def _weights(kind: str, side: str, alpha: float, n: int, h: float) -> np.ndarray:
    if kind == "pt":
        m = np.arange(1, n)
        a0 = _power_diff(m, alpha) / alpha
        a1 = _power_diff(m, alpha + 1) / (alpha + 1)
        far = np.concatenate(([0.0], a1 - (m - 1) * a0))  # weight of the node at distance m
        near = np.concatenate(([0.0], m * a0 - a1, [0.0]))  # node at distance m-1, indexed by m
        diag = far + near[1:]
        scale = h**alpha / math.gamma(alpha)
        if side == "left":
            w = toeplitz(diag, np.zeros(n))
            w[:, 0] = far
        else:
            w = toeplitz(_first_only(diag), diag)
            w[:, -1] = far[::-1]
    elif kind == "l1":
        m = np.arange(n)
        bm = _power_diff(m + 1, 1 - alpha)  # (m+1)^(1-a) - m^(1-a)
        diag = np.concatenate(([bm[0]], bm[1:] - bm[:-1]))
        end = np.concatenate(([0.0], -bm[:-1]))
        scale = h ** (-alpha) / math.gamma(2 - alpha)
        if side == "left":
            w = toeplitz(diag, np.zeros(n))
            w[:, 0] = end
        else:
            w = toeplitz(_first_only(diag), diag)
            w[:, -1] = end[::-1]
    elif kind == "l1d":
        # L1 weights acting on first differences u[i+1] - u[i]: shape (n, n - 1)
        bm = _power_diff(np.arange(1, n), 1 - alpha)
        scale = h ** (-alpha) / math.gamma(2 - alpha)
        if side == "left":
            w = toeplitz(np.concatenate(([0.0], bm)), np.zeros(n - 1))
        else:
            w = toeplitz(_first_only(np.concatenate((-bm, [0.0]))), -bm)
    else:
        raise ValueError(kind)
    w = w * scale
    w.setflags(write=False)
    return w


def weight_matrix(op: OperatorKind, order: FracOrder, grid: Grid) -> np.ndarray:
    """Quadrature weights ``W`` of the numeric scheme: ``op f = W @ f_nodes``.

    The RL integral uses product trapezoid weights; the Caputo derivative
    (0 < alpha < 1) the L1 weights.
    """
    if op.kind is Kind.RL_INTEGRAL:
        return _weights("pt", op.side.value, order.alpha, grid.n_points, grid.h)
    if op.kind is Kind.CAPUTO:
        if not 0 < order.alpha < 1:
            raise UnsupportedOrderError(f"L1 weights need 0 < alpha < 1, got {order.alpha}")
        return _weights("l1", op.side.value, order.alpha, grid.n_points, grid.h)
    raise UnsupportedOrderError("the RL derivative has no weight matrix; it is Caputo plus corrections")


# -- dispatch ------------------------------------------------------------------

def _resolve_grid(f: FuncRep, grid: Grid | None) -> Grid:
    if isinstance(f, SampledFn):
        if grid is not None and grid != f.grid:
            raise ValueError("grid must match the sampled function's grid")
        return f.grid
    if grid is None:
        raise ValueError("a grid is required for closed-form functions")
    if grid.interval != f.interval:
        raise ValueError(f"grid spans {grid.interval}, function lives on {f.interval}")
    return grid


def apply(
    op: OperatorKind,
    order: FracOrder,
    f: FuncRep,
    grid: Grid | None = None,
    method: str = "auto",
) -> OperatorResult:
    """Apply ``op`` of the given order to ``f`` at every node of ``grid``.

    ``method`` is ``"auto"`` (analytic whenever possible), ``"analytic"`` or
    ``"numeric"``. Integer orders always take the classical route on closed
    forms.
    """
    if method not in ("auto", "analytic", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    grid = _resolve_grid(f, grid)
    side, kind = op.side, op.kind
    sampled = isinstance(f, SampledFn)

    if sampled and method == "analytic":
        raise ValueError("no analytic route for sampled data")

    if order.is_integer and not sampled:
        return _integer_order(op, order, f, grid)

    if not sampled and method != "numeric":
        terms = expansion(f, side)
        if terms is not None:
            d = _distances(grid, side)
            regular, singular, flagged = _power_rule(terms, kind, order, d)
            values = _with_singular(regular, singular, d)
            return OperatorResult(
                grid, values, "analytic", "power-rule", flagged, singular, regular if singular else None, side
            )
        if f.fn.family == "pow":
            return _opposite_power(kind, order, f.fn.params[0], grid, side)
        if method == "analytic":
            raise ValueError(f"no analytic expansion of {f.fn} about the {side.value} endpoint")

    if kind is Kind.RL_DERIVATIVE:
        return rl_from_caputo(order, f, side, grid, method="numeric")

    if kind is Kind.RL_INTEGRAL:
        values = f.values if sampled else f.values(grid)
        if not np.all(np.isfinite(values)):
            raise FloatingPointError(f"{f.fn} is not finite at every node")
        w = weight_matrix(op, order, grid)
        return OperatorResult(grid, w @ values, "numeric", "product-trapezoid")

    # Caputo
    if sampled:
        if not order.alpha < 1:
            raise UnsupportedOrderError(
                f"numeric Caputo derivative on sampled data needs 0 < alpha < 1, got {order.alpha}"
            )
        if order.is_integer:
            raise UnsupportedOrderError("integer-order derivatives of sampled data are not supported")
        # applied to differences so that constants map to exact zeros
        w = _weights("l1d", side.value, order.alpha, grid.n_points, grid.h)
        return OperatorResult(grid, w @ np.diff(f.values), "numeric", "l1")
    n = order.n
    if n > 2:
        raise UnsupportedOrderError(f"closed-form Caputo supports 0 < alpha <= 2, got {order.alpha}")
    deriv = np.asarray(f.derivative(grid.nodes, n), dtype=float)
    if not np.all(np.isfinite(deriv)):
        raise FloatingPointError(f"derivative of order {n} of {f.fn} is not finite at every node")
    sign = (-1.0) ** n if side is Side.RIGHT else 1.0
    w = weight_matrix(OperatorKind(side, Kind.RL_INTEGRAL), FracOrder(n - order.alpha), grid)
    return OperatorResult(grid, sign * (w @ deriv), "numeric", "product-trapezoid(f^(n))")


def _integer_order(op: OperatorKind, order: FracOrder, f: Analytic, grid: Grid) -> OperatorResult:
    n = order.n
    if op.kind is Kind.RL_INTEGRAL:
        terms = expansion(f, op.side)
        if terms is not None:
            values, _, _ = _power_rule(terms, op.kind, order, _distances(grid, op.side))
        else:
            beta = f.fn.params[0]
            values = _opposite_power_iterated_integral(
                beta, n, grid.interval.length, _distances(grid, op.side.mirror), _distances(grid, op.side)
            )
        return OperatorResult(grid, values, "analytic", "iterated-integral")
    values = np.asarray(f.derivative(grid.nodes, n), dtype=float)
    if op.side is Side.RIGHT and n % 2:
        values = -values
    return OperatorResult(grid, values, "analytic", "classical")


def rl_from_caputo(
    order: FracOrder,
    f: FuncRep,
    side: Side,
    grid: Grid | None = None,
    method: str = "auto",
) -> OperatorResult:
    """RL derivative as the Caputo derivative plus the boundary corrections
    sum_k c_k d**(k - alpha) / Gamma(k - alpha + 1), k < n, where c_k is the
    k-th derivative at the anchor taken along the distance variable
    (so c_k = (-1)**k f^(k)(b) on the right side)."""
    grid = _resolve_grid(f, grid)
    caputo = apply(OperatorKind(side, Kind.CAPUTO), order, f, grid, method)
    alpha, n = order.alpha, order.n
    anchor = grid.a if side is Side.LEFT else grid.b
    if isinstance(f, SampledFn):
        coeffs = [f.values[0] if side is Side.LEFT else f.values[-1]]
    else:
        sigma = 1.0 if side is Side.LEFT else -1.0
        coeffs = [sigma**k * float(f.derivative(anchor, k)) for k in range(n)]
    if not all(math.isfinite(c) for c in coeffs):
        raise FloatingPointError(f"derivatives at the anchor are not finite: {coeffs}")
    d = _distances(grid, side)
    far = caputo.flagged & (d > 0)  # divergences away from the anchor stay flagged
    regular = caputo.values.copy() if caputo.regular is None else caputo.regular.copy()
    regular[far] = 0.0
    singular = list(caputo.singular)
    for k, ck in enumerate(coeffs):
        g = _rgamma(k - alpha + 1)
        if ck == 0.0 or g == 0.0:
            continue
        if k - alpha < 0:
            singular.append((ck * g, k - alpha))
        else:
            regular += ck * g * d ** (k - alpha)
    flagged = far | ((d == 0.0) if singular else False)
    values = _with_singular(regular, singular, d)
    keep = bool(singular) and not far.any()
    return OperatorResult(
        grid,
        values,
        caputo.method,
        f"caputo+correction({caputo.scheme})",
        flagged,
        singular if keep else (),
        regular if keep else None,
        side,
    )
