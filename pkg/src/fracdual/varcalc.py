"""Right fractional variational problems

    J(u) = int_a^b L(u, I_b^alpha u, u', C_D_b^alpha u, t) dt

discretized on a uniform grid, their duals on [-b, -a] (left operators,
velocity slot and time negated), hypothesis probes for the Tonelli-type
existence theorem, the L^r bound of the right RL integral, and a direct
minimizer.

Discretization. The fractional slots are computed at the nodes (product
trapezoid and L1 weights), then every slot is evaluated at cell midpoints:
u and the fractional slots by averaging the two end nodes, u' by the
one-cell difference. The functional is the midpoint sum h * sum L(cell).
Each slot is therefore a fixed linear map of the node values, which makes
the gradient an exact adjoint computation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .duality import IdentityReport
from .fracops import FracOrder, Kind, OperatorKind, Side, apply, gamma, weight_matrix
from .gridfn import ClosedFormFn, Grid, Interval, SampledFn

__all__ = [
    "Term",
    "LagrangianSpec",
    "VariationalProblem",
    "MinimizationResult",
    "TonelliDiagnostic",
    "BoundaryConditionError",
    "evaluate_functional",
    "evaluate_dual_functional",
    "dual_lagrangian",
    "dual_problem",
    "functional_gradient",
    "check_norm_bound",
    "random_smooth",
    "diagnose_tonelli",
    "minimize",
    "friction_problem",
]

log = logging.getLogger(__name__)

# slot indices of L(x1, x2, x3, x4, t)
U, INT, VEL, CAP, TIME = range(5)

_TERM_KINDS = ("u2", "int2", "vel2", "cap2", "cross", "potential", "time")
_SQUARE_SLOT = {"u2": U, "int2": INT, "vel2": VEL, "cap2": CAP}


class BoundaryConditionError(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    """One additive piece of a Lagrangian.

    ``u2``/``int2``/``vel2``/``cap2``: ``coef * slot**2``;
    ``cross``: ``coef * x1 * x3``; ``potential``: ``coef * fn(x1)``;
    ``time``: ``coef * fn(t)``. ``fn`` must not be a power function, which
    needs an interval to evaluate.
    """

    kind: str
    coef: float = 1.0
    fn: ClosedFormFn | None = None

    def __post_init__(self) -> None:
        if self.kind not in _TERM_KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}; expected one of {', '.join(_TERM_KINDS)}")
        needs_fn = self.kind in ("potential", "time")
        if needs_fn != (self.fn is not None):
            raise ValueError(f"term {self.kind!r} {'needs' if needs_fn else 'takes no'} function")
        if self.fn is not None and self.fn.family == "pow":
            raise ValueError("power functions cannot be used inside a Lagrangian")
        object.__setattr__(self, "coef", float(self.coef))


@dataclass(frozen=True)
class LagrangianSpec:
    terms: tuple[Term, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def of(cls, *terms: Term) -> LagrangianSpec:
        return cls(tuple(terms))

    def value(self, x1, x2, x3, x4, t):
        out = np.zeros(np.broadcast(x1, x2, x3, x4, t).shape)
        xs = (x1, x2, x3, x4, t)
        for term in self.terms:
            if term.kind in _SQUARE_SLOT:
                out = out + term.coef * np.square(xs[_SQUARE_SLOT[term.kind]])
            elif term.kind == "cross":
                out = out + term.coef * x1 * x3
            elif term.kind == "potential":
                out = out + term.coef * term.fn.derivative(x1, 0)
            else:
                out = out + term.coef * term.fn.derivative(t, 0)
        return out

    def partials(self, x1, x2, x3, x4, t) -> list[np.ndarray]:
        """The five partial derivatives d_1 L, ..., d_5 L."""
        shape = np.broadcast(x1, x2, x3, x4, t).shape
        xs = (x1, x2, x3, x4, t)
        grads = [np.zeros(shape) for _ in range(5)]
        for term in self.terms:
            if term.kind in _SQUARE_SLOT:
                s = _SQUARE_SLOT[term.kind]
                grads[s] = grads[s] + 2.0 * term.coef * xs[s]
            elif term.kind == "cross":
                grads[U] = grads[U] + term.coef * x3
                grads[VEL] = grads[VEL] + term.coef * x1
            elif term.kind == "potential":
                grads[U] = grads[U] + term.coef * term.fn.derivative(x1, 1)
            else:
                grads[TIME] = grads[TIME] + term.coef * term.fn.derivative(t, 1)
        return grads

    def second_partials(self, x1, t) -> dict[tuple[int, int], np.ndarray]:
        """Non-zero entries of the Hessian of L in (x1..x4); symmetric pairs
        are stored once with i <= j."""
        shape = np.broadcast(x1, t).shape
        hess: dict[tuple[int, int], np.ndarray] = {}

        def add(key, val):
            hess[key] = hess.get(key, np.zeros(shape)) + val

        for term in self.terms:
            if term.kind in _SQUARE_SLOT:
                s = _SQUARE_SLOT[term.kind]
                add((s, s), 2.0 * term.coef)
            elif term.kind == "cross":
                add((U, VEL), term.coef)
            elif term.kind == "potential":
                add((U, U), term.coef * term.fn.derivative(x1, 2))
        return hess

    def uses(self, slot: int) -> bool:
        for term in self.terms:
            if _SQUARE_SLOT.get(term.kind) == slot:
                return True
            if slot in (U, VEL) and term.kind == "cross":
                return True
            if slot == U and term.kind == "potential":
                return True
            if slot == TIME and term.kind == "time":
                return True
        return False


def dual_lagrangian(lag: LagrangianSpec) -> LagrangianSpec:
    """L*(x1, x2, x3, x4, s) = L(x1, x2, -x3, x4, -s), term by term."""
    terms = []
    for term in lag.terms:
        if term.kind == "cross":
            term = replace(term, coef=-term.coef)
        elif term.kind == "time":
            term = replace(term, fn=term.fn.dual())
        terms.append(term)
    return LagrangianSpec(tuple(terms))


@dataclass(frozen=True)
class VariationalProblem:
    """``side="right"`` is the problem as posed (right operators);
    ``side="left"`` marks a dual problem on the reflected interval."""

    lagrangian: LagrangianSpec
    grid: Grid
    order: FracOrder
    p: float = 2.0
    u_a: float | None = None
    u_b: float | None = None
    side: str = "right"

    def __post_init__(self) -> None:
        if not 0 < self.order.alpha <= 1:
            raise ValueError(f"variational problems need 0 < alpha <= 1, got {self.order.alpha}")
        if not (1 < self.p < math.inf):
            raise ValueError(f"exponent must satisfy 1 < p < inf, got {self.p}")
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")

    @property
    def interval(self) -> Interval:
        return self.grid.interval

    @property
    def p_adjoint(self) -> float:
        return self.p / (self.p - 1)

    def fixed_mask(self) -> np.ndarray:
        mask = np.zeros(self.grid.n_points, bool)
        mask[0] = self.u_a is not None
        mask[-1] = self.u_b is not None
        return mask

    def boundary_values(self) -> np.ndarray:
        """Node values of the admissible function interpolating the boundary
        conditions linearly (zero where free)."""
        ua = 0.0 if self.u_a is None else self.u_a
        ub = ua if self.u_b is None else self.u_b
        if self.u_a is None:
            ua = ub
        s = np.linspace(0.0, 1.0, self.grid.n_points)
        return ua + (ub - ua) * s


def dual_problem(prob: VariationalProblem) -> VariationalProblem:
    """The problem on [-b, -a] with L* and the opposite-side operators. The
    left operators are anchored at -b, the left end of the reflected
    interval. Boundary values swap ends."""
    return VariationalProblem(
        lagrangian=dual_lagrangian(prob.lagrangian),
        grid=prob.grid.reflected(),
        order=prob.order,
        p=prob.p,
        u_a=prob.u_b,
        u_b=prob.u_a,
        side="left" if prob.side == "right" else "right",
    )


# -- discrete slot maps --------------------------------------------------------

@dataclass
class _Slots:
    """Linear maps from node values to cell-midpoint slot values."""

    maps: list[np.ndarray | None]  # U, INT, VEL, CAP; None when unused
    t_mid: np.ndarray
    h: float

    def apply(self, u: np.ndarray) -> list[np.ndarray]:
        ncell = len(self.t_mid)
        return [np.zeros(ncell) if m is None else m @ u for m in self.maps]


def _slot_maps(prob: VariationalProblem) -> _Slots:
    grid, order = prob.grid, prob.order
    side = Side.RIGHT if prob.side == "right" else Side.LEFT
    n, h = grid.n_points, grid.h
    avg = np.zeros((n - 1, n))
    diff = np.zeros((n - 1, n))
    idx = np.arange(n - 1)
    avg[idx, idx] = avg[idx, idx + 1] = 0.5
    diff[idx, idx] = -1.0 / h
    diff[idx, idx + 1] = 1.0 / h
    lag = prob.lagrangian

    m_int = m_cap = None
    if lag.uses(INT):
        m_int = avg @ weight_matrix(OperatorKind(side, Kind.RL_INTEGRAL), order, grid)
    if lag.uses(CAP):
        if order.is_integer:
            # alpha = 1: C_D_b u = -u', C_aD u = u'
            m_cap = -diff if side is Side.RIGHT else diff.copy()
        else:
            m_cap = avg @ weight_matrix(OperatorKind(side, Kind.CAPUTO), order, grid)
    x = grid.nodes
    return _Slots([avg, m_int, diff, m_cap], 0.5 * (x[:-1] + x[1:]), h)


def _check_bc(prob: VariationalProblem, u: np.ndarray) -> None:
    for name, want, got in (("u(a)", prob.u_a, u[0]), ("u(b)", prob.u_b, u[-1])):
        if want is not None and abs(got - want) > 1e-12:
            raise BoundaryConditionError(f"{name} = {got!r} violates the boundary condition {want!r}")


def _values(prob: VariationalProblem, u) -> np.ndarray:
    if isinstance(u, SampledFn):
        if u.grid != prob.grid:
            raise ValueError("u must be sampled on the problem grid")
        return np.asarray(u.values)
    u = np.asarray(u, dtype=float)
    if u.shape != (prob.grid.n_points,):
        raise ValueError(f"expected {prob.grid.n_points} node values, got shape {u.shape}")
    return u


def _functional(prob: VariationalProblem, slots: _Slots, u: np.ndarray) -> float:
    x1, x2, x3, x4 = slots.apply(u)
    return float(slots.h * np.sum(prob.lagrangian.value(x1, x2, x3, x4, slots.t_mid)))


def _gradient(prob: VariationalProblem, slots: _Slots, u: np.ndarray) -> np.ndarray:
    xs = slots.apply(u)
    parts = prob.lagrangian.partials(*xs, slots.t_mid)
    g = np.zeros_like(u)
    for s, m in enumerate(slots.maps):
        if m is not None:
            g += m.T @ (slots.h * parts[s])
    return g


def _hess_vec(prob: VariationalProblem, slots: _Slots, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    x1 = slots.maps[U] @ u
    hess = prob.lagrangian.second_partials(x1, slots.t_mid)
    mv = [None if m is None else m @ v for m in slots.maps]
    out = np.zeros_like(v)
    for (i, j), hij in hess.items():
        if slots.maps[i] is None or slots.maps[j] is None:
            continue
        out += slots.maps[i].T @ (slots.h * hij * mv[j])
        if i != j:
            out += slots.maps[j].T @ (slots.h * hij * mv[i])
    return out


def evaluate_functional(prob: VariationalProblem, u) -> float:
    """Discrete value of the functional at node values ``u`` (array or
    SampledFn on ``prob.grid``)."""
    u = _values(prob, u)
    _check_bc(prob, u)
    return _functional(prob, _slot_maps(prob), u)


def evaluate_dual_functional(prob: VariationalProblem, u) -> float:
    """Value of the dual functional at u* (the reflection of ``u``): the
    integral over [-b, -a] of L* with the opposite-side operators."""
    u = _values(prob, u)
    _check_bc(prob, u)
    return evaluate_functional(dual_problem(prob), u[::-1].copy())


def functional_gradient(prob: VariationalProblem, u) -> np.ndarray:
    """Gradient of the discrete functional with respect to all node values."""
    u = _values(prob, u)
    return _gradient(prob, _slot_maps(prob), u)


# -- norm bound ----------------------------------------------------------------

def _lr_norm(values: np.ndarray, h: float, r: float) -> float:
    v = np.abs(values)
    if math.isinf(r):
        return float(v.max())
    w = np.full(v.shape, h)
    w[0] = w[-1] = 0.5 * h
    return float(np.sum(w * v**r) ** (1.0 / r))


def random_smooth(grid: Grid, rng: np.random.Generator, modes: int = 6) -> SampledFn:
    """A random trigonometric polynomial with decaying amplitudes, sampled
    on ``grid``."""
    s = (grid.nodes - grid.a) / grid.interval.length
    k = np.arange(modes)
    amp = rng.normal(size=(2, modes)) / (1.0 + k)
    vals = amp[0] @ np.cos(np.pi * np.outer(k, s)) + amp[1] @ np.sin(np.pi * np.outer(k + 1, s))
    return SampledFn(grid, vals)


def check_norm_bound(order: FracOrder, f: SampledFn, r: float, slack: float = 1e-6) -> IdentityReport:
    """Discrete check of ||I_b^alpha f||_r <= (b - a)^alpha / Gamma(1 + alpha) ||f||_r.

    ``max_abs_residual`` is the excess of the left side over the bound
    (zero when the bound holds), compared against ``slack``.
    """
    if not 1 <= r <= math.inf:
        raise ValueError(f"r must lie in [1, inf], got {r}")
    grid = f.grid
    integral = apply(OperatorKind(Side.RIGHT, Kind.RL_INTEGRAL), order, f)
    lhs = _lr_norm(integral.values, grid.h, r)
    constant = grid.interval.length**order.alpha / gamma(1 + order.alpha)
    bound = constant * _lr_norm(f.values, grid.h, r)
    excess = max(0.0, lhs - bound)
    return IdentityReport(
        identity_name="norm-bound:right-rl-integral",
        grid=grid,
        order=order,
        max_abs_residual=excess,
        mean_abs_residual=excess,
        tolerance=slack,
        method_pair=(integral.method, "analytic"),
        extra={"r": "inf" if math.isinf(r) else r, "lhs_norm": lhs, "bound": bound, "constant": constant},
    )


# -- Tonelli hypotheses --------------------------------------------------------

@dataclass
class TonelliDiagnostic:
    """Outcome of numerical probes of the existence hypotheses. These are
    probes on a discretization, not proofs."""

    regular: str
    coercive: str
    convex: str
    details: dict = field(default_factory=dict)
    dual: TonelliDiagnostic | None = None

    @property
    def verdicts(self) -> tuple[str, str, str]:
        return (self.regular, self.coercive, self.convex)

    @property
    def dual_agrees(self) -> bool | None:
        return None if self.dual is None else self.dual.verdicts == self.verdicts

    def to_dict(self) -> dict:
        d = {
            "kind": "probe",
            "regular": self.regular,
            "coercive": self.coercive,
            "convex": self.convex,
            "details": self.details,
        }
        if self.dual is not None:
            d["dual"] = self.dual.to_dict()
            d["dual_agrees"] = self.dual_agrees
        return d


def _w1p_norm(u: np.ndarray, h: float, p: float) -> float:
    w = np.full(u.shape, h)
    w[0] = w[-1] = 0.5 * h
    du = np.diff(u) / h
    return float((np.sum(w * np.abs(u) ** p) + h * np.sum(np.abs(du) ** p)) ** (1.0 / p))


def _bump(prob: VariationalProblem, k: int) -> np.ndarray:
    """Admissible direction: zero wherever a boundary value is fixed."""
    x = prob.grid.nodes
    s = (x - prob.grid.a) / prob.grid.interval.length
    if prob.u_a is not None and prob.u_b is not None:
        return np.sin(k * np.pi * s)
    if prob.u_a is not None:
        return np.sin((k - 0.5) * np.pi * s)
    if prob.u_b is not None:
        return np.cos((k - 0.5) * np.pi * s)
    return np.cos(k * np.pi * s) + 1.0


def _probe_regular(prob, slots, probes) -> tuple[str, dict]:
    q = prob.p_adjoint
    worst = {}
    for u in probes:
        xs = slots.apply(u)
        lval = prob.lagrangian.value(*xs, slots.t_mid)
        parts = prob.lagrangian.partials(*xs, slots.t_mid)
        norms = {
            "L": slots.h * np.sum(np.abs(lval)),
            "d1L": slots.h * np.sum(np.abs(parts[U])),
            "d2L": (slots.h * np.sum(np.abs(parts[INT]) ** q)) ** (1 / q),
            "d3L": (slots.h * np.sum(np.abs(parts[VEL]) ** q)) ** (1 / q),
            "d4L": (slots.h * np.sum(np.abs(parts[CAP]) ** q)) ** (1 / q),
        }
        for k, v in norms.items():
            worst[k] = max(worst.get(k, 0.0), float(v))
    ok = all(np.isfinite(v) for v in worst.values())
    return ("pass" if ok else "fail"), worst


def _probe_coercive(prob, slots) -> tuple[str, dict]:
    base = prob.boundary_values()
    direction = _bump(prob, 1) + 0.5 * _bump(prob, 2)
    scales = (1.0, 2.0, 4.0, 8.0, 16.0)
    values, norms = [], []
    for s in scales:
        u = base + s * direction
        values.append(_functional(prob, slots, u))
        norms.append(_w1p_norm(u, slots.h, prob.p))
    detail = {"scales": list(scales), "values": values, "norms": norms}
    increasing = all(b > a for a, b in zip(values, values[1:]))
    if not increasing:
        return "fail", detail
    if values[-2] <= 0:
        return "inconclusive", detail
    superlinear = values[-1] / values[-2] > norms[-1] / norms[-2]
    return ("pass" if superlinear else "inconclusive"), detail


def _probe_convex(prob, rng: np.random.Generator, pairs: int = 200, radius: float = 10.0) -> tuple[str, dict]:
    lag = prob.lagrangian
    x = rng.uniform(-radius, radius, size=(pairs, 4))
    y = rng.uniform(-radius, radius, size=(pairs, 4))
    t = rng.uniform(prob.grid.a, prob.grid.b, size=pairs)
    lx = lag.value(*x.T, t)
    ly = lag.value(*y.T, t)
    lm = lag.value(*(0.5 * (x + y)).T, t)
    gap = lm - 0.5 * (lx + ly)
    scale = 1e-12 * np.maximum(1.0, np.abs(lx) + np.abs(ly))
    worst = float(np.max(gap - scale))
    return ("pass" if worst <= 0 else "fail"), {"max_midpoint_gap": float(np.max(gap)), "pairs": pairs}


def _diagnose(prob: VariationalProblem, seed: int) -> TonelliDiagnostic:
    slots = _slot_maps(prob)
    base = prob.boundary_values()
    probes = [base] + [base + c * _bump(prob, k) for k, c in ((1, 1.0), (2, -2.0), (3, 5.0))]
    regular, rdet = _probe_regular(prob, slots, probes)
    coercive, cdet = _probe_coercive(prob, slots)
    convex, vdet = _probe_convex(prob, np.random.default_rng(seed))
    return TonelliDiagnostic(regular, coercive, convex, {"regularity": rdet, "coercivity": cdet, "convexity": vdet})


def diagnose_tonelli(prob: VariationalProblem, seed: int = 42) -> TonelliDiagnostic:
    """Probe regularity, coercivity and convexity of ``prob`` and of its dual."""
    diag = _diagnose(prob, seed)
    diag.dual = _diagnose(dual_problem(prob), seed)
    return diag


# -- direct method -------------------------------------------------------------

@dataclass
class MinimizationResult:
    minimizer: SampledFn
    functional_value: float
    gradient_norm: float
    iterations: int
    converged: bool
    tolerance: float = 1e-8

    def to_dict(self, include_minimizer: bool = True) -> dict:
        d = {
            "functional_value": self.functional_value,
            "gradient_norm": self.gradient_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "tolerance": self.tolerance,
        }
        if include_minimizer:
            d["minimizer"] = {
                "x": self.minimizer.grid.nodes.tolist(),
                "value": self.minimizer.values.tolist(),
            }
        return d


def _cg(matvec, b: np.ndarray, tol: float, maxiter: int) -> tuple[np.ndarray, int, bool]:
    """Conjugate gradients for matvec(x) = b; stops early on non-positive
    curvature, returning the last iterate and False."""
    x = np.zeros_like(b)
    r = b.copy()
    d = r.copy()
    rr = r @ r
    for it in range(1, maxiter + 1):
        if math.sqrt(rr) <= tol:
            return x, it - 1, True
        q = matvec(d)
        curv = d @ q
        if curv <= 0:
            return x, it, False
        step = rr / curv
        x += step * d
        r -= step * q
        rr_new = r @ r
        d = r + (rr_new / rr) * d
        rr = rr_new
    return x, maxiter, math.sqrt(rr) <= tol


def minimize(
    prob: VariationalProblem,
    tol: float = 1e-8,
    max_iter: int | None = None,
    u0=None,
) -> MinimizationResult:
    """Direct method on the discretization: Newton steps solved by
    conjugate gradients on the free node values, with backtracking.

    ``iterations`` counts CG iterations; the budget defaults to
    10 * n_points.
    """
    slots = _slot_maps(prob)
    free = ~prob.fixed_mask()
    u = prob.boundary_values() if u0 is None else _values(prob, u0).copy()
    if prob.u_a is not None:
        u[0] = prob.u_a
    if prob.u_b is not None:
        u[-1] = prob.u_b
    budget = 10 * prob.grid.n_points if max_iter is None else max_iter
    used = 0
    value = _functional(prob, slots, u)
    gnorm = math.inf
    while True:
        g = _gradient(prob, slots, u)[free]
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol or used >= budget:
            break

        def matvec(v):
            full = np.zeros_like(u)
            full[free] = v
            return _hess_vec(prob, slots, u, full)[free]

        step, its, ok = _cg(matvec, -g, tol=0.1 * tol, maxiter=budget - used)
        used += max(its, 1)
        if not ok and not np.any(step):
            log.warning("non-positive curvature at the start of CG; the functional may not be coercive")
            break
        # backtracking on the functional value
        t = 1.0
        while True:
            trial = u.copy()
            trial[free] += t * step
            trial_value = _functional(prob, slots, trial)
            if trial_value <= value + 1e-4 * t * (g @ step) or t < 1e-10:
                break
            t *= 0.5
        if t < 1e-10:
            log.warning("line search stalled at gradient norm %.3e", gnorm)
            break
        u, value = trial, trial_value
    return MinimizationResult(
        minimizer=SampledFn(prob.grid, u),
        functional_value=value,
        gradient_norm=gnorm,
        iterations=used,
        converged=gnorm <= tol,
        tolerance=tol,
    )


def friction_problem(
    m: float = 1.0,
    gamma_: float = 0.1,
    n_points: int = 129,
    a: float = 0.0,
    b: float = 1.0,
    u_a: float = 1.0,
    u_b: float = 0.0,
) -> VariationalProblem:
    """L = m/2 u'^2 - U(u) + gamma/2 (C_D_b^(1/2) u)^2 with U(u) = u^2 / 2."""
    lag = LagrangianSpec.of(
        Term("vel2", 0.5 * m),
        Term("potential", -1.0, ClosedFormFn.poly(0.5, 0.0, 0.0)),
        Term("cap2", 0.5 * gamma_),
    )
    return VariationalProblem(lag, Grid.on(a, b, n_points), FracOrder(0.5), p=2.0, u_a=u_a, u_b=u_b)
