"""Functions on an interval: closed-form families, uniform-grid samples, and
the reflection x -> -x that maps a function on [a, b] to one on [-b, -a].

Closed-form functions are written as ``family:key=value,...`` strings, e.g.
``pow:beta=2``, ``poly:c=1,0,-2`` or ``sin:omega=3.14159``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

__all__ = [
    "Interval",
    "Grid",
    "ClosedFormFn",
    "Analytic",
    "SampledFn",
    "FuncRep",
    "FuncSpecError",
    "DomainError",
    "dual",
    "evaluate",
    "parse_funcspec",
    "format_funcspec",
]


class DomainError(ValueError):
    """A parameter lies outside the domain where the function is defined."""


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self) -> None:
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"interval endpoints must be finite, got [{a}, {b}]")
        if not a < b:
            raise ValueError(f"interval requires a < b, got [{a}, {b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return self.b - self.a

    def reflected(self) -> Interval:
        return Interval(-self.b, -self.a)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.a - slack <= x <= self.b + slack


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``n_points`` nodes; the last node is pinned to ``b``."""

    interval: Interval
    n_points: int

    def __post_init__(self) -> None:
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"grid needs an integer n_points >= 2, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))

    @classmethod
    def on(cls, a: float, b: float, n_points: int) -> Grid:
        return cls(Interval(a, b), n_points)

    @property
    def a(self) -> float:
        return self.interval.a

    @property
    def b(self) -> float:
        return self.interval.b

    @property
    def h(self) -> float:
        return self.interval.length / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.a + np.arange(self.n_points) * self.h
        x[-1] = self.b
        x.setflags(write=False)
        return x

    def reflected(self) -> Grid:
        return Grid(self.interval.reflected(), self.n_points)

    def node_index(self, x: float) -> int:
        i = int(round((x - self.a) / self.h))
        if i < 0 or i >= self.n_points or abs(self.nodes[i] - x) > self.h * 1e-9:
            raise ValueError(f"x={x!r} is not a node of {self}")
        return i


# (family, keys in canonical order, default values; None = required)
_FAMILIES: dict[str, tuple[tuple[str, ...], tuple[float | None, ...]]] = {
    "const": (("v",), (None,)),
    "pow": (("beta", "side"), (None, 0.0)),
    "poly": (("c",), (None,)),
    "exp": (("lam",), (None,)),
    "sin": (("omega", "phi"), (None, 0.0)),
    "cos": (("omega", "phi"), (None, 0.0)),
}


@dataclass(frozen=True)
class ClosedFormFn:
    """A member of one of the fixed closed-form families.

    ``params`` per family:

    - ``const``: ``(v,)``
    - ``pow``: ``(beta, side)``; side 0 means ``(x - a)**beta``, side 1 means
      ``(b - x)**beta``, so evaluation needs the interval.
    - ``poly``: coefficients in powers of ``x``, highest degree first
    - ``exp``: ``(lam,)`` for ``exp(lam * x)``
    - ``sin``/``cos``: ``(omega, phi)`` for ``sin(omega * x + phi)``
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        params = tuple(float(p) for p in self.params)
        if not all(math.isfinite(p) for p in params):
            raise ValueError("closed-form parameters must be finite")
        keys, _ = _FAMILIES[self.family]
        if self.family == "poly":
            if len(params) == 0:
                raise ValueError("poly needs at least one coefficient")
        elif len(params) != len(keys):
            raise ValueError(f"{self.family} takes {len(keys)} parameters, got {len(params)}")
        if self.family == "pow":
            if params[0] <= -1.0:
                raise DomainError(f"power exponent must satisfy beta > -1, got {params[0]}")
            if params[1] not in (0.0, 1.0):
                raise ValueError(f"power side must be 0 (left anchor) or 1 (right anchor), got {params[1]}")
        object.__setattr__(self, "params", params)

    # convenience constructors
    @classmethod
    def const(cls, v: float) -> ClosedFormFn:
        return cls("const", (v,))

    @classmethod
    def power(cls, beta: float, right: bool = False) -> ClosedFormFn:
        return cls("pow", (beta, 1.0 if right else 0.0))

    @classmethod
    def poly(cls, *coeffs: float) -> ClosedFormFn:
        return cls("poly", tuple(coeffs))

    @classmethod
    def exp(cls, lam: float) -> ClosedFormFn:
        return cls("exp", (lam,))

    @classmethod
    def sin(cls, omega: float, phi: float = 0.0) -> ClosedFormFn:
        return cls("sin", (omega, phi))

    @classmethod
    def cos(cls, omega: float, phi: float = 0.0) -> ClosedFormFn:
        return cls("cos", (omega, phi))

    @property
    def right_anchored(self) -> bool:
        return self.family == "pow" and self.params[1] == 1.0

    def on(self, a: float, b: float) -> Analytic:
        return Analytic(self, Interval(a, b))

    def dual(self) -> ClosedFormFn:
        """Parameters of x -> f(-x); exact, and an involution."""
        fam, p = self.family, self.params
        if fam == "const":
            return self
        if fam == "pow":
            return ClosedFormFn("pow", (p[0], 1.0 - p[1]))
        if fam == "poly":
            deg = len(p) - 1
            return ClosedFormFn("poly", tuple(-c if (deg - i) % 2 else c for i, c in enumerate(p)))
        if fam == "exp":
            return ClosedFormFn("exp", (-p[0],))
        return ClosedFormFn(fam, (-p[0], p[1]))

    def derivative(self, x, k: int = 0, interval: Interval | None = None):
        """k-th classical derivative at ``x`` (scalar or array)."""
        if k < 0:
            raise ValueError("derivative order must be non-negative")
        x = np.asarray(x, dtype=float)
        fam, p = self.family, self.params
        if fam == "const":
            return np.full_like(x, p[0] if k == 0 else 0.0)
        if fam == "poly":
            c = np.asarray(p)
            for _ in range(k):
                if len(c) == 1:
                    return np.zeros_like(x)
                c = c[:-1] * np.arange(len(c) - 1, 0, -1)
            return _horner(c, x)
        if fam == "exp":
            return p[0] ** k * np.exp(p[0] * x)
        if fam in ("sin", "cos"):
            omega, phi = p
            theta = omega * x + phi
            shift = k % 4 if fam == "sin" else (k + 1) % 4
            base = (np.sin(theta), np.cos(theta), -np.sin(theta), -np.cos(theta))[shift]
            return omega**k * base
        # pow
        if interval is None:
            raise ValueError("power family needs an interval to evaluate")
        beta = p[0]
        if self.right_anchored:
            d = np.maximum(interval.b - x, 0.0)
            sign = -1.0 if k % 2 else 1.0
        else:
            d = np.maximum(x - interval.a, 0.0)
            sign = 1.0
        ff = 1.0
        for j in range(k):
            ff *= beta - j
        if ff == 0.0:
            return np.zeros_like(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return sign * ff * d ** (beta - k)

    def __call__(self, x, interval: Interval | None = None):
        return self.derivative(x, 0, interval)


def _horner(c, x):
    y = np.zeros_like(x) + c[0]
    for ci in c[1:]:
        y = y * x + ci
    return y


@dataclass(frozen=True)
class Analytic:
    """A closed-form function restricted to an interval."""

    fn: ClosedFormFn
    interval: Interval

    def values(self, grid: Grid) -> np.ndarray:
        return np.asarray(self.fn.derivative(grid.nodes, 0, self.interval), dtype=float)

    def derivative(self, x, k: int = 0):
        return self.fn.derivative(x, k, self.interval)

    def at(self, x: float) -> float:
        _check_inside(self.interval, x)
        return float(self.fn.derivative(x, 0, self.interval))

    def sample(self, grid: Grid) -> SampledFn:
        return SampledFn(grid, self.values(grid))

    def dual(self) -> Analytic:
        return Analytic(self.fn.dual(), self.interval.reflected())


@dataclass(frozen=True, eq=False)
class SampledFn:
    """Values at the nodes of a uniform grid. Never interpolated."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def interval(self) -> Interval:
        return self.grid.interval

    def at(self, x: float) -> float:
        _check_inside(self.interval, x)
        return float(self.values[self.grid.node_index(x)])

    def dual(self) -> SampledFn:
        return SampledFn(self.grid.reflected(), self.values[::-1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampledFn):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


FuncRep = Union[Analytic, SampledFn]


def _check_inside(interval: Interval, x: float) -> None:
    if not interval.contains(x, slack=1e-12 * interval.length):
        raise ValueError(f"x={x!r} lies outside [{interval.a}, {interval.b}]")


def dual(f: FuncRep) -> FuncRep:
    """The reflected function f*(x) = f(-x) on [-b, -a]."""
    return f.dual()


def evaluate(f: FuncRep, x: float) -> float:
    return f.at(x)


# -- funcspec text format ----------------------------------------------------

class FuncSpecError(ValueError):
    """Malformed funcspec text; ``pos`` is the 0-based offending column."""

    def __init__(self, text: str, pos: int, expected: str) -> None:
        self.text, self.pos, self.expected = text, pos, expected
        found = repr(text[pos]) if pos < len(text) else "end of input"
        super().__init__(f"funcspec {text!r}: expected {expected} at position {pos}, found {found}")


_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[a-z]+")


def parse_funcspec(text: str) -> ClosedFormFn:
    m = _NAME.match(text)
    if not m:
        raise FuncSpecError(text, 0, "family name")
    family = m.group()
    if family not in _FAMILIES:
        raise FuncSpecError(text, 0, "one of " + "|".join(_FAMILIES))
    pos = m.end()
    if not text.startswith(":", pos):
        raise FuncSpecError(text, pos, "':'")
    pos += 1
    keys, defaults = _FAMILIES[family]
    given: dict[str, list[float]] = {}
    key = None
    first = True
    while True:
        km = _NAME.match(text, pos)
        if km and text.startswith("=", km.end()):
            key = km.group()
            if key not in keys:
                raise FuncSpecError(text, pos, f"key for {family} ({', '.join(keys)})")
            if key in given:
                raise FuncSpecError(text, pos, f"a key other than repeated {key!r}")
            given[key] = []
            pos = km.end() + 1
        elif first:
            raise FuncSpecError(text, pos, "key=value")
        nm = _NUMBER.match(text, pos)
        if not nm:
            raise FuncSpecError(text, pos, "decimal literal")
        given[key].append(float(nm.group()))
        pos = nm.end()
        first = False
        if pos == len(text):
            break
        if text[pos] != ",":
            raise FuncSpecError(text, pos, "',' or end of input")
        pos += 1

    params: list[float] = []
    for k, default in zip(keys, defaults):
        vals = given.get(k)
        if vals is None:
            if default is None:
                raise FuncSpecError(text, len(text), f"required key {k!r}")
            vals = [default]
        if len(vals) > 1 and family != "poly":
            raise FuncSpecError(text, len(text), f"a single value for {k!r}")
        params.extend(vals)
    return ClosedFormFn(family, tuple(params))


def format_funcspec(fn: ClosedFormFn) -> str:
    keys, _ = _FAMILIES[fn.family]
    if fn.family == "poly":
        return "poly:c=" + ",".join(repr(c) for c in fn.params)
    return fn.family + ":" + ",".join(f"{k}={v!r}" for k, v in zip(keys, fn.params))
