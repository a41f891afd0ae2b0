from __future__ import annotations

import numpy as np
import pytest
from conftest import closed_forms, fractional_orders, intervals
from hypothesis import given
from hypothesis import strategies as st

from fracdual.duality import check_duality, compare, default_tolerance, via_dual
from fracdual.fracops import ALL_OPERATORS, FracOrder, Kind, OperatorKind, Side, UnsupportedOrderError, apply
from fracdual.gridfn import ClosedFormFn, Grid, dual

C = ClosedFormFn


def test_integer_integral_of_one():
    grid = Grid.on(0, 1, 11)
    op = OperatorKind(Side.LEFT, Kind.RL_INTEGRAL)
    res = via_dual(op, FracOrder(1), C.const(1).on(0, 1), grid)
    native = apply(op, FracOrder(1), C.const(1).on(0, 1), grid)
    np.testing.assert_allclose(res.values, grid.nodes, atol=1e-15)
    assert np.array_equal(res.values, native.values)


def test_right_integral_of_square():
    grid = Grid.on(0, 1, 65)
    rep = check_duality(OperatorKind(Side.RIGHT, Kind.RL_INTEGRAL), FracOrder(0.5), C.poly(1, 0, 0).on(0, 1), grid)
    assert rep.method_pair == ("analytic", "analytic")
    assert rep.max_abs_residual <= 1e-12


def test_left_caputo_of_x_at_one():
    grid = Grid.on(0, 1, 11)
    op = OperatorKind(Side.LEFT, Kind.CAPUTO)
    f = C.power(1).on(0, 1)
    expected = 1.1283791670955126
    assert apply(op, FracOrder(0.5), f, grid).values[-1] == pytest.approx(expected, rel=1e-15)
    assert via_dual(op, FracOrder(0.5), f, grid).values[-1] == pytest.approx(expected, abs=1e-12)


def test_check_left_caputo_pow2():
    rep = check_duality(OperatorKind.parse("left-caputo"), FracOrder(0.5), C.power(2).on(0, 1), Grid.on(0, 1, 257), 1e-10)
    assert rep.verdict == "pass"
    assert rep.method_pair == ("analytic", "analytic")


@pytest.mark.parametrize("op", ALL_OPERATORS, ids=str)
def test_integer_order_any_closed_form(op):
    for fn in (C.sin(1.3, 0.2), C.exp(0.4), C.poly(2, 0, -1), C.power(1.5, right=True)):
        rep = check_duality(op, FracOrder(1), fn.on(-0.5, 1.0), Grid.on(-0.5, 1.0, 31), 1e-12)
        assert rep.passed, (op, fn, rep.max_abs_residual)


class TestNumericPath:
    def test_sin_sampled(self):
        op = OperatorKind.parse("left-rl-integral")
        f = C.sin(1.0).on(0, 1)
        grid = Grid.on(0, 1, 1025)
        rep = check_duality(op, FracOrder(0.5), f.sample(grid), grid, 1e-4, method="numeric")
        assert rep.method_pair == ("numeric", "numeric")
        assert rep.passed
        assert rep.max_abs_residual <= 1e-14  # mirrored weights are exact reflections

    def test_error_against_analytic_quarters(self):
        # the residual between the two numeric routes is rounding only, so the
        # ~4x per doubling is checked on the error against the exact values
        op = OperatorKind.parse("left-rl-integral")
        f = C.sin(1.0).on(0, 1)
        errs = []
        for n in (129, 257, 513, 1025):
            grid = Grid.on(0, 1, n)
            num = via_dual(op, FracOrder(0.5), f.sample(grid), grid, "numeric")
            exact = apply(op, FracOrder(0.5), f, grid)
            errs.append(np.max(np.abs(num.values - exact.values)))
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        assert np.all(ratios > 3.5), ratios

    @pytest.mark.parametrize("n", [17, 129, 1025])
    def test_sampled_duality_exact(self, n):
        rng = np.random.default_rng(n)
        grid = Grid.on(-1, 2, n)
        s = C.cos(1.0).on(-1, 2).sample(grid)
        s = type(s)(grid, s.values + 0.01 * rng.normal(size=n))
        for op in ALL_OPERATORS:
            rep = check_duality(op, FracOrder(0.6), s, grid, method="numeric")
            assert rep.max_abs_residual <= 1e-13, op


class TestReport:
    def test_fields(self):
        rep = check_duality(OperatorKind.parse("right-rl-derivative"), FracOrder(0.4), C.const(2).on(0, 1), Grid.on(0, 1, 9))
        d = rep.to_dict()
        assert d["identity_name"] == "duality:right-rl-derivative"
        assert d["excluded_nodes"] == [8]
        assert d["verdict"] == "pass"
        assert d["grid"] == {"a": 0.0, "b": 1.0, "n_points": 9}
        assert d["order"] == {"alpha": 0.4, "n": 1}

    def test_errors_become_fail(self):
        s = C.sin(1.0).on(0, 1).sample(Grid.on(0, 1, 9))
        rep = check_duality(OperatorKind.parse("left-caputo"), FracOrder(1.5), s)
        assert rep.verdict == "fail"
        assert "UnsupportedOrderError" in rep.diagnostic
        assert rep.to_dict()["max_abs_residual"] is None

    def test_default_tolerances(self):
        g = Grid.on(0, 1, 11)
        assert default_tolerance(("analytic", "analytic"), g) == 1e-10
        assert default_tolerance(("analytic", "numeric"), g) == 1e-6
        assert default_tolerance(("numeric", "numeric"), g) == pytest.approx(0.01)

    def test_compare_verdict_boundary(self):
        grid = Grid.on(0, 1, 5)
        f = C.const(1.0).on(0, 1)
        op = OperatorKind.parse("left-rl-integral")
        r1 = apply(op, FracOrder(0.5), f, grid)
        rep = compare("same", r1, r1, FracOrder(0.5), 0.0)
        assert rep.passed and rep.max_abs_residual == 0.0


@given(closed_forms, st.sampled_from(ALL_OPERATORS), st.sampled_from([0.25, 0.5, 0.75, 1.25, 1.5]), intervals)
def test_duality_analytic_property(fn, op, alpha, ab):
    grid = Grid.on(ab[0], ab[1], 17)
    f = fn.on(*ab)
    try:
        native = apply(op, FracOrder(alpha), f, grid)
    except UnsupportedOrderError:
        return
    rep = check_duality(op, FracOrder(alpha), f, grid)
    scale = 1.0 + np.nanmax(np.abs(native.values)) if np.isfinite(native.values).any() else 1.0
    assert rep.max_abs_residual <= 1e-12 * scale
    assert len(rep.excluded_nodes) <= 2


@given(closed_forms, st.sampled_from(ALL_OPERATORS), fractional_orders)
def test_side_involution_bitwise(fn, op, alpha):
    grid = Grid.on(0.0, 1.0, 13)
    f = fn.on(0, 1)
    try:
        native = apply(op, FracOrder(alpha), f, grid)
    except UnsupportedOrderError:
        return
    # via_dual of the mirror operator on the dual function, reflected twice
    twice = via_dual(op.mirror, FracOrder(alpha), dual(f), grid.reflected()).reflected()
    assert np.array_equal(twice.values, native.values, equal_nan=True)
