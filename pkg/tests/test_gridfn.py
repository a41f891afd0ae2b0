from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import closed_forms, intervals
from hypothesis import given
from hypothesis import strategies as st

from fracdual.gridfn import (
    ClosedFormFn,
    DomainError,
    FuncSpecError,
    Grid,
    Interval,
    SampledFn,
    dual,
    evaluate,
    format_funcspec,
    parse_funcspec,
)


class TestIntervalGrid:
    def test_interval_requires_a_below_b(self):
        with pytest.raises(ValueError):
            Interval(1.0, 1.0)
        with pytest.raises(ValueError):
            Interval(2.0, 1.0)

    def test_reflected_interval(self):
        assert Interval(0.5, 2.0).reflected() == Interval(-2.0, -0.5)

    @pytest.mark.parametrize("n", [2, 3, 17, 1025])
    def test_endpoints_pinned(self, n):
        g = Grid.on(0.1, 0.7, n)
        assert g.nodes[0] == 0.1
        assert g.nodes[-1] == 0.7
        assert g.h == pytest.approx(0.6 / (n - 1))
        assert len(g.nodes) == n

    def test_nodes_read_only(self):
        g = Grid.on(0, 1, 5)
        with pytest.raises(ValueError):
            g.nodes[0] = 3.0

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            Grid.on(0, 1, 1)

    def test_reflected_grid_nodes(self):
        g = Grid.on(0.0, 1.0, 11)
        np.testing.assert_allclose(g.reflected().nodes, -g.nodes[::-1], atol=1e-15)

    def test_node_index(self):
        g = Grid.on(0.0, 1.0, 5)
        assert g.node_index(0.5) == 2
        assert g.node_index(0.5 + 1e-12) == 2
        with pytest.raises(ValueError):
            g.node_index(0.3)


class TestClosedForm:
    def test_const(self):
        assert ClosedFormFn.const(5.0).on(0, 1).at(0.3) == 5.0

    def test_poly_square(self):
        assert ClosedFormFn.poly(1, 0, 0).on(0, 1).at(0.5) == 0.25

    @pytest.mark.parametrize("right", [False, True])
    def test_power_anchor(self, right):
        f = ClosedFormFn.power(0.5, right=right).on(1.0, 3.0)
        x = 1.5
        expected = (3.0 - x) ** 0.5 if right else (x - 1.0) ** 0.5
        assert f.at(x) == pytest.approx(expected, rel=1e-15)

    def test_power_domain(self):
        with pytest.raises(DomainError):
            ClosedFormFn.power(-1.0)
        with pytest.raises(DomainError):
            ClosedFormFn.power(-2.0)

    def test_out_of_interval(self):
        with pytest.raises(ValueError):
            ClosedFormFn.const(1.0).on(0, 1).at(1.5)

    @pytest.mark.parametrize(
        "fn, x, d1, d2",
        [
            (ClosedFormFn.poly(2, -1, 3), 0.7, 4 * 0.7 - 1, 4.0),
            (ClosedFormFn.exp(1.3), 0.4, 1.3 * math.exp(0.52), 1.69 * math.exp(0.52)),
            (ClosedFormFn.sin(2.0, 0.1), 0.3, 2 * math.cos(0.7), -4 * math.sin(0.7)),
            (ClosedFormFn.cos(2.0, 0.1), 0.3, -2 * math.sin(0.7), -4 * math.cos(0.7)),
            (ClosedFormFn.power(2.5), 0.64, 2.5 * 0.64**1.5, 3.75 * 0.64**0.5),
            (ClosedFormFn.power(2.5, right=True), 0.36, -2.5 * 0.64**1.5, 3.75 * 0.64**0.5),
        ],
    )
    def test_derivatives(self, fn, x, d1, d2):
        f = fn.on(0.0, 1.0)
        assert f.derivative(x, 1) == pytest.approx(d1, rel=1e-14)
        assert f.derivative(x, 2) == pytest.approx(d2, rel=1e-14)


class TestDual:
    def test_const(self):
        f = ClosedFormFn.const(2.5).on(0, 1)
        fd = dual(f)
        assert fd.interval == Interval(-1, 0)
        assert fd.at(-0.3) == 2.5

    def test_identity_function(self):
        fd = dual(ClosedFormFn.poly(1, 0).on(0, 1))
        assert fd.interval == Interval(-1, 0)
        for x in (-1.0, -0.4, 0.0):
            assert fd.at(x) == -x

    def test_sampled_reverses(self):
        s = SampledFn(Grid.on(0, 1, 3), [0.5, 1.5, 4.0])
        sd = dual(s)
        assert sd.grid.interval == Interval(-1, 0)
        assert list(sd.values) == [4.0, 1.5, 0.5]

    @given(closed_forms, intervals)
    def test_involution_closed_form(self, fn, ab):
        f = fn.on(*ab)
        assert dual(dual(f)) == f

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40), intervals)
    def test_involution_sampled(self, values, ab):
        s = SampledFn(Grid.on(ab[0], ab[1], len(values)), values)
        assert dual(dual(s)) == s

    @given(closed_forms, intervals, st.floats(0.0, 1.0))
    def test_pointwise(self, fn, ab, t):
        a, b = ab
        f = fn.on(a, b)
        x = min(b, a + t * (b - a))
        v, vd = f.at(x), dual(f).at(-x)
        assert vd == pytest.approx(v, rel=1e-13, abs=1e-13)

    @given(closed_forms, intervals, st.floats(0.0, 1.0), st.sampled_from([1, 2]))
    def test_dual_derivatives_alternate(self, fn, ab, t, k):
        a, b = ab
        f = fn.on(a, b)
        x = a + t * (b - a)
        if fn.family == "pow" and (x in (a, b)):
            return
        lhs = dual(f).derivative(-x, k)
        rhs = (-1) ** k * f.derivative(x, k)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestSampled:
    def test_at_node(self):
        s = SampledFn(Grid.on(0, 1, 3), [1.0, 2.0, 3.0])
        assert evaluate(s, 0.5) == 2.0

    def test_off_node(self):
        s = SampledFn(Grid.on(0, 1, 3), [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            s.at(0.25)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            SampledFn(Grid.on(0, 1, 3), [1.0, math.nan, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            SampledFn(Grid.on(0, 1, 3), [1.0, 2.0])

    def test_values_immutable(self):
        s = SampledFn(Grid.on(0, 1, 3), [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            s.values[0] = 7.0


class TestFuncspec:
    @pytest.mark.parametrize(
        "text, fn",
        [
            ("const:v=3", ClosedFormFn.const(3)),
            ("pow:beta=0.5", ClosedFormFn.power(0.5)),
            ("pow:beta=2,side=1", ClosedFormFn.power(2, right=True)),
            ("poly:c=1,0,-2", ClosedFormFn.poly(1, 0, -2)),
            ("sin:omega=3.14159", ClosedFormFn.sin(3.14159)),
            ("cos:omega=2,phi=-0.5", ClosedFormFn.cos(2, -0.5)),
            ("exp:lam=-1e-3", ClosedFormFn.exp(-1e-3)),
        ],
    )
    def test_parse(self, text, fn):
        assert parse_funcspec(text) == fn

    def test_power_domain_error(self):
        with pytest.raises(DomainError):
            parse_funcspec("pow:beta=-2")

    @pytest.mark.parametrize(
        "text, pos",
        [
            ("", 0),
            ("tan:x=1", 0),
            ("sin", 3),
            ("sin:", 4),
            ("sin:omega=", 10),
            ("sin:omega=1,", 12),
            ("sin:omega=1;", 11),
            ("sin: omega=1", 4),
            ("sin:freq=1", 4),
            ("exp:lam=1,lam=2", 10),
        ],
    )
    def test_errors_report_position(self, text, pos):
        with pytest.raises(FuncSpecError) as info:
            parse_funcspec(text)
        assert info.value.pos == pos
        assert "expected" in str(info.value)

    @given(closed_forms)
    def test_round_trip(self, fn):
        parsed = parse_funcspec(format_funcspec(fn))
        assert parsed == fn
        assert parse_funcspec(format_funcspec(parsed)) == parsed
