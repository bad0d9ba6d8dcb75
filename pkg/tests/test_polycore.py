import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballmap.hexagon_data import hexagon_h
from ballmap.polycore import MultiPoly, PolyMap, UniPoly, compose, nth_derivative, taylor_jet

small = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@st.composite
def multipolys(draw, nvars=2, max_deg=3):
    n_terms = draw(st.integers(0, 4))
    terms = {}
    for _ in range(n_terms):
        e = tuple(draw(st.integers(0, max_deg)) for _ in range(nvars))
        if sum(e) <= max_deg:
            terms[e] = draw(small)
    return MultiPoly(nvars, terms)


@st.composite
def polymaps(draw, n_in=2, n_out=2):
    return PolyMap([draw(multipolys(n_in)) for _ in range(n_out)], n_in)


def test_eval_basics():
    p = MultiPoly(2, {(2, 0): 1, (0, 2): 1})
    assert p((3, 4)) == 25
    assert MultiPoly(3)((1, 2, 3)) == 0
    assert hexagon_h()(0) == 2


def test_eval_dimension_mismatch():
    p = MultiPoly.variable(0, 2)
    with pytest.raises(ValueError):
        p((1, 2, 3))


def test_compose_examples():
    f = UniPoly([0, 0, 1])
    g = UniPoly([1, 1])
    assert f.compose(g) == UniPoly([1, 2, 1])
    F = PolyMap([MultiPoly(2, {(2, 1): 3, (0, 0): 1}), MultiPoly.variable(1, 2)])
    assert compose(F, PolyMap.identity(2), expand=True).components == F.components


def test_derivative_examples():
    g = UniPoly([0, 3, 0, -4])
    assert g.derivative() == UniPoly([3, 0, -12])
    assert MultiPoly.constant(5, 2).derivative(0).is_zero
    assert nth_derivative(UniPoly([0, 0, 0, 1]), 3) == UniPoly([6])


def test_taylor_jet_examples():
    assert taylor_jet([UniPoly([0, 0, 1])], 0, 2) == [(0,), (0,), (2,)]
    assert taylor_jet([UniPoly([7])], 3, 2) == [(7,), (0,), (0,)]
    h = hexagon_h()
    alpha = [h, h.compose(UniPoly([0, -1]))]
    assert taylor_jet(alpha, 0, 0) == [(2, 2)]


@settings(max_examples=40, deadline=None)
@given(polymaps(), polymaps(), polymaps())
def test_compose_is_associative(f, g, h):
    left = compose(compose(f, g, expand=True), h, expand=True)
    right = compose(f, compose(g, h, expand=True), expand=True)
    assert left.components == right.components


@settings(max_examples=40, deadline=None)
@given(polymaps(), polymaps(), st.lists(st.tuples(small, small), min_size=1, max_size=5))
def test_compose_commutes_with_eval(f, g, points):
    fg = compose(f, g, expand=True)
    for x in points:
        assert fg(x) == f(g(x))


@settings(max_examples=40, deadline=None)
@given(multipolys(), multipolys(), st.integers(0, 1))
def test_leibniz_rule(p, q, var):
    lhs = (p * q).derivative(var)
    rhs = p.derivative(var) * q + p * q.derivative(var)
    assert lhs == rhs


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(min_value=-10, max_value=10, max_denominator=50), min_size=1, max_size=41),
       st.lists(st.floats(min_value=-1, max_value=1), min_size=1, max_size=8))
def test_float_eval_matches_exact(coeffs, ts):
    u = UniPoly(coeffs).with_chebyshev((-1, 1))
    for t in ts:
        exact = float(u(Fraction(t)))
        approx = float(u.eval_float(np.array([t]))[0])
        scale = max(1.0, sum(abs(float(c)) for c in coeffs))
        assert abs(exact - approx) <= 1e-9 * scale


def test_degree34_float_eval_matches_exact():
    h = hexagon_h()
    T = np.linspace(-3, 3, 61)
    approx = h.eval_float(T)
    exact = np.array([float(h(Fraction(t))) for t in T])
    assert np.max(np.abs(approx - exact)) <= 1e-9 * max(1.0, np.max(np.abs(exact)))


@settings(max_examples=30, deadline=None)
@given(polymaps())
def test_json_round_trip_is_bit_exact(f):
    g = PolyMap.from_json(json.loads(json.dumps(f.to_json())))
    assert g.components == f.components
    assert g.dumps() == f.dumps()


def test_zero_polynomial_has_no_coefficients():
    assert UniPoly([0, 0, 0]).coeffs == ()
    assert UniPoly([0, 0, 0]).degree == -1
