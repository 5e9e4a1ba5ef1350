import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlobstruct.frontend import parse_polynomial
from mlobstruct.polyring import BatchEvaluator, Polynomial, PolySystem, jacobian

XY = ["x", "y"]


def P(text, names=XY):
    return parse_polynomial(text, names)


HYPER = "(y-2)^2 - (x-1)*(x^5+2*x+5)^2"


# evaluate


def test_evaluate_examples():
    assert P("x^2 - y").evaluate([2, 3]) == 1
    assert P("x*y").evaluate([1j, 1j]) == -1
    assert P(HYPER).evaluate([1, 2]) == 0


def test_evaluate_wrong_length():
    with pytest.raises(ValueError):
        P("x+y").evaluate([1, 2, 3])


# partial derivatives


def test_partial_derivative_examples():
    assert P("x^2*y").partial_derivative(0) == P("2*x*y")
    assert P("x + 7").partial_derivative(1).is_zero()
    h = P(HYPER)
    assert h.total_degree() == 11
    assert h.partial_derivative(0).total_degree() == 10


def test_jacobian_examples():
    one = Polynomial.constant(2, 1.0)
    J = jacobian(PolySystem(2, [P("x+y-1")]))
    assert J == [[one, one]]
    J = jacobian(PolySystem(2, [P("x^2-y^3")]))
    assert J == [[P("2*x"), P("-3*y^2")]]
    J = jacobian(PolySystem(2, [P("x+y-1"), P("x*y")]))
    assert J[0] == [one, one]
    assert J[1] == [P("y"), P("x")]


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(7)
    names = ["a", "b", "c"]
    p = parse_polynomial("3*a^3*b - 2*b^2*c^4 + (1+2*i)*a*c + 5 - c^5", names)
    for _ in range(100):
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        for i in range(3):
            h = 1e-5 * (1 + abs(z[i]))
            e = np.zeros(3)
            e[i] = h
            fd = (p.evaluate(z + e) - p.evaluate(z - e)) / (2 * h)
            exact = p.partial_derivative(i).evaluate(z)
            assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


def test_batch_evaluator_matches_scalar():
    rng = np.random.default_rng(3)
    S = PolySystem(2, [P(HYPER), P("x*y - 3")])
    ev = BatchEvaluator(S)
    X = rng.normal(size=(20, 2)) + 1j * rng.normal(size=(20, 2))
    V, J = ev.values_and_jacobian(X)
    for b in range(20):
        np.testing.assert_allclose(V[b], S.evaluate(X[b]), rtol=1e-12)
        for j, row in enumerate(jacobian(S)):
            for i, q in enumerate(row):
                assert abs(J[b, j, i] - q.evaluate(X[b])) <= 1e-10 * (1 + abs(J[b, j, i]))


# ring laws with Gaussian-integer coefficients (exact in double precision)

_coeff = st.builds(complex, st.integers(-9, 9), st.integers(-9, 9))
_term = st.tuples(st.tuples(st.integers(0, 3), st.integers(0, 3)), _coeff)
_poly = st.lists(_term, max_size=5).map(lambda ts: Polynomial(2, ts))


@settings(max_examples=60, deadline=None)
@given(_poly, _poly, _poly)
def test_ring_laws(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p + q == q + p
    assert p * q == q * p
    assert (p - p).is_zero()


@settings(max_examples=60, deadline=None)
@given(_poly, _poly)
def test_degree_is_additive(p, q):
    if p.is_zero() or q.is_zero():
        assert (p * q).is_zero()
        return
    assert (p * q).total_degree() == p.total_degree() + q.total_degree()


def test_zero_polynomial_degree():
    z = Polynomial(2, [])
    assert z.is_zero()
    assert z.total_degree() == -math.inf


def test_terms_are_graded_ordered_and_deterministic():
    p = P("y^2 + x + 1 + x*y + x^2")
    q = P("x^2 + x*y + 1 + x + y^2")
    assert p.terms == q.terms
    degs = [sum(e) for e, _ in p.terms]
    assert degs == sorted(degs)


def test_bad_construction():
    with pytest.raises(ValueError):
        Polynomial(2, {(1,): 1.0})
    with pytest.raises(ValueError):
        Polynomial(2, {(-1, 0): 1.0})
    with pytest.raises(ValueError):
        Polynomial(2, {(1, 0): float("nan")})
    with pytest.raises(ValueError):
        P("x") + parse_polynomial("a", ["a", "b", "c"])
