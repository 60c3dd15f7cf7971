import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efkpp.reaction import logistic, polynomial, sine, validate

unit = st.floats(0.0, 1.0, allow_nan=False)


@pytest.mark.parametrize("make", [logistic, sine])
def test_builtin_terms_are_kpp(make):
    r = make()
    assert validate(r) == []
    assert r.fp0 == 1.0 and r.fp1 == -1.0


@given(st.lists(unit, min_size=1, max_size=20))
@settings(max_examples=50, deadline=None)
def test_polynomial_reproduces_logistic_exactly(us):
    u = np.array(us)
    p, lg = polynomial([0.0, 1.0, -1.0]), logistic()
    np.testing.assert_allclose(p.f(u), lg.f(u), atol=1e-15)
    np.testing.assert_allclose(p.df(u), lg.df(u), atol=1e-15)
    np.testing.assert_allclose(p.d2f(u), lg.d2f(u), atol=1e-15)


@given(st.floats(-1.0, 2.0), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=50, deadline=None)
def test_polynomial_derivatives_match_symbolic(u, a, b, c):
    p = polynomial([0.0, a, b, c])
    assert p.df(u) == pytest.approx(a + 2 * b * u + 3 * c * u**2, abs=1e-12)
    assert p.d2f(u) == pytest.approx(2 * b + 6 * c * u, abs=1e-12)


def test_nonlinear_part_of_logistic_is_minus_square():
    u = np.linspace(0, 1, 11)
    r = logistic()
    np.testing.assert_allclose(r.N(u), -u**2, atol=1e-15)
    np.testing.assert_allclose(r.dN(u), -2 * u, atol=1e-15)


def test_convex_near_zero_is_rejected():
    # u (1 - u)(u + 0.1): f'' = 1.8 - 6u > 0 and f > f'(0) u for small u
    r = polynomial([0.0, 0.1, 0.9, -1.0])
    problems = validate(r)
    assert len(problems) == 2
    assert "f''<0" in problems[0] and "weak KPP" in problems[1]


def test_cubic_with_negative_curvature_is_accepted():
    # u (1 - u)(1 + u) = u - u^3, f'' = -6u < 0 on (0, 1)
    assert validate(polynomial([0.0, 1.0, 0.0, -1.0])) == []


def test_wrong_equilibria_and_signs_are_reported():
    problems = validate(polynomial([0.0, 1.0]))  # f = u
    assert any("f(1)" in p for p in problems)
    assert any("f'(1)" in p for p in problems)
    problems = validate(polynomial([0.0, -1.0, 1.0]))  # f = u(u - 1)
    assert any("f'(0)" in p for p in problems)


def test_validate_rejects_tiny_sample():
    with pytest.raises(ValueError):
        validate(logistic(), n_samples=1)
