import numpy as np
import pytest
import sympy
from oracles import smoothstep7, symbolic_critical_log

from efkpp.dispersion import spreading
from efkpp.errors import InconsistentParameters
from efkpp.reaction import logistic
from efkpp.weights import (
    Bridge,
    algebraic,
    coefficients,
    conjugation_coefficients,
    critical,
    default_aux_eta,
    exponential,
    smoothstep,
    weight_eval,
)

X = sympy.Symbol("x", real=True)
POINTS = [-3.0, -0.7, -0.2, 0.4, 0.95, 2.5, 6.0]


def test_smoothstep_matches_explicit_polynomial():
    t = np.linspace(0, 1, 21)
    np.testing.assert_allclose(smoothstep(3)(t), smoothstep7(t), atol=1e-13)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_bridge_is_flat_at_both_ends(order):
    b = Bridge(-1.0, 1.0, order)
    assert b(np.array([-1.0]))[0] == 0.0 and b(np.array([1.0]))[0] == 1.0
    for k in range(1, order + 1):
        ends = b(np.array([-1 + 1e-9, 1 - 1e-9]), k)
        np.testing.assert_allclose(ends, 0.0, atol=1e-6)


def test_bridge_integral():
    b = Bridge(-1.0, 1.0, 3)
    x = np.array([-2.0, 1.0, 4.0])
    np.testing.assert_allclose(b.integral(x), [0.0, 1.0, 4.0], atol=1e-14)


@pytest.mark.parametrize("delta", [0.0, 0.1])
def test_critical_weight_matches_symbolic(delta):
    s = spreading(delta, logistic())
    eta = sympy.Float(s.eta_star, 30)
    ell = symbolic_critical_log(eta, X)
    w = critical(s)
    for x0 in POINTS:
        # differentiate the branch that contains x0
        expr = [arg for arg, cond in ell.args if bool(cond.subs(X, x0))][0]
        assert float(expr.subs(X, x0)) == pytest.approx(float(w.log(np.array([x0]))[0]), abs=1e-12)
        omega = sympy.exp(expr)
        for k in range(1, 5):
            exact = float((sympy.diff(omega, X, k) / omega).subs(X, x0))
            assert w.ratio(np.array([x0]), k)[0] == pytest.approx(exact, rel=1e-10, abs=1e-12)


def test_algebraic_weight_right_of_bridge():
    w = algebraic(3.0)
    omega = (1 + X**2) ** sympy.Rational(3, 2)
    for x0 in [1.5, 2.0, 7.0]:
        assert w(np.array([x0]))[0] == pytest.approx(float(omega.subs(X, x0)), rel=1e-12)
        for k in range(1, 5):
            exact = float((sympy.diff(omega, X, k) / omega).subs(X, x0))
            assert w.ratio(np.array([x0]), k)[0] == pytest.approx(exact, rel=1e-10, abs=1e-12)


def test_algebraic_weight_is_flat_on_the_left():
    w = algebraic(3.0)
    x = np.array([-5.0, -2.0])
    np.testing.assert_allclose(w(x), 1.0)
    for k in range(1, 5):
        np.testing.assert_allclose(w.ratio(x, k), 0.0, atol=1e-15)


@pytest.mark.parametrize("delta", [0.0, 0.1])
def test_conjugation_identity_symbolic(delta):
    """``omega A0 (omega^-1 v)`` equals the conjugated coefficients applied to ``v``."""
    s = spreading(delta, logistic())
    eta = sympy.Float(s.eta_star, 30)
    ell = symbolic_critical_log(eta, X)
    v = sympy.exp(-((X - 0.3) ** 2))
    for x0 in POINTS:
        expr = [arg for arg, cond in ell.args if bool(cond.subs(X, x0))][0]
        u = v * sympy.exp(-expr)
        A0u = -(delta**2) * sympy.diff(u, X, 4) + sympy.diff(u, X, 2) + s.c_star * sympy.diff(u, X)
        lhs = float((sympy.exp(expr) * A0u).subs(X, x0))
        dv = [float(sympy.diff(v, X, k).subs(X, x0)) for k in range(5)]
        cc = {k: float(val[0]) for k, val in conjugation_coefficients(s, np.array([x0])).items()}
        d2 = delta**2
        rhs = (-d2 * dv[4] + d2 * cc["a3"] * dv[3] + (1 + d2 * cc["a2"]) * dv[2]
               + cc["a1"] * dv[1] + cc["a0_shift"] * dv[0])
        assert rhs == pytest.approx(lhs, rel=1e-10, abs=1e-12)


def test_far_field_coefficients_are_constant():
    s = spreading(0.1, logistic())
    cc = conjugation_coefficients(s, np.array([5.0, 20.0]))
    eta = s.eta_star
    np.testing.assert_allclose(cc["a3"], 4 * eta)
    np.testing.assert_allclose(cc["a2"], -6 * eta**2)
    # the shifted potential cancels f'(0) at the double root
    np.testing.assert_allclose(cc["a0_shift"] + 1.0, 0.0, atol=1e-12)


def test_weight_eval_and_aux_rate():
    s = spreading(0.1, logistic())
    assert default_aux_eta(s) == pytest.approx(s.eta_star / 4)
    w = exponential(0.5, 0.5)
    x = np.array([0.0, 1.0])
    np.testing.assert_allclose(weight_eval(w, x, 2), 0.25 * np.exp(0.5 * x))
    with pytest.raises(ValueError):
        weight_eval(w, x, 5)


def test_coefficients_need_consistent_front():
    s = spreading(0.1, logistic())
    cs = coefficients(s, None, logistic())
    with pytest.raises(InconsistentParameters):
        cs.a0(np.zeros(3))

    class Fake:
        delta = 0.05

    with pytest.raises(InconsistentParameters):
        coefficients(s, Fake(), logistic())
