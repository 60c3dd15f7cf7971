"""Exponential and algebraic weights and the conjugated-operator coefficients.

Every weight is written as ``omega = exp(l(x))`` with ``l`` smooth.  The
log-derivative ``g = l'`` interpolates between the left and right rates on
``[-1, 1]`` through a degree-7 smoothstep, so ``g`` is C^3 and all ratios
``omega^(k)/omega`` (k <= 4) are continuous and evaluated in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .dispersion import SpreadingData
from .errors import InconsistentParameters


@lru_cache(maxsize=None)
def smoothstep(order: int) -> Polynomial:
    """Polynomial ``S`` on [0, 1] with S(0)=0, S(1)=1 and ``order`` vanishing
    derivatives at both ends (degree ``2*order + 1``)."""
    n = order
    coef = np.zeros(2 * n + 2)
    for k in range(n + 1):
        coef[n + 1 + k] = comb(n + k, k) * comb(2 * n + 1, n - k) * (-1) ** k
    return Polynomial(coef)


class Bridge:
    """Monotone C^order transition from 0 (x <= a) to 1 (x >= b)."""

    def __init__(self, a: float, b: float, order: int):
        self.a, self.b, self.order = float(a), float(b), order
        p = smoothstep(order)
        w = self.b - self.a
        self._derivs = [p.deriv(k) * (1.0 / w) ** k if k else p for k in range(2 * order + 3)]
        self._anti = p.integ()  # antiderivative in t, S_int(0) = 0

    def __call__(self, x, k: int = 0):
        x = np.asarray(x, dtype=float)
        t = (x - self.a) / (self.b - self.a)
        inside = (t > 0) & (t < 1)
        out = np.zeros_like(t)
        if k == 0:
            out[t >= 1] = 1.0
        if k < len(self._derivs):
            out[inside] = self._derivs[k](t[inside])
        return out

    def integral(self, x):
        """``int_a^x s``: zero left of ``a``, equals ``x - (a+b)/2`` right of ``b``."""
        x = np.asarray(x, dtype=float)
        w = self.b - self.a
        t = np.clip((x - self.a) / w, 0.0, 1.0)
        out = w * self._anti(t)
        right = x > self.b
        out[right] = w * self._anti(1.0) + (x[right] - self.b)
        return out


_LOG_BRIDGE = Bridge(-1.0, 1.0, 3)


def bell(g: list[np.ndarray], k: int) -> np.ndarray:
    """``omega^(k)/omega`` from derivatives ``g = [l', l'', l''', l'''']`` of ``log omega``."""
    if k == 0:
        return np.ones_like(g[0])
    g1, g2, g3, g4 = (list(g) + [np.zeros_like(g[0])] * 4)[:4]
    if k == 1:
        return g1
    if k == 2:
        return g1**2 + g2
    if k == 3:
        return g1**3 + 3 * g1 * g2 + g3
    if k == 4:
        return g1**4 + 6 * g1**2 * g2 + 4 * g1 * g3 + 3 * g2**2 + g4
    raise ValueError("derivative order must be 0..4")


@dataclass(frozen=True)
class WeightSpec:
    eta_minus: float = 0.0
    eta_plus: float = 0.0
    kind: str = "two-sided-exponential"  # or "critical", "algebraic"
    r: float = 0.0

    def log(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "algebraic":
            return _LOG_BRIDGE(x) * 0.5 * self.r * np.log1p(x**2)
        if self.eta_minus == self.eta_plus:
            return self.eta_plus * x
        # log omega = eta_- x + (eta_+ - eta_-) int_{-1}^x s
        return self.eta_minus * x + (self.eta_plus - self.eta_minus) * _LOG_BRIDGE.integral(x)

    def log_derivs(self, x) -> list[np.ndarray]:
        """``[l', l'', l''', l'''']`` with ``l = log omega``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "algebraic":
            return _algebraic_log_derivs(x, self.r)
        if self.eta_minus == self.eta_plus:
            z = np.zeros_like(x)
            return [z + self.eta_plus, z, z, z]
        jump = self.eta_plus - self.eta_minus
        return [self.eta_minus + jump * _LOG_BRIDGE(x)] + [
            jump * _LOG_BRIDGE(x, k) for k in (1, 2, 3)
        ]

    def __call__(self, x):
        return np.exp(self.log(x))

    def ratio(self, x, k: int, inverse: bool = False):
        """``omega^(k)/omega``; with ``inverse`` the same for ``1/omega``."""
        g = self.log_derivs(x)
        if inverse:
            g = [-gi for gi in g]
        return bell(g, k)


def _algebraic_log_derivs(x, r):
    s = [_LOG_BRIDGE(x, k) for k in range(5)]
    q = 1.0 + x**2
    L = [
        0.5 * r * np.log1p(x**2),
        r * x / q,
        r * (1 - x**2) / q**2,
        2 * r * x * (x**2 - 3) / q**3,
        -6 * r * (x**4 - 6 * x**2 + 1) / q**4,
    ]
    # Leibniz rule for (s L)^(j), j = 1..4
    return [sum(comb(j, i) * s[i] * L[j - i] for i in range(j + 1)) for j in (1, 2, 3, 4)]


def exponential(eta_minus: float, eta_plus: float) -> WeightSpec:
    return WeightSpec(eta_minus, eta_plus, "two-sided-exponential")


def one_sided(eta: float) -> WeightSpec:
    """``omega_{0, eta}``."""
    return WeightSpec(0.0, eta, "two-sided-exponential")


def critical(s: SpreadingData) -> WeightSpec:
    return WeightSpec(0.0, s.eta_star, "critical")


def algebraic(r: float) -> WeightSpec:
    return WeightSpec(kind="algebraic", r=r)


def weight_eval(w: WeightSpec, x, derivative_order: int = 0):
    if not 0 <= derivative_order <= 4:
        raise ValueError("derivative_order must be in 0..4")
    return w(x) * w.ratio(x, derivative_order)


def default_aux_eta(s: SpreadingData) -> float:
    return s.eta_star / 4.0


def conjugation_coefficients(s: SpreadingData, x) -> dict[str, np.ndarray]:
    """Coefficients ``a3, a2, a1`` and ``a0 - f'(q_*)`` of ``omega_* A omega_*^{-1}``."""
    w = critical(s)
    p = [w.ratio(x, k, inverse=True) for k in range(5)]
    d2, c = s.delta**2, s.c_star
    return {
        "a3": -4 * p[1],
        "a2": -6 * p[2],
        "a1": c + 2 * p[1] - 4 * d2 * p[3],
        "a0_shift": c * p[1] + p[2] - d2 * p[4],
    }


@dataclass(frozen=True)
class CoefficientSet:
    a3: Callable
    a2: Callable
    a1: Callable
    a0: Callable
    a0_tilde: Callable
    potential: Callable  # f'(q_*)
    delta: float


def coefficients(s: SpreadingData, q_star, r) -> CoefficientSet:
    """Variable coefficients of the weighted linearisation about ``q_star``.

    ``q_star`` is a :class:`~efkpp.front_solver.FrontSolution` (or anything
    with ``delta`` and a ``q(x)`` method).
    """
    if q_star is not None and abs(q_star.delta - s.delta) > 0:
        raise InconsistentParameters(
            f"front delta {q_star.delta} != spreading delta {s.delta}"
        )

    def part(name):
        return lambda x: conjugation_coefficients(s, x)[name]

    def shift(x):
        return conjugation_coefficients(s, x)["a0_shift"]

    def potential(x):
        if q_star is None:
            raise InconsistentParameters("a0 needs a front")
        return r.df(q_star.q(x))

    return CoefficientSet(
        a3=part("a3"),
        a2=part("a2"),
        a1=part("a1"),
        a0=lambda x: potential(x) + shift(x),
        a0_tilde=lambda x: r.fp0 + shift(x),
        potential=potential,
        delta=s.delta,
    )
