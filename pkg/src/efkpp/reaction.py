"""KPP-type reaction terms.

A :class:`ReactionTerm` carries ``f`` together with analytic first and second
derivatives; these enter Newton Jacobians directly, so they are never
obtained by numerical differentiation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ReactionTerm:
    f: Func
    df: Func
    d2f: Func
    fp0: float
    fp1: float
    name: str = "custom"

    def N(self, u):
        """Nonlinear part ``f(u) - f'(0) u``."""
        return self.f(u) - self.fp0 * u

    def dN(self, u):
        return self.df(u) - self.fp0


def logistic() -> ReactionTerm:
    return ReactionTerm(
        f=lambda u: u * (1.0 - u),
        df=lambda u: 1.0 - 2.0 * u,
        d2f=lambda u: -2.0 * np.ones_like(np.asarray(u, dtype=float)),
        fp0=1.0,
        fp1=-1.0,
        name="logistic",
    )


def polynomial(coeffs: Sequence[float], name: str = "polynomial") -> ReactionTerm:
    """Reaction term ``f(u) = sum_k coeffs[k] u**k``."""
    p = Polynomial(np.asarray(coeffs, dtype=float))
    dp, d2p = p.deriv(1), p.deriv(2)
    return ReactionTerm(
        f=p, df=dp, d2f=d2p, fp0=float(dp(0.0)), fp1=float(dp(1.0)), name=name
    )


def sine() -> ReactionTerm:
    """``f(u) = sin(pi u)/pi``, KPP with ``f'(0) = 1``, ``f'(1) = -1``."""
    return ReactionTerm(
        f=lambda u: np.sin(np.pi * u) / np.pi,
        df=lambda u: np.cos(np.pi * u),
        d2f=lambda u: -np.pi * np.sin(np.pi * u),
        fp0=1.0,
        fp1=-1.0,
        name="sine",
    )


def validate(r: ReactionTerm, n_samples: int = 1000, tol: float = 1e-14) -> list[str]:
    """Return the list of violated structural hypotheses (empty if none).

    The strict KPP condition ``f'' < 0`` and the weaker condition
    ``0 < f(u) <= f'(0) u`` are checked and reported separately.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    out = []
    f0, f1 = float(r.f(0.0)), float(r.f(1.0))
    if abs(f0) > tol:
        out.append(f"f(0) = {f0:.3e} != 0")
    if abs(f1) > tol:
        out.append(f"f(1) = {f1:.3e} != 0")
    if not r.fp0 > 0:
        out.append(f"f'(0) = {r.fp0} is not positive")
    if not r.fp1 < 0:
        out.append(f"f'(1) = {r.fp1} is not negative")
    # open interval (0, 1)
    u = np.linspace(0.0, 1.0, n_samples + 2)[1:-1]
    d2 = np.asarray(r.d2f(u), dtype=float)
    bad = np.nonzero(d2 >= 0)[0]
    if bad.size:
        out.append(f"d2f nonnegative at u~{u[bad[0]]:.4g} (KPP condition f''<0 fails)")
    fu = np.asarray(r.f(u), dtype=float)
    weak = np.nonzero((fu <= 0) | (fu > r.fp0 * u * (1 + 1e-12)))[0]
    if weak.size:
        out.append(
            f"0 < f(u) <= f'(0) u fails at u~{u[weak[0]]:.4g} (weak KPP condition)"
        )
    return out
