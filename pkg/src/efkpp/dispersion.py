"""Dispersion relations of the linearisation at the rest states.

The right relation is ``d+(lam, nu) = -delta^2 nu^4 + nu^2 + c nu + f'(0) - lam``
and the left one replaces ``f'(0)`` by ``f'(1)``.  The pinched double root at
``nu = -eta_*`` fixes the linear spreading speed ``c_*``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ClusterOverlap, DoubleRootMerged, ExpansionBoundViolated
from .reaction import ReactionTerm


@dataclass(frozen=True)
class SpreadingData:
    delta: float
    eta_star: float
    c_star: float
    eta1: float
    eta2: float
    delta_bar: float
    fp0: float
    fp1: float

    @property
    def diffusivity(self) -> float:
        """``1 - 6 delta^2 eta_*^2``, half the curvature of the double root."""
        return 1.0 - 6.0 * self.delta**2 * self.eta_star**2

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "eta_star": self.eta_star,
            "c_star": self.c_star,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "delta_bar": self.delta_bar,
        }


def delta_bar(fp0: float) -> float:
    return 1.0 / np.sqrt(12.0 * fp0)


def double_root_rates(delta: float, fp0: float) -> tuple[float, float]:
    """Return ``(eta1, eta2)``, defined whenever ``12 delta^2 f'(0) <= 1``.

    ``eta2`` uses the cancellation-free form ``sqrt(2 f'(0) / (1 + sqrt(disc)))``
    so that it is accurate down to ``delta = 0``.
    """
    disc = 1.0 - 12.0 * delta**2 * fp0
    if disc < 0:
        raise DoubleRootMerged(f"1 - 12 delta^2 f'(0) = {disc:.3g} < 0")
    sq = np.sqrt(disc)
    eta2 = np.sqrt(2.0 * fp0 / (1.0 + sq))
    with np.errstate(divide="ignore", over="ignore"):
        eta1 = np.inf if delta == 0 else np.sqrt((1.0 + sq) / 6.0) / abs(delta)
    return float(eta1), float(eta2)


def spreading(delta: float, r: ReactionTerm) -> SpreadingData:
    """Critical decay rate and linear spreading speed for ``|delta| < delta_bar``."""
    db = delta_bar(r.fp0)
    if abs(delta) >= db:
        raise DoubleRootMerged(
            f"double root merged: |delta| = {abs(delta):.6g} >= delta_bar = {db:.6g}"
        )
    eta1, eta2 = double_root_rates(delta, r.fp0)
    c = 2.0 * eta2 - 4.0 * delta**2 * eta2**3
    return SpreadingData(
        delta=float(delta), eta_star=eta2, c_star=float(c), eta1=eta1, eta2=eta2,
        delta_bar=float(db), fp0=r.fp0, fp1=r.fp1,
    )


def dispersion_plus(lam, nu, s: SpreadingData, r: ReactionTerm | None = None):
    fp0 = s.fp0 if r is None else r.fp0
    return -s.delta**2 * nu**4 + nu**2 + s.c_star * nu + fp0 - lam


def dispersion_minus(lam, nu, s: SpreadingData, r: ReactionTerm | None = None):
    fp1 = s.fp1 if r is None else r.fp1
    return -s.delta**2 * nu**4 + nu**2 + s.c_star * nu + fp1 - lam


def shifted_plus_coeffs(lam: complex, s: SpreadingData) -> np.ndarray:
    """Coefficients (highest degree first) of ``nu -> d+(lam, -eta_* + nu)``."""
    d2, eta = s.delta**2, s.eta_star
    return np.array([-d2, 4 * eta * d2, s.diffusivity, 0.0, -lam], dtype=complex)


@dataclass(frozen=True)
class RootQuadruple:
    nu: np.ndarray  # (nu1, nu2, nu3, nu4)
    gamma: complex
    delta: float

    @property
    def nu2(self) -> complex:
        return complex(self.nu[1])

    @property
    def nu3(self) -> complex:
        return complex(self.nu[2])

    @property
    def pinched(self) -> bool:
        return self.nu2.real < 0 < self.nu3.real


def roots_near_origin(
    gamma: complex,
    s: SpreadingData,
    gamma0: float = 0.3,
    bound_constant: float = 4.0,
) -> RootQuadruple:
    """Spatial roots of ``d+(gamma^2, -eta_* + nu)`` for small ``gamma``.

    For ``delta = 0`` the quartic degenerates to ``nu^2 - gamma^2`` and only
    the slow pair is finite; ``nu1``/``nu4`` are reported as ``-inf``/``+inf``.
    """
    gamma = complex(gamma)
    if abs(gamma) > gamma0:
        raise ValueError(f"|gamma| = {abs(gamma):.3g} exceeds gamma0 = {gamma0}")
    lam = gamma * gamma
    d = abs(s.delta)
    if d == 0:
        slow = np.array([-gamma, gamma])
        fast = np.array([-np.inf, np.inf], dtype=complex)
    else:
        roots = np.roots(shifted_plus_coeffs(lam, s))
        is_slow = np.abs(roots) < 0.5 / d
        if is_slow.sum() != 2:
            raise ClusterOverlap(
                f"{int(is_slow.sum())} roots below the 1/(2|delta|) threshold"
            )
        slow = roots[is_slow]
        fast = np.sort_complex(roots[~is_slow])
        if not (fast[0].real < 0 < fast[1].real):
            raise ClusterOverlap("fast roots do not split across the imaginary axis")
    # nu2 continues -gamma analytically
    i2 = int(np.argmin(np.abs(slow + gamma)))
    nu2, nu3 = slow[i2], slow[1 - i2]
    bound = bound_constant * (d * abs(gamma) + abs(gamma) ** 2)
    if abs(nu2 + gamma) > bound + 1e-14:
        raise ExpansionBoundViolated(
            f"|nu2 + gamma| = {abs(nu2 + gamma):.3e} > {bound:.3e}"
        )
    nu = np.array([fast[0], nu2, nu3, fast[1]], dtype=complex)
    return RootQuadruple(nu=nu, gamma=gamma, delta=s.delta)


def minus_roots(lam: complex, s: SpreadingData) -> np.ndarray:
    """Roots of ``nu -> d-(lam, nu)``; for ``delta = 0`` only the two finite ones."""
    if s.delta == 0:
        return np.roots([1.0, s.c_star, s.fp1 - lam])
    return np.roots([-s.delta**2, 0.0, 1.0, s.c_star, s.fp1 - lam])


LABELS = ("plus-border", "minus-border", "unweighted-plus", "unweighted-minus")


@dataclass
class SpectrumCurve:
    label: str
    k: np.ndarray
    lam: np.ndarray = field(repr=False)

    def to_csv(self, path, mode="w"):
        with open(path, mode, newline="") as fh:
            w = csv.writer(fh)
            if mode == "w":
                w.writerow(["k", "re_lambda", "im_lambda", "label"])
            for k, lam in zip(self.k, self.lam):
                w.writerow([f"{k:.17g}", f"{lam.real:.17g}", f"{lam.imag:.17g}", self.label])


def plus_border(k, s: SpreadingData):
    """Symbol of the weighted far-field operator at frequency ``k``."""
    k = np.asarray(k, dtype=float)
    d2 = s.delta**2
    return -d2 * k**4 - s.diffusivity * k**2 - 4j * s.eta_star * d2 * k**3


def minus_border(k, s: SpreadingData):
    k = np.asarray(k, dtype=float)
    return -s.delta**2 * k**4 - k**2 + 1j * s.c_star * k + s.fp1


def unweighted_plus_border(k, s: SpreadingData):
    k = np.asarray(k, dtype=float)
    return -s.delta**2 * k**4 - k**2 + 1j * s.c_star * k + s.fp0


def essential_borders(
    s: SpreadingData, r: ReactionTerm | None = None, k_max: float = 10.0, n: int = 2001
) -> list[SpectrumCurve]:
    if k_max <= 0 or n < 2:
        raise ValueError("need k_max > 0 and n >= 2")
    if r is not None and (r.fp0 != s.fp0 or r.fp1 != s.fp1):
        raise ValueError("reaction term does not match the spreading data")
    k = np.linspace(-k_max, k_max, n)
    return [
        SpectrumCurve("plus-border", k, plus_border(k, s)),
        SpectrumCurve("minus-border", k, minus_border(k, s)),
        SpectrumCurve("unweighted-plus", k, unweighted_plus_border(k, s)),
        SpectrumCurve("unweighted-minus", k, minus_border(k, s)),
    ]


def curves_to_csv(curves, path):
    for i, c in enumerate(curves):
        c.to_csv(path, mode="w" if i == 0 else "a")
