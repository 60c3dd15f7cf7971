"""Point spectrum away from the origin.

A priori, unstable eigenvalues of the linearisation sit in a bounded region
fixed by ``sup |f'(q_*)|`` and the speed.  The discretised weighted operator
is then diagonalised densely and every eigenvalue near the right half plane
is classified either as part of a discretised essential band or as a
genuine point-spectrum candidate.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .dispersion import SpreadingData, minus_border, plus_border
from .operators import DiscreteOperator, Grid, assemble
from .weights import critical

R_BALL = 0.04
RE_WINDOW = -0.05


@dataclass(frozen=True)
class UnstableRegion:
    b_inf: float
    c_star: float

    def __post_init__(self):
        if not self.b_inf > 0:
            raise ValueError("b_inf must be positive")

    def im_bound(self, re):
        """Largest ``|Im lam|`` allowed at real part ``re``."""
        re = np.asarray(re, dtype=float)
        return np.where(re <= self.b_inf, self.c_star * np.sqrt(np.clip(self.b_inf - re, 0, None)), -1.0)

    def contains(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        return (lam.real >= 0) & (lam.real <= self.b_inf) & (np.abs(lam.imag) <= self.im_bound(lam.real) + 1e-12)

    @property
    def description(self) -> str:
        return (f"0 <= Re lam <= {self.b_inf:.6g}, "
                f"|Im lam| <= {self.c_star:.6g} sqrt({self.b_inf:.6g} - Re lam)")


def unstable_region(front, r=None) -> UnstableRegion:
    r = r or front.reaction
    b = float(np.max(np.abs(r.df(front.profile()))))
    return UnstableRegion(b, front.spreading.c_star)


def tol_band(g: Grid, eta: float, floor: float = 0.05, constant: float = 10.0) -> float:
    return max(floor, constant * g.h**2) + float(np.exp(-eta * g.x_max))


def border_distance(lam, s: SpreadingData, k_max: float = 4.0, n: int = 80001) -> np.ndarray:
    """Distance from each ``lam`` to the nearer of the two weighted border curves."""
    k = np.linspace(-k_max, k_max, n)
    curves = np.concatenate([plus_border(k, s), minus_border(k, s)])
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    out = np.empty(lam.size)
    for i, z in enumerate(lam):
        out[i] = np.min(np.abs(curves - z))
    return out


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    classified: list  # tag per eigenvalue in the window, aligned with `window`
    window: np.ndarray  # indices of eigenvalues with Re >= RE_WINDOW
    distances: np.ndarray
    unstable_point_candidates: list
    region: UnstableRegion
    tol_band: float
    r_ball: float
    delta: float
    bound_violations: list = field(default_factory=list)

    @property
    def windowed(self) -> np.ndarray:
        return self.eigenvalues[self.window]

    @property
    def unstable_off_band(self) -> list:
        """Eigenvalues with ``Re >= 0`` farther than ``tol_band`` from the borders."""
        return [lam for lam, d in zip(self.windowed, self.distances)
                if lam.real >= 0 and d > self.tol_band]

    def summary(self) -> dict:
        lam = self.windowed
        cand = [lam[i] for i, t in enumerate(self.classified) if t == "point-candidate"]
        gap = min((abs(z.real) for z in cand), default=None)
        return {
            "delta": self.delta,
            "n_eigenvalues": int(self.eigenvalues.size),
            "n_window": int(lam.size),
            "n_essential_band": int(sum(t == "essential-band" for t in self.classified)),
            "n_point_candidates": len(cand),
            "n_unstable_point_candidates": len(self.unstable_point_candidates),
            "max_re_eigenvalue": float(np.max(self.eigenvalues.real)),
            "min_distance_to_imaginary_axis": None if gap is None else float(gap),
            "tol_band": self.tol_band,
            "r_ball": self.r_ball,
            "region": self.region.description,
        }

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["re_lambda", "im_lambda", "class"])
            for lam, tag in zip(self.windowed, self.classified):
                wr.writerow([f"{lam.real:.17g}", f"{lam.imag:.17g}", tag])

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def dense_spectrum(L: DiscreteOperator, vectors: bool = False):
    A = L.dense()
    if vectors:
        return la.eig(A)
    return la.eigvals(A)


def classify_spectrum(L: DiscreteOperator, s: SpreadingData, region: UnstableRegion,
                      r_ball: float = R_BALL, eta: float | None = None,
                      eigenvalues: np.ndarray | None = None) -> SpectrumReport:
    """Dense eigensolve of ``L`` and classification of the eigenvalues near ``Re >= 0``."""
    if L.grid.h > 0.1:
        raise ValueError(f"h = {L.grid.h:.3g} too coarse to resolve the essential bands")
    ev = dense_spectrum(L) if eigenvalues is None else np.asarray(eigenvalues)
    eta = s.eta_star / 4 if eta is None else eta
    tol = tol_band(L.grid, eta)
    window = np.flatnonzero(ev.real >= RE_WINDOW)
    dist = border_distance(ev[window], s)
    tags = ["essential-band" if d <= tol else "point-candidate" for d in dist]
    unstable = [ev[i] for i, t in zip(window, tags)
                if t == "point-candidate" and ev[i].real >= 0 and abs(ev[i]) >= r_ball]
    violations = [z for z in unstable if not region.contains(z)]
    return SpectrumReport(ev, tags, window, dist, unstable, region, tol, r_ball, s.delta, violations)


def rayleigh_bound_check(A: DiscreteOperator, eigenpair, slack: float | None = None) -> bool:
    """Quadratic-form bounds ``Re lam <= I0`` and ``(Im lam)^2 <= c^2 (I0 - Re lam)``.

    ``A`` is the unweighted operator (it carries the potential and the speed);
    ``eigenpair = (lam, phi)`` with ``phi`` on interior nodes.  ``I0`` is the
    potential energy ``int f'(q) |phi|^2``.  Unless given, the slack is the
    eigen-residual ``||A phi - lam phi||``, which bounds how far the Rayleigh
    quotient can sit from ``lam``.
    """
    lam, phi = eigenpair
    lam = complex(lam)
    h = A.grid.h
    phi = np.asarray(phi, dtype=complex)
    nrm = np.sqrt(h * np.sum(np.abs(phi) ** 2))
    if nrm == 0:
        raise ValueError("zero eigenvector")
    phi = phi / nrm
    pot = A.meta["potential"]
    c = A.meta["speed"]
    I0 = h * np.sum(pot * np.abs(phi) ** 2)
    if slack is None:
        slack = float(np.sqrt(h * np.sum(np.abs(A.matrix @ phi - lam * phi) ** 2)))
    ok_re = lam.real <= I0 + slack
    ok_im = lam.imag**2 <= c**2 * max(I0 - lam.real, 0.0) + 2 * (abs(lam) + c**2 + abs(I0)) * slack + slack**2
    return bool(ok_re and ok_im)


def unweighted_eigenpairs(front, L_vals, L_vecs):
    """Map eigenvectors of the weighted operator back to plain functions."""
    x = front.grid.xi
    inv_w = np.exp(-critical(front.spreading).log(x))
    return L_vals, L_vecs * inv_w[:, None]


def unweighted_operator(front, g: Grid | None = None) -> DiscreteOperator:
    from .front_solver import front_coefficients

    return assemble("A", front.spreading, front_coefficients(front), g or front.grid)
