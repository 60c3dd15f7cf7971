"""Evans-type function near the origin via a Lyapunov-Schmidt bordered solve.

For ``lam = gamma^2`` close to zero a solution of ``(L - gamma^2) u = 0`` is
sought as ``u = w + h`` with ``h = chi_plus exp(nu2 x)``, where ``nu2`` is the
slow spatial root continuing ``-gamma``.  The equation is solved modulo the
cokernel direction, with a scalar multiplier ``kappa`` absorbing the
component along ``omega^{-2} phi``; what is left over, the pairing of the
preconditioned residual with ``phi``, is ``E(delta, gamma)``.

On a truncated grid the operator ``L_h`` is square, so the multiplier needs
one more equation; as for the front, it is the one-sided decay row
``w'(x_max) = 0``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dispersion import minus_roots, roots_near_origin
from .errors import InvalidSpectralPoint, LSFailure
from .front_solver import FrontSolution, cutoff_exp_action, front, linearization
from .operators import (
    CokernelData,
    FieldSample,
    Grid,
    cokernel,
    diff_matrices,
    helmholtz_solve,
    inner,
    right_slope_row,
)
from .reaction import ReactionTerm
from .weights import default_aux_eta

GAMMA0 = 0.3
DEFAULT_THRESHOLD = 1e-3


def sech_bump(x, center: float = 0.0):
    return 1.0 / np.cosh(np.asarray(x, dtype=float) - center)


@dataclass
class EvansEnv:
    """Front, cokernel and assembled ``L(delta)`` shared by all ``gamma`` at one ``delta``.

    ``control`` adds ``control * sech(x)`` to the potential ``f'(q_*)``.
    """

    front: FrontSolution
    kpp_front: FrontSolution
    eta: float | None = None
    control: float = 0.0
    gamma0: float = GAMMA0
    _lu: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.eta is None:
            self.eta = default_aux_eta(self.kpp_front.spreading)
        self.grid = self.front.grid
        self.s = self.front.spreading
        x = self.grid.xi
        self.extra = self.control * sech_bump(x) if self.control else None
        self.L = linearization(self.front, extra_potential=self.extra).matrix
        pot = self.front.reaction.df(self.front.q(x))
        self.potential = pot if self.extra is None else pot + self.extra

    @classmethod
    def build(cls, r: ReactionTerm, delta: float, grid: Grid | None = None, **kw) -> "EvansEnv":
        grid = grid or Grid()
        q0 = front(r, 0.0, grid)
        qd = q0 if delta == 0 else front(r, delta, grid)
        return cls(qd, q0, **kw)

    def with_control(self, control: float) -> "EvansEnv":
        return EvansEnv(self.front, self.kpp_front, self.eta, control, self.gamma0)

    @cached_property
    def cokernel(self) -> CokernelData:
        return cokernel(self.kpp_front, self.kpp_front.spreading, self.grid, self.eta)

    @cached_property
    def multiplier_column(self) -> np.ndarray:
        """``(1 - delta^2 D^2) omega^{-2} phi`` on interior nodes."""
        riesz = self.cokernel.riesz[1:-1]
        D2 = diff_matrices(self.grid.n, self.grid.h, self.grid.order)[1]
        return riesz - self.s.delta**2 * (D2 @ riesz)

    def far_field_residual(self, gamma: complex, nu2: complex) -> np.ndarray:
        """``(L - gamma^2)[chi_plus e^{nu2 x}]`` evaluated in closed form."""
        x = self.grid.xi
        rate = self.s.eta_star - nu2
        core = cutoff_exp_action(
            x, self.front.env.cut, rate, 1.0, 0.0, self.s.delta, self.s.c_star,
            self.potential - gamma**2,
        )
        return np.exp(nu2 * x) * core

    def factor(self, gamma: complex):
        key = complex(gamma) ** 2
        if key not in self._lu:
            m = self.grid.n - 2
            A = self.L - key * sp.identity(m)
            col = sp.csr_matrix(-self.multiplier_column[:, None])
            M = sp.bmat([[A, col], [right_slope_row(self.grid), None]], format="csc")
            if key != 0:
                M = M.astype(complex)
            try:
                self._lu[key] = spla.splu(M)
            except RuntimeError as exc:
                raise LSFailure(f"bordered Evans system singular at gamma={gamma}: {exc}") from exc
        return self._lu[key]


@dataclass
class EvansSample:
    delta: float
    gamma: complex
    nu2: complex
    E: complex
    core_w: FieldSample
    solver_residual: float
    kappa: complex

    @property
    def lam(self) -> complex:
        return self.gamma**2


def check_omega(gamma: complex, env: EvansEnv):
    """Raise unless ``gamma^2`` lies in ``{0}`` or the resolvent set near the origin."""
    gamma = complex(gamma)
    if gamma.real < 0:
        raise InvalidSpectralPoint(f"Re gamma = {gamma.real:.3g} < 0 (principal branch)")
    if abs(gamma) > env.gamma0:
        raise InvalidSpectralPoint(f"|gamma| = {abs(gamma):.3g} exceeds gamma0 = {env.gamma0}")
    if gamma == 0:
        return roots_near_origin(0.0, env.s, env.gamma0)
    quad = roots_near_origin(gamma, env.s, env.gamma0)
    if not quad.pinched:
        raise InvalidSpectralPoint(f"gamma^2 = {gamma**2:.4g} lies in the essential spectrum")
    mr = minus_roots(gamma**2, env.s)
    if np.sum(mr.real < 0) != np.sum(mr.real > 0):
        raise InvalidSpectralPoint(f"gamma^2 = {gamma**2:.4g} lies in the left essential spectrum")
    return quad


def evans_eval(delta: float, gamma: complex, env: EvansEnv, beta: complex = 1.0) -> EvansSample:
    """``E(delta, gamma)`` and the solved core ``w`` (scaled by ``beta``)."""
    if abs(delta - env.s.delta) > 0:
        raise ValueError(f"environment is built for delta = {env.s.delta}, not {delta}")
    gamma = complex(gamma)
    quad = check_omega(gamma, env)
    nu2 = quad.nu2
    g = env.grid
    rhs_h = beta * env.far_field_residual(gamma, nu2)
    if gamma == 0:
        rhs_h = rhs_h.real
    sol = env.factor(gamma).solve(-np.append(rhs_h, 0.0))
    w, kappa = sol[:-1], sol[-1]
    lam = gamma**2
    resid_vec = env.L @ w - lam * w
    full = resid_vec + rhs_h
    residual = float(np.max(np.abs(full - kappa * env.multiplier_column)))
    scale = max(1.0, float(np.max(np.abs(rhs_h))))
    if not np.isfinite(residual) or residual > 1e-6 * scale:
        raise LSFailure(f"bordered Evans solve residual {residual:.3e}")
    pre = FieldSample.from_interior(g, helmholtz_solve(full, g, delta))
    E = complex(inner(pre.values, env.cokernel.phi.values, g))
    core = FieldSample.from_interior(g, w)
    return EvansSample(delta, gamma, nu2, E, core, residual / scale, complex(kappa))


def default_gamma_grid(radius: float = 0.2, n_radii: int = 5, angles=(-np.pi / 3, 0.0, np.pi / 3)):
    """Polar grid in the right half ``gamma``-disk, plus the origin (16 points by default)."""
    pts = [0j]
    for rad in np.linspace(radius / n_radii, radius, n_radii):
        pts.extend(rad * np.exp(1j * a) for a in angles)
    return np.array(pts)


@dataclass
class ScanReport:
    delta: float
    samples: list
    threshold: float
    reference: float  # |E(0,0)| used to scale the threshold

    @property
    def moduli(self) -> np.ndarray:
        return np.array([abs(s.E) for s in self.samples])

    @property
    def min_modulus(self) -> float:
        return float(self.moduli.min()) if self.samples else float("inf")

    @property
    def flagged(self) -> list:
        return [s for s in self.samples if abs(s.E) < self.threshold * self.reference]

    @property
    def ok(self) -> bool:
        return not self.flagged

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["re_gamma", "im_gamma", "re_E", "im_E", "abs_E", "flagged"])
            cut = self.threshold * self.reference
            for s in self.samples:
                wr.writerow([
                    f"{s.gamma.real:.17g}", f"{s.gamma.imag:.17g}",
                    f"{s.E.real:.17g}", f"{s.E.imag:.17g}", f"{abs(s.E):.17g}",
                    int(abs(s.E) < cut),
                ])


def reference_value(env: EvansEnv) -> float:
    """``|E(0, 0)|`` on the same grid, the scale for all zero tests."""
    if env.s.delta == 0 and env.control == 0:
        ref_env = env
    else:
        ref_env = EvansEnv(env.kpp_front, env.kpp_front, env.eta)
    return abs(evans_eval(0.0, 0.0, ref_env).E)


def scan_small_eigenvalues(delta: float, gamma_grid, env: EvansEnv,
                           threshold: float = DEFAULT_THRESHOLD, reference: float | None = None):
    ref = reference_value(env) if reference is None else reference
    samples = [evans_eval(delta, g, env) for g in np.asarray(gamma_grid, dtype=complex)]
    return ScanReport(delta, samples, threshold, ref)


@dataclass
class ResonanceCertificate:
    delta: float
    ok: bool
    E: complex
    reference: float
    threshold: float


def no_resonance_certificate(delta: float, env: EvansEnv, threshold: float = DEFAULT_THRESHOLD,
                             reference: float | None = None) -> ResonanceCertificate:
    """True iff ``|E(delta, 0)|`` clears ``threshold * |E(0, 0)|``."""
    ref = reference_value(env) if reference is None else reference
    E = evans_eval(delta, 0.0, env).E
    return ResonanceCertificate(delta, abs(E) > threshold * ref, E, ref, threshold)


def control_crossing(env: EvansEnv, bracket=(0.0, 4.0), tol: float = 1e-8, max_iter: int = 200):
    """Smallest bump amplitude ``s`` in ``bracket`` where ``E(delta, 0; s)`` changes sign.

    The bracket is first sampled on a coarse grid to find the first sign change,
    then refined by bisection.
    """
    def e_at(s):
        return evans_eval(env.s.delta, 0.0, env.with_control(s)).E.real

    grid = np.linspace(bracket[0], bracket[1], 41)
    vals = [e_at(s) for s in grid]
    idx = next((i for i in range(len(grid) - 1) if np.sign(vals[i]) != np.sign(vals[i + 1])), None)
    if idx is None:
        raise LSFailure("no sign change of E(delta, 0; s) in the control bracket")
    lo, hi, flo = grid[idx], grid[idx + 1], vals[idx]
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = e_at(mid)
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)
