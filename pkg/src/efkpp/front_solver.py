"""Critical fronts by Newton iteration on the far-field/core system.

A front is written as

    q(x) = chi_minus(x) + v(x) / omega_*(x) + chi_plus(x) (mu + x) exp(-eta_* x)

with an explicit far field and a weighted core ``v`` that lives on the grid.
The unknowns are the interior values of ``v`` and the shift ``mu``.  Because a
truncated grid cannot see the decay of ``v`` at infinity, one extra equation,
``v'(x_max) = 0`` (one-sided), closes the system; the full-line problem has
index zero only once ``mu`` is counted, and this row plays the role of the
missing decay condition.

Everything that multiplies ``exp(-eta_* x)`` is differentiated in closed form
with the exponential cancelled against the weight, so no large numbers appear.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline

from .dispersion import SpreadingData, spreading
from .errors import InconsistentParameters, JacobianSingular, NoConvergence
from .operators import (
    FieldSample,
    Grid,
    assemble,
    check_resolution,
    helmholtz_solve,
    right_slope_row,
    variable_operator,
)
from .reaction import ReactionTerm, validate
from .weights import Bridge, coefficients, conjugation_coefficients, critical

MAX_ITER = 25
MAX_HALVINGS = 6
TOL_F = 1e-10


class CutoffPair:
    """``chi_plus`` rises from 0 on (-inf, 2] to 1 on [3, inf); ``chi_minus(x) = chi_plus(-x)``."""

    def __init__(self, a: float = 2.0, b: float = 3.0):
        self._bridge = Bridge(a, b, 4)
        self.a, self.b = a, b

    def chi_plus(self, x, k: int = 0):
        return self._bridge(x, k)

    def chi_minus(self, x, k: int = 0):
        return (-1) ** k * self._bridge(-np.asarray(x, dtype=float), k)


def _poly_exp_derivs(x, intercept, slope, rate, kmax=4):
    """``e^{rate x} d^k/dx^k [(intercept + slope x) e^{-rate x}]`` for k = 0..kmax."""
    p = intercept + slope * x
    m = -rate
    return [m**k * p + (k * m ** (k - 1) * slope if k else 0.0) for k in range(kmax + 1)]


def cutoff_exp_action(x, cut: CutoffPair, rate, intercept, slope, delta, speed, potential):
    """``e^{rate x} (-d^2 D^4 + D^2 + c D + potential)[chi_plus (a + b x) e^{-rate x}]``.

    ``rate`` may be complex; the exponential is cancelled analytically.
    """
    x = np.asarray(x, dtype=float)
    e = _poly_exp_derivs(x, intercept, slope, rate)
    chi = [cut.chi_plus(x, j) for j in range(5)]

    def d(k):
        return sum(comb(k, j) * chi[j] * e[k - j] for j in range(k + 1))

    out = d(2) + speed * d(1) + potential * d(0)
    if delta:
        out = out - delta**2 * d(4)
    return out


def far_field_action(x, cut: CutoffPair, intercept, slope, s: SpreadingData, potential):
    """``omega_* (-d^2 D^4 + D^2 + c D + potential)[chi_plus (a + b x) e^{-eta_* x}]``.

    Valid wherever ``omega_* = e^{eta_* x}``, which includes the support of ``chi_plus``.
    """
    return cutoff_exp_action(
        x, cut, s.eta_star, intercept, slope, s.delta, s.c_star, potential
    )


def far_field_derivs(x, cut: CutoffPair, intercept, slope, s: SpreadingData, kmax=1):
    """Derivatives of ``chi_plus (a + b x) e^{-eta_* x}`` (not rescaled)."""
    x = np.asarray(x, dtype=float)
    e = _poly_exp_derivs(x, intercept, slope, s.eta_star, kmax)
    decay = np.exp(-s.eta_star * x)
    chi = [cut.chi_plus(x, j) for j in range(kmax + 1)]
    return [
        decay * sum(comb(k, j) * chi[j] * e[k - j] for j in range(k + 1))
        for k in range(kmax + 1)
    ]


@dataclass
class FrontEnv:
    """Everything about the far-field/core system that does not depend on ``(v, mu)``."""

    s: SpreadingData
    r: ReactionTerm
    grid: Grid
    cut: CutoffPair = field(default_factory=CutoffPair)

    def __post_init__(self):
        check_resolution(self.grid)
        x = self.grid.xi
        w = critical(self.s)
        self.log_w = w.log(x)
        self.inv_w = np.exp(-self.log_w)
        cc = conjugation_coefficients(self.s, x)
        self.cc = cc
        self.S = variable_operator(
            self.grid, self.s.delta, cc["a3"], cc["a2"], cc["a1"], self.r.fp0 + cc["a0_shift"]
        )
        chi_m = [self.cut.chi_minus(x, k) for k in range(5)]
        # omega_* (D + f'(0)) chi_minus; the weight is 1 on the support of chi_minus'
        self.A_chi_minus = (
            chi_m[2] + self.s.c_star * chi_m[1] + self.r.fp0 * chi_m[0]
            - self.s.delta**2 * chi_m[4]
        )
        self.chi_m = chi_m[0]
        self.chi_p = self.cut.chi_plus(x)
        self.decay = np.exp(-self.s.eta_star * x)

    def base_state(self, mu: float) -> np.ndarray:
        """``chi_minus + chi_plus psi`` on interior nodes."""
        x = self.grid.xi
        return self.chi_m + self.chi_p * (mu + x) * self.decay

    def weighted_far_field(self, mu: float) -> np.ndarray:
        """``S[(mu + x) chi_plus]`` evaluated analytically."""
        return far_field_action(self.grid.xi, self.cut, mu, 1.0, self.s, self.r.fp0)

    def profile(self, v: np.ndarray, mu: float) -> np.ndarray:
        return self.base_state(mu) + self.inv_w * v

    def pieces(self, v: np.ndarray, mu: float) -> dict[str, np.ndarray]:
        """Summands of ``F(v; mu, delta) = omega_* T(q)`` on interior nodes."""
        r = self.r
        base = self.base_state(mu)
        w_inv_v = self.inv_w * v
        omega = np.exp(self.log_w)
        return {
            "S_v": self.S @ v,
            "A_chi_minus": self.A_chi_minus,
            "S_far_field": self.weighted_far_field(mu),
            "Q_v": (r.df(base) - r.fp0) * v,
            "R": omega * r.N(base),
            "N": nonlinear_part(w_inv_v, base, omega, r),
        }

    def residual_F(self, v, mu) -> np.ndarray:
        return sum(self.pieces(v, mu).values())

    def residual_G(self, v, mu) -> np.ndarray:
        return helmholtz_solve(self.residual_F(v, mu), self.grid, self.s.delta)

    def decay_row(self) -> sp.csr_matrix:
        return right_slope_row(self.grid)

    def jacobian_v(self, v, mu) -> sp.csr_matrix:
        q = self.profile(v, mu)
        return (self.S + sp.diags(self.r.df(q) - self.r.fp0)).tocsr()

    def jacobian_mu(self, v, mu) -> np.ndarray:
        """``L chi_plus`` for the current profile: derivative of ``F`` in ``mu``."""
        q = self.profile(v, mu)
        return far_field_action(self.grid.xi, self.cut, 1.0, 0.0, self.s, self.r.df(q))

    def bordered_jacobian(self, v, mu) -> sp.csc_matrix:
        col = sp.csr_matrix(self.jacobian_mu(v, mu)[:, None])
        return sp.bmat([[self.jacobian_v(v, mu), col], [self.decay_row(), None]], format="csc")


def nonlinear_part(w_inv_v, base, omega, r: ReactionTerm):
    """``omega [f(base + w) - f(base) - f'(base) w]`` with ``w = v / omega``."""
    return omega * (r.f(base + w_inv_v) - r.f(base) - r.df(base) * w_inv_v)


@dataclass
class FrontSolution:
    delta: float
    mu: float
    core: FieldSample  # v = omega_* w, tagged weighted with rate eta_*
    spreading: SpreadingData
    grid: Grid
    reaction: ReactionTerm
    iterations: int = 0
    history: tuple = ()

    def __post_init__(self):
        self.env = FrontEnv(self.spreading, self.reaction, self.grid)
        self._spline = CubicSpline(self.grid.x, self.core.values, bc_type="natural")

    @property
    def v(self) -> np.ndarray:
        return self.core.values

    def _core(self, x, k=0):
        x = np.asarray(x, dtype=float)
        out = self._spline(x, k)
        out[(x < self.grid.x_min) | (x > self.grid.x_max)] = 0.0
        return out

    def q(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = critical(self.spreading)
        cut = self.env.cut
        ff = far_field_derivs(x, cut, self.mu, 1.0, self.spreading, 0)[0]
        return cut.chi_minus(x) + self._core(x) * np.exp(-w.log(x)) + ff

    def dq(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = critical(self.spreading)
        cut = self.env.cut
        ff = far_field_derivs(x, cut, self.mu, 1.0, self.spreading, 1)[1]
        g1 = w.log_derivs(x)[0]
        core = (self._core(x, 1) - g1 * self._core(x)) * np.exp(-w.log(x))
        return cut.chi_minus(x, 1) + core + ff

    def profile(self) -> np.ndarray:
        """``q_*`` on the grid nodes."""
        return self.q(self.grid.x)

    def residual_F(self) -> np.ndarray:
        return self.env.residual_F(self.core.interior, self.mu)

    def ode_residual(self) -> float:
        """Sup norm of the discrete traveling-wave residual ``T(q_*)`` on interior nodes."""
        return float(np.max(np.abs(self.env.inv_w * self.residual_F())))

    def core_decay_rate(self, window=(0.5, 0.9)) -> float:
        """Fitted slope of ``log|v|`` over a right portion of the grid."""
        g = self.grid
        lo = g.x_min + window[0] * (g.x_max - g.x_min)
        hi = g.x_min + window[1] * (g.x_max - g.x_min)
        sel = (g.x >= lo) & (g.x <= hi) & (np.abs(self.v) > 1e-300)
        return float(np.polyfit(g.x[sel], np.log(np.abs(self.v[sel])), 1)[0])

    def header(self) -> dict:
        q = self.profile()
        return {
            "delta": self.delta,
            "mu": self.mu,
            "eta_star": self.spreading.eta_star,
            "c_star": self.spreading.c_star,
            "reaction": self.reaction.name,
            "grid": self.grid.to_dict(),
            "ode_residual": self.ode_residual(),
            "left_defect": float(abs(q[0] - 1.0)),
            "right_value": float(abs(q[-1])),
            "iterations": self.iterations,
        }

    def to_csv(self, path):
        x = self.grid.x
        q, dq = self.profile(), self.dq(x)
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
            wr = csv.writer(fh)
            wr.writerow(["x", "q", "dq", "v"])
            for row in zip(x, q, dq, self.v):
                wr.writerow([f"{val:.17g}" for val in row])


def _newton(env: FrontEnv, v: np.ndarray, mu: float, max_iter=MAX_ITER, tol=TOL_F):
    """Damped Newton on the bordered system; returns ``(v, mu, iterations, history)``."""
    F = env.residual_F(v, mu)
    norm = float(np.max(np.abs(F)))
    history = [norm]
    m = v.size
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return v, mu, it - 1, tuple(history)
        J = env.bordered_jacobian(v, mu)
        try:
            step = spla.splu(J).solve(-np.append(F, 0.0))
        except RuntimeError as exc:
            raise JacobianSingular(f"bordered Jacobian is singular: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise JacobianSingular("bordered Jacobian produced a non-finite step")
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            v_new, mu_new = v + t * step[:m], mu + t * step[m]
            F_new = env.residual_F(v_new, mu_new)
            new_norm = float(np.max(np.abs(F_new)))
            if np.isfinite(new_norm) and new_norm < norm:
                break
            t *= 0.5
        else:
            # no decrease; accept the full step only if we are at round-off
            if norm <= 1e3 * tol:
                return v, mu, it - 1, tuple(history)
            raise NoConvergence("Newton step failed to reduce the residual", history)
        v, mu, F, norm = v_new, mu_new, F_new, new_norm
        history.append(norm)
        if np.max(np.abs(t * step)) < 1e-14 * max(1.0, np.max(np.abs(v))):
            break
    if norm > tol:
        raise NoConvergence(f"no convergence after {max_iter} iterations", history)
    return v, mu, max_iter, tuple(history)


def _initial_core(env: FrontEnv, mu: float) -> np.ndarray:
    """Core that turns the ansatz into a smooth monotone profile with the right tail."""
    x = env.grid.xi
    eta = env.s.eta_star
    guess = 1.0 / (1.0 + (mu + np.abs(x) + 1.0) * np.exp(eta * x))
    return (guess - env.base_state(mu)) * np.exp(env.log_w)


def _solve(env: FrontEnv, v0, mu0) -> FrontSolution:
    v, mu, its, hist = _newton(env, v0, mu0)
    core = FieldSample.from_interior(env.grid, v, representation="weighted", eta=env.s.eta_star)
    return FrontSolution(env.s.delta, float(mu), core, env.s, env.grid, env.r, its, hist)


def _blend(r: ReactionTerm, s: float) -> ReactionTerm:
    """``(1 - s) f'(0) u (1 - u) + s f``: same ``f'(0)`` and KPP for every ``s`` in [0, 1]."""
    a = (1.0 - s) * r.fp0
    return ReactionTerm(
        f=lambda u: a * u * (1.0 - u) + s * r.f(u),
        df=lambda u: a * (1.0 - 2.0 * u) + s * r.df(u),
        d2f=lambda u: -2.0 * a + s * r.d2f(u),
        fp0=r.fp0,
        fp1=-a + s * r.fp1,
        name=r.name,
    )


def _reaction_homotopy(r: ReactionTerm, g: Grid, min_step: float = 1.0 / 64) -> FrontSolution:
    """Deform the front of the logistic-shaped term into the front of ``r``."""
    blend = _blend(r, 0.0)
    sol = _solve(FrontEnv(spreading(0.0, blend), blend, g), np.zeros(g.n - 2), 1.0)
    s, ds = 0.0, 0.25
    while s < 1.0:
        t = min(1.0, s + ds)
        blend = _blend(r, t)
        try:
            sol = _solve(FrontEnv(spreading(0.0, blend), blend, g), sol.core.interior.copy(), sol.mu)
        except NoConvergence:
            ds /= 2
            if ds < min_step:
                raise
            continue
        s, ds = t, min(2 * ds, 0.5)
    return sol


def solve_kpp_front(r: ReactionTerm, g: Grid | None = None) -> FrontSolution:
    """The ``delta = 0`` critical front, from the same far-field/core system.

    Newton starts from ``v = 0, mu = 1``; if that stalls, it restarts from a
    core that reproduces a monotone profile with the correct tail, and
    finally follows a homotopy from the logistic term with the same ``f'(0)``.
    """
    problems = validate(r)
    if problems:
        raise InconsistentParameters("; ".join(problems))
    g = g or Grid()
    env = FrontEnv(spreading(0.0, r), r, g)
    for guess in (np.zeros(g.n - 2), _initial_core(env, 1.0)):
        try:
            return _solve(env, guess, 1.0)
        except NoConvergence:
            pass
    sol = _reaction_homotopy(r, g)
    return _solve(env, sol.core.interior.copy(), sol.mu)


def newton_continue(start: FrontSolution, delta_target: float, steps: int = 5) -> FrontSolution:
    """Follow the front from ``start.delta`` to ``delta_target`` in equal steps."""
    if steps < 1:
        raise ValueError("steps must be positive")
    sol = start
    for d in np.linspace(start.delta, delta_target, steps + 1)[1:]:
        s = spreading(float(d), start.reaction)
        env = FrontEnv(s, start.reaction, start.grid)
        if d == sol.delta:
            F = env.residual_F(sol.core.interior, sol.mu)
            if np.max(np.abs(F)) <= TOL_F:
                continue
        sol = _solve(env, sol.core.interior.copy(), sol.mu)
    return sol


def front(r: ReactionTerm, delta: float, g: Grid | None = None, steps: int | None = None):
    """Convenience: KPP front continued to ``delta`` (about 0.02 per step)."""
    q0 = solve_kpp_front(r, g)
    if delta == 0:
        return q0
    steps = steps or max(1, int(np.ceil(abs(delta) / 0.02)))
    return newton_continue(q0, delta, steps)


def front_coefficients(sol: FrontSolution):
    return coefficients(sol.spreading, sol, sol.reaction)


def linearization(sol: FrontSolution, g: Grid | None = None, extra_potential=None):
    """Discrete weighted linearisation ``L(delta)`` about ``sol`` on ``g``."""
    g = g or sol.grid
    return assemble("L", sol.spreading, front_coefficients(sol), g, extra_potential)


def load_front(path, r: ReactionTerm) -> FrontSolution:
    """Rebuild a :class:`FrontSolution` from a file written by ``to_csv``."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing JSON header line")
        head = json.loads(first[2:])
        rows = list(csv.DictReader(fh))
    if head.get("reaction") != r.name:
        raise ValueError(f"{path}: front computed for {head.get('reaction')!r}, not {r.name!r}")
    g = Grid(**head["grid"])
    v = np.array([float(row["v"]) for row in rows])
    s = spreading(float(head["delta"]), r)
    core = FieldSample(g, v, representation="weighted", eta=s.eta_star)
    return FrontSolution(s.delta, float(head["mu"]), core, s, g, r, int(head.get("iterations", 0)))
