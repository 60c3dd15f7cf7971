"""Time integration of ``u_t = -d^2 u_xxxx + u_xx + c u_x + f(u)``.

Crank-Nicolson for the linear part, including the linearised reaction
``p(x) u`` (``p = f'(0)`` in the lab frame, ``p = f'(q)`` about a front), with
a cached banded LU; two-step Adams-Bashforth for the remaining nonlinear part
(the very first step is forward Euler).  Keeping ``p u`` implicit matters for
pulled fronts: their speed is set by linear growth at the leading edge.
Boundary data enter through ghost nodes: at a ``clamped`` end the ghost is
the even reflection (``u' = u''' = 0``), at a ``hinged`` end it is the odd
reflection about the boundary value (``u'' = 0``).

Two set-ups are provided: the lab frame with step-like data, used to track
the front position, and the comoving perturbation problem
``v_t = L v + f(q + v) - f(q)`` about a computed front ``q``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import curve_fit
from scipy.special import erfc

from .errors import DomainExhausted, NumericalBlowup
from .operators import STENCILS, Grid, h1_norm
from .reaction import ReactionTerm
from .weights import algebraic, critical

BLOWUP = 2.0


@dataclass(frozen=True)
class Boundary:
    left: float = 1.0
    right: float = 0.0
    left_kind: str = "clamped"  # or "hinged"
    right_kind: str = "hinged"


LAB = Boundary()
PERTURBATION = Boundary(0.0, 0.0, "hinged", "hinged")


@dataclass
class SimState:
    grid: Grid
    u: np.ndarray  # all nodes, boundary values included
    t: float = 0.0
    frame_speed: float = 0.0
    boundary: Boundary = LAB
    background: np.ndarray | None = field(default=None, repr=False)  # q on nodes
    prev_reaction: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.grid.n,):
            raise ValueError("u must have one value per node")


def _fold(n, h, offsets, weights, power, bc: Boundary):
    """Interior matrix plus the constant vector contributed by the boundary data."""
    m, last = n - 2, n - 1
    rows, cols, vals = [], [], []
    const = np.zeros(m)

    def put(i, k, w, b_sign=1.0):
        rows.append(i)
        cols.append(k - 1)
        vals.append(w * b_sign)

    for i in range(m):
        j = i + 1
        for o, w in zip(offsets, weights):
            if w == 0:
                continue
            k = j + o
            if 0 < k < last:
                put(i, k, w)
                continue
            if k <= 0:
                b, kind, mirror = bc.left, bc.left_kind, -k
            else:
                b, kind, mirror = bc.right, bc.right_kind, 2 * last - k
            if k in (0, last):
                const[i] += w * b
            elif kind == "clamped":
                put(i, mirror, w)
            else:
                const[i] += 2 * w * b
                put(i, mirror, w, -1.0)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    M.sum_duplicates()
    return M / h**power, const / h**power


@lru_cache(maxsize=16)
def _linear_part(grid: Grid, delta: float, speed: float, bc: Boundary):
    D1, c1 = _fold(grid.n, grid.h, *STENCILS[grid.order][0], bc)
    D2, c2 = _fold(grid.n, grid.h, *STENCILS[grid.order][1], bc)
    M, c = D2 + speed * D1, c2 + speed * c1
    if delta:
        D4, c4 = _fold(grid.n, grid.h, *STENCILS[grid.order][3], bc)
        M, c = M - delta**2 * D4, c - delta**2 * c4
    return M.tocsr(), c


_FACTORS: dict = {}


def _cn_factor(grid: Grid, delta: float, speed: float, bc: Boundary, dt: float, potential):
    key = (grid, delta, speed, bc, dt, hash(potential.tobytes()))
    if key not in _FACTORS:
        if len(_FACTORS) > 16:
            _FACTORS.clear()
        M, c = _linear_part(grid, delta, speed, bc)
        M = M + sp.diags(potential)
        I = sp.identity(M.shape[0], format="csr")
        lu = spla.splu((I - 0.5 * dt * M).tocsc())
        _FACTORS[key] = (lu, (I + 0.5 * dt * M).tocsr(), dt * c)
    return _FACTORS[key]


def max_stable_dt(r: ReactionTerm, background=None) -> float:
    """``0.5 / sup |f'|`` over [0, 1] (or over the background values)."""
    u = np.linspace(0.0, 1.0, 201) if background is None else background
    return 0.5 / float(np.max(np.abs(r.df(u))))


def _potential(state: SimState, r: ReactionTerm) -> np.ndarray:
    if state.background is None:
        return np.full(state.grid.n - 2, r.fp0)
    return r.df(state.background[1:-1])


def _reaction(state: SimState, r: ReactionTerm, potential) -> np.ndarray:
    """Reaction minus its implicit linear part ``potential * u``."""
    u = state.u[1:-1]
    if state.background is None:
        return r.f(u) - potential * u
    q = state.background[1:-1]
    return r.f(q + u) - r.f(q) - potential * u


def step(state: SimState, dt: float, delta: float, r: ReactionTerm) -> SimState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    pot = _potential(state, r)
    lu, rhs_mat, const = _cn_factor(
        state.grid, float(delta), float(state.frame_speed), state.boundary, float(dt), pot
    )
    N = _reaction(state, r, pot)
    explicit = N if state.prev_reaction is None else 1.5 * N - 0.5 * state.prev_reaction
    interior = lu.solve(rhs_mat @ state.u[1:-1] + const + dt * explicit)
    u = np.empty_like(state.u)
    u[1:-1] = interior
    u[0], u[-1] = state.boundary.left, state.boundary.right
    if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP:
        raise NumericalBlowup(f"max|u| = {np.max(np.abs(u)):.3g} at t = {state.t + dt:.4g}")
    return replace(state, u=u, t=state.t + dt, prev_reaction=N)


def simulate(state: SimState, dt: float, t_end: float, delta: float, r: ReactionTerm,
             every: int = 1, callback=None):
    """Advance to ``t_end``; ``callback(state)`` is invoked every ``every`` steps."""
    n_steps = int(round((t_end - state.t) / dt))
    for k in range(1, n_steps + 1):
        state = step(state, dt, delta, r)
        if callback is not None and k % every == 0:
            callback(state)
    return state


# --- lab frame: front position -----------------------------------------------

def steep_data(x, width: float = 0.5, center: float = 0.0):
    """Smoothed indicator of ``x < center`` with Gaussian tails."""
    return 0.5 * erfc((np.asarray(x) - center) / width)


def level_set(x: np.ndarray, u: np.ndarray, level: float = 0.5) -> float:
    """Largest ``x`` with ``u >= level``, linearly interpolated."""
    above = np.flatnonzero(u >= level)
    if above.size == 0:
        return float(x[0])
    i = above[-1]
    if i == x.size - 1:
        return float(x[-1])
    u0, u1 = u[i], u[i + 1]
    return float(x[i] + (x[i + 1] - x[i]) * (u0 - level) / (u0 - u1))


def bramson_position(t, c, a, b, d=0.0):
    t = np.asarray(t, dtype=float)
    return c * t + a * np.log(t) + b + d / np.sqrt(t)


@dataclass
class FrontTrack:
    times: np.ndarray
    positions: np.ndarray
    window: tuple
    fitted: tuple = ()  # (c_fit, log_coeff_fit, x_inf_fit)
    covariance: np.ndarray | None = None
    fitted_with_correction: tuple = ()  # (c, a, b, d) with a free d t^{-1/2} term

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "c_fit": self.fitted[0],
            "log_coeff_fit": self.fitted[1],
            "x_inf_fit": self.fitted[2],
            "stderr": [float(v) for v in np.sqrt(np.diag(self.covariance))],
            "fit_with_sqrt_correction": list(self.fitted_with_correction),
            "n_samples": int(np.sum((self.times >= self.window[0]) & (self.times <= self.window[1]))),
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def _lstsq(A, y):
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    dof = max(1, y.size - A.shape[1])
    cov = np.linalg.pinv(A.T @ A) * float(res @ res) / dof
    return coef, cov


def track_front(times, positions, window=(10.0, 150.0), min_samples: int = 50) -> FrontTrack:
    """Least-squares fit of ``X(t) = c t + a log t + b`` on ``window``.

    A second fit with an extra ``d t^{-1/2}`` term is kept as a diagnostic;
    at desk-scale times it is poorly conditioned and not used for verdicts.
    """
    t = np.asarray(times, dtype=float)
    X = np.asarray(positions, dtype=float)
    sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < min_samples:
        raise ValueError(f"need at least {min_samples} samples in the fit window, got {sel.sum()}")
    ts, Xs = t[sel], X[sel]
    A3 = np.column_stack([ts, np.log(ts), np.ones_like(ts)])
    c3, cov = _lstsq(A3, Xs)
    c4, _ = _lstsq(np.column_stack([A3, 1.0 / np.sqrt(ts)]), Xs)
    return FrontTrack(t, X, tuple(window), tuple(map(float, c3)), cov, tuple(map(float, c4)))


def run_front_selection(delta: float, r: ReactionTerm, grid: Grid | None = None, dt: float = 0.05,
                        t_end: float = 150.0, window=(10.0, 150.0), u0=None, every: int = 2,
                        snapshots=None, snapshot_every: int = 0):
    """Lab-frame run from steep data; returns the fitted :class:`FrontTrack`."""
    grid = grid or Grid(-50.0, 400.0, 9001)
    x = grid.x
    u = steep_data(x) if u0 is None else np.asarray(u0, dtype=float)
    u = u.copy()
    u[0], u[-1] = LAB.left, LAB.right
    state = SimState(grid, u, boundary=LAB)
    times, pos = [], []
    margin = 20.0
    counter = [0]

    def record(st):
        X = level_set(x, st.u)
        if X > grid.x_max - margin:
            raise DomainExhausted(f"front at {X:.2f} reached the right end at t = {st.t:.2f}")
        times.append(st.t)
        pos.append(X)
        counter[0] += 1
        if snapshots is not None and snapshot_every and counter[0] % snapshot_every == 0:
            snapshots.append((st.t, st.u.copy()))

    simulate(state, dt, t_end, delta, r, every=every, callback=record)
    return track_front(times, pos, window)


def write_snapshots(path, grid: Grid, snapshots, stride: int = 1):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "x", "u"])
        for t, u in snapshots:
            for xi, ui in zip(grid.x[::stride], u[::stride]):
                wr.writerow([f"{t:.17g}", f"{xi:.17g}", f"{ui:.17g}"])


# --- comoving frame: perturbation decay ---------------------------------------

@dataclass
class DecayTrack:
    times: np.ndarray
    weighted_norms: np.ndarray
    fitted_exponent: float  # p in A (t + t0)^{-p}
    window: tuple
    plain_exponent: float = float("nan")  # slope of log N against log t
    time_shift: float = 0.0  # fitted t0
    correlation: float | None = None
    fitted_amplitude: float | None = None
    final_profile: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "fitted_exponent": self.fitted_exponent,
            "plain_exponent": self.plain_exponent,
            "time_shift": self.time_shift,
            "correlation": self.correlation,
            "fitted_amplitude": self.fitted_amplitude,
            "final_time": float(self.times[-1]) if len(self.times) else 0.0,
            "final_norm": float(self.weighted_norms[-1]) if len(self.weighted_norms) else 0.0,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def comoving_grid(front, x_max: float = 120.0) -> Grid:
    g = front.grid
    n = int(round((x_max - g.x_min) / g.h)) + 1
    return Grid(g.x_min, g.x_min + (n - 1) * g.h, n, g.order)


def perturbation_weight(front, x, r_weight: float) -> np.ndarray:
    """``omega_* rho_{-r}`` on the nodes ``x``."""
    return np.exp(critical(front.spreading).log(x) + algebraic(-r_weight).log(x))


def bump(x, amplitude: float = 1e-2, center: float = 0.0, width: float = 1.0):
    """Smooth compactly supported bump ``amplitude * exp(-1/(1 - s^2))`` scaled to peak 1."""
    s = (np.asarray(x, dtype=float) - center) / width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return amplitude * out


def measure_decay(front, v0, r_weight: float = 3.0, t_end: float = 100.0, dt: float = 0.05,
                  grid: Grid | None = None, window=None, every: int = 10) -> DecayTrack:
    """Evolve ``v_t = L v + f(q+v) - f(q)`` in the comoving frame and fit the decay of
    ``||omega_* rho_{-r} v||_{H^1}`` on ``[t_end/4, t_end]``."""
    if r_weight <= 1.5:
        raise ValueError("the algebraic weight exponent must exceed 3/2")
    grid = grid or comoving_grid(front)
    x = grid.x
    r = front.reaction
    s = front.spreading
    q = front.q(x)
    v = np.asarray(v0(x) if callable(v0) else v0, dtype=float).copy()
    v[0] = v[-1] = 0.0
    weight = perturbation_weight(front, x, r_weight)
    state = SimState(grid, v, frame_speed=s.c_star, boundary=PERTURBATION, background=q)
    window = window or (t_end / 4.0, t_end)
    times, norms = [0.0], [h1_norm(weight * v, grid)]

    def record(st):
        times.append(st.t)
        norms.append(h1_norm(weight * st.u, grid))

    state = simulate(state, dt, t_end, s.delta, r, every=every, callback=record)
    times, norms = np.array(times), np.array(norms)
    exponent, shift, plain = fit_decay(times, norms, window)
    corr = amp = None
    if np.any(state.u):
        dq = front.dq(x)
        a, b = weight * state.u, weight * dq
        corr = float(abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b)))
        amp = float((a @ b) / (b @ b) * state.t**1.5)
    return DecayTrack(times, norms, exponent, tuple(window), plain, shift, corr, amp, state.u.copy())


def fit_decay(times, norms, window):
    """Exponent of ``A (t + t0)^{-p}`` fitted to ``norms`` on ``window``.

    The shift ``t0`` absorbs the ``O(1/t)`` relative correction of a diffusive
    tail, ``t^{-p}(1 - p t0 / t)``, which otherwise biases a plain log-log
    slope upward at moderate times.  Returns ``(p, t0, plain_slope)``.
    """
    t = np.asarray(times, dtype=float)
    N = np.asarray(norms, dtype=float)
    sel = (t >= window[0]) & (t <= window[1]) & (N > 0)
    if sel.sum() < 4:
        return float("nan"), 0.0, float("nan")
    ts, logn = t[sel], np.log(N[sel])
    plain = -float(np.polyfit(np.log(ts), logn, 1)[0])
    lo = -0.9 * ts.min()

    def model(tt, log_a, p, t0):
        return log_a - p * np.log(tt + t0)

    try:
        popt, _ = curve_fit(model, ts, logn, p0=[logn[0] + plain * np.log(ts[0]), plain, 0.0],
                            bounds=([-np.inf, 0.0, lo], [np.inf, 10.0, 10 * ts.max()]))
    except RuntimeError:
        return plain, 0.0, plain
    return float(popt[1]), float(popt[2]), plain
