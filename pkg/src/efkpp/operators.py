"""Discretisation of the line and the linear operators built on it.

All differential operators are second-order centred finite differences acting
on the interior nodes of a uniform grid.  The boundary closure for core
variables is homogeneous Dirichlet with odd reflection into the ghost nodes,
i.e. ``u = u'' = 0`` at both ends; the far field is carried analytically and
never lives on the grid.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dispersion import SpreadingData
from .errors import (
    DegenerateCokernel,
    GridError,
    PreconditionerSingular,
    ResolutionError,
)
from .weights import CoefficientSet, critical, one_sided

MAX_H = 0.25


@dataclass(frozen=True)
class Grid:
    x_min: float = -40.0
    x_max: float = 60.0
    n: int = 2001
    order: int = 2

    def __post_init__(self):
        if self.order not in (2, 4):
            raise GridError(f"finite-difference order must be 2 or 4, got {self.order}")
        if self.n < 16:
            raise GridError(f"grid needs n >= 16 nodes, got {self.n}")
        if self.x_min > -1 or self.x_max < 3:
            raise GridError(
                f"grid [{self.x_min}, {self.x_max}] must contain [-1, 3]"
            )

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def xi(self) -> np.ndarray:
        """Interior nodes."""
        return self.x[1:-1]

    @cached_property
    def trapezoid(self) -> np.ndarray:
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def refine(self) -> "Grid":
        """Same interval with the spacing halved."""
        return Grid(self.x_min, self.x_max, 2 * self.n - 1, self.order)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n": self.n, "order": self.order}


@dataclass
class FieldSample:
    grid: Grid
    values: np.ndarray
    representation: str = "plain"  # or "weighted"
    eta: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values must have one entry per grid node")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite field values")
        if self.representation not in ("plain", "weighted"):
            raise ValueError(self.representation)
        if self.representation == "weighted" and self.eta is None:
            raise ValueError("weighted representation needs eta")

    @classmethod
    def from_interior(cls, grid, interior, **kw):
        v = np.zeros(grid.n, dtype=np.result_type(interior, float))
        v[1:-1] = interior
        return cls(grid, v, **kw)

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def plain(self) -> "FieldSample":
        if self.representation == "plain":
            return self
        w = one_sided(self.eta)(self.grid.x)
        return FieldSample(self.grid, self.values / w)

    def weighted(self, eta: float) -> "FieldSample":
        base = self.plain()
        w = one_sided(eta)(self.grid.x)
        return FieldSample(self.grid, base.values * w, "weighted", eta)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "re_u", "im_u"])
            for x, u in zip(self.grid.x, self.values):
                u = complex(u)
                wr.writerow([f"{x:.17g}", f"{u.real:.17g}", f"{u.imag:.17g}"])


def inner(u, v, grid: Grid) -> complex:
    """Bilinear trapezoid pairing ``int u v dx`` of full-grid samples."""
    return np.sum(grid.trapezoid * np.asarray(u) * np.asarray(v))


# --- stencils ---------------------------------------------------------------

# centred stencils: (offsets, weights, power of h)
STENCILS = {
    2: [
        ((-1, 0, 1), (-0.5, 0.0, 0.5), 1),
        ((-1, 0, 1), (1.0, -2.0, 1.0), 2),
        ((-2, -1, 0, 1, 2), (-0.5, 1.0, 0.0, -1.0, 0.5), 3),
        ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0), 4),
    ],
    4: [
        ((-2, -1, 0, 1, 2), (1 / 12, -8 / 12, 0.0, 8 / 12, -1 / 12), 1),
        ((-2, -1, 0, 1, 2), (-1 / 12, 16 / 12, -30 / 12, 16 / 12, -1 / 12), 2),
        ((-3, -2, -1, 0, 1, 2, 3), (1 / 8, -1.0, 13 / 8, 0.0, -13 / 8, 1.0, -1 / 8), 3),
        ((-3, -2, -1, 0, 1, 2, 3), (-1 / 6, 2.0, -13 / 2, 28 / 3, -13 / 2, 2.0, -1 / 6), 4),
    ],
}


def stencil_matrix(n: int, h: float, offsets, weights, power: int) -> sp.csr_matrix:
    """Stencil on interior nodes; ghost values are odd reflections through the end nodes."""
    m = n - 2
    rows, cols, vals = [], [], []
    last = n - 1
    for i in range(m):
        j = i + 1
        for o, w in zip(offsets, weights):
            if w == 0:
                continue
            k, sign = j + o, 1.0
            if k < 0:
                k, sign = -k, -1.0
            elif k > last:
                k, sign = 2 * last - k, -1.0
            if k == 0 or k == last:
                continue
            rows.append(i)
            cols.append(k - 1)
            vals.append(sign * w)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    M.sum_duplicates()
    return M / h**power


@lru_cache(maxsize=32)
def diff_matrices(n: int, h: float, order: int = 2) -> tuple[sp.csr_matrix, ...]:
    """``(D1, D2, D3, D4)`` on the ``n - 2`` interior nodes, odd-reflection closure."""
    if order not in STENCILS:
        raise ValueError(f"finite-difference order must be one of {sorted(STENCILS)}")
    return tuple(stencil_matrix(n, h, *st) for st in STENCILS[order])


def periodic_d2(n: int, h: float) -> sp.csr_matrix:
    D2 = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n)).tolil()
    D2[0, n - 1] = D2[n - 1, 0] = 1.0
    return D2.tocsr() / h**2


@dataclass
class DiscreteOperator:
    matrix: sp.csr_matrix
    grid: Grid
    kind: str
    closure: str = "dirichlet-odd-reflection"
    meta: dict = field(default_factory=dict)

    def __matmul__(self, u):
        return self.apply(u)

    def apply(self, u):
        if isinstance(u, FieldSample):
            u = u.plain()
            return FieldSample.from_interior(self.grid, self.matrix @ u.interior)
        return self.matrix @ u

    @property
    def bandwidth(self) -> int:
        coo = self.matrix.tocoo()
        return int(2 * np.max(np.abs(coo.row - coo.col)) + 1)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def to_triplets(self, path):
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"# {self.kind} {coo.shape[0]}x{coo.shape[1]} nnz={coo.nnz}\n")
            for i, j, a in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {a:.17g}\n")


def right_slope_row(g: Grid) -> sp.csr_matrix:
    """One-sided ``u'(x_max)`` for ``u(x_max) = 0``, as a row on interior unknowns."""
    m = g.n - 2
    # backward differences of matching order, u at the end node dropped
    w = [-4.0 / 2, 1.0 / 2] if g.order == 2 else [-4.0, 3.0, -4.0 / 3, 1.0 / 4]
    row = sp.lil_matrix((1, m))
    for i, wi in enumerate(w):
        row[0, m - 1 - i] = wi / g.h
    return row.tocsr()


def check_resolution(g: Grid):
    if g.h > MAX_H:
        raise ResolutionError(f"grid spacing h = {g.h:.3g} exceeds {MAX_H}")


def variable_operator(g: Grid, delta: float, a3, a2, a1, a0) -> sp.csr_matrix:
    """``-d^2 D4 + d^2 a3 D3 + (1 + d^2 a2) D2 + a1 D1 + a0`` on interior nodes."""
    D1, D2, D3, D4 = diff_matrices(g.n, g.h, g.order)
    d2 = delta**2
    diag = sp.diags
    M = diag(1.0 + d2 * a2) @ D2 + diag(a1) @ D1 + diag(a0)
    if d2:
        M = M - d2 * D4 + d2 * (diag(a3) @ D3)
    return M.tocsr()


def assemble(kind: str, s: SpreadingData, coeffs: CoefficientSet | None, g: Grid,
             extra_potential=None) -> DiscreteOperator:
    """Finite-difference matrix of ``A``, ``L``, ``S``, ``L_plus`` or ``L_minus``.

    ``extra_potential`` (array on interior nodes) is added to the zeroth-order
    coefficient; it is used for control experiments only.
    """
    check_resolution(g)
    x = g.xi
    d, c = s.delta, s.c_star
    zero = np.zeros_like(x)
    meta = {"delta": d, "speed": c}
    if kind == "A":
        pot = coeffs.potential(x)
        M = variable_operator(g, d, zero, zero, zero + c, pot)
        meta["potential"] = pot
    elif kind in ("L", "S"):
        a0 = coeffs.a0(x) if kind == "L" else coeffs.a0_tilde(x)
        M = variable_operator(g, d, coeffs.a3(x), coeffs.a2(x), coeffs.a1(x), a0)
        if kind == "L":
            meta["potential"] = coeffs.potential(x)
    elif kind == "L_plus":
        M = variable_operator(g, d, zero + 4 * s.eta_star, zero - 6 * s.eta_star**2, zero, zero)
    elif kind == "L_minus":
        M = variable_operator(g, d, zero, zero, zero + c, zero + s.fp1)
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    if extra_potential is not None:
        M = (M + sp.diags(np.asarray(extra_potential))).tocsr()
        meta["extra_potential"] = np.asarray(extra_potential)
        if "potential" in meta:
            meta["potential"] = meta["potential"] + meta["extra_potential"]
    return DiscreteOperator(M, g, kind, meta=meta)


# --- preconditioner ----------------------------------------------------------

@lru_cache(maxsize=64)
def _helmholtz_lu(n: int, h: float, delta: float, closure: str, order: int = 2):
    if closure == "periodic":
        D2 = periodic_d2(n, h)
    else:
        D2 = diff_matrices(n, h, order)[1]
    M = (sp.identity(D2.shape[0]) - delta**2 * D2).tocsc()
    try:
        return spla.splu(M)
    except RuntimeError as exc:  # pragma: no cover - signals a bug
        raise PreconditionerSingular(str(exc)) from exc


def helmholtz_solve(rhs: np.ndarray, g: Grid, delta: float, closure="dirichlet"):
    """Apply ``(1 - delta^2 D2)^{-1}`` to a vector on the closure's node set."""
    if delta == 0:
        return np.array(rhs, copy=True)
    lu = _helmholtz_lu(g.n, g.h, float(delta), closure, g.order)
    rhs = np.asarray(rhs)
    if np.iscomplexobj(rhs):
        return lu.solve(rhs.real.copy()) + 1j * lu.solve(rhs.imag.copy())
    return lu.solve(rhs)


def precondition(rhs: FieldSample, delta: float, closure: str = "dirichlet") -> FieldSample:
    """``(1 - delta^2 d^2)^{-1} rhs``.

    With ``closure="periodic"`` all ``n`` nodes are unknowns and the sample
    repeats with period ``n h``; otherwise the end values are zero.
    """
    if closure == "periodic":
        out = helmholtz_solve(rhs.plain().values, rhs.grid, delta, "periodic")
        res = FieldSample(rhs.grid, out)
    else:
        out = helmholtz_solve(rhs.plain().interior, rhs.grid, delta)
        res = FieldSample.from_interior(rhs.grid, out)
    if rhs.representation == "weighted":
        return res.weighted(rhs.eta)
    return res


def t_delta(u: FieldSample, delta: float, closure: str = "dirichlet") -> FieldSample:
    pu = precondition(u, delta, closure).plain()
    base = u.plain()
    if closure != "periodic":
        base = FieldSample.from_interior(u.grid, base.interior)
    out = FieldSample(u.grid, pu.values - base.values)
    return out.weighted(u.eta) if u.representation == "weighted" else out


def h1_norm(values: np.ndarray, g: Grid) -> float:
    """Discrete H^1 norm of a full-grid sample vanishing at the ends."""
    D1 = diff_matrices(g.n, g.h, g.order)[0]
    vi = np.asarray(values)[1:-1]
    return float(np.sqrt(g.h * (np.sum(np.abs(vi) ** 2) + np.sum(np.abs(D1 @ vi) ** 2))))


def l2_norm(values: np.ndarray, g: Grid) -> float:
    return float(np.sqrt(np.sum(g.trapezoid * np.abs(values) ** 2)))


# --- cokernel and projection -------------------------------------------------

@dataclass
class CokernelData:
    phi: FieldSample
    ip_norm: float
    riesz: np.ndarray  # omega_{0,eta}^{-2} phi on all nodes
    eta: float


def cokernel(q0, s0: SpreadingData, g: Grid, eta: float) -> CokernelData:
    """Sampled cokernel element of the weighted KPP linearisation.

    ``q0`` is the ``delta = 0`` front; it must provide ``dq(x)``.
    """
    if s0.delta != 0:
        raise ValueError("cokernel needs the delta = 0 spreading data")
    x = g.x
    scale = np.exp(s0.c_star * x - critical(s0).log(x))
    phi = scale * q0.dq(x)
    riesz = phi * np.exp(-2.0 * one_sided(eta).log(x))
    ip = float(np.real(inner(riesz, phi, g)))
    if not ip > 0:
        raise DegenerateCokernel(f"<omega^-2 phi, phi> = {ip}")
    return CokernelData(FieldSample(g, phi), ip, riesz, eta)


def project(u: FieldSample, ck: CokernelData, eta: float | None = None) -> FieldSample:
    """L^2_{0,eta}-orthogonal projection onto ``{<u, phi> = 0}``."""
    g = u.grid
    base = u.plain()
    coef = inner(base.values, ck.phi.values, g) / ck.ip_norm
    out = FieldSample(g, base.values - coef * ck.riesz)
    if u.representation == "weighted":
        return out.weighted(u.eta)
    return out
