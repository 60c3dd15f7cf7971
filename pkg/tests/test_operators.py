import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efkpp.dispersion import plus_border, spreading
from efkpp.errors import GridError, ResolutionError
from efkpp.front_solver import front_coefficients
from efkpp.reaction import logistic
from efkpp.operators import (
    FieldSample,
    Grid,
    assemble,
    cokernel,
    diff_matrices,
    h1_norm,
    inner,
    l2_norm,
    precondition,
    project,
    right_slope_row,
    t_delta,
)
from efkpp.weights import critical, default_aux_eta, one_sided

RNG_SEED = 0


def random_smooth(x, rng, n_modes=6):
    """Random sum of modulated Gaussians, numerically zero at the grid ends."""
    u = np.zeros_like(x)
    for _ in range(n_modes):
        c, w, k = rng.uniform(-10, 10), rng.uniform(0.5, 3), rng.uniform(0, 6)
        u += rng.standard_normal() * np.exp(-((x - c) / w) ** 2) * np.cos(k * x + rng.uniform(0, 6))
    return u


def test_grid_validation():
    with pytest.raises(GridError, match=r"\[-1, 3\]"):
        Grid(-40, 2, 101)
    with pytest.raises(GridError):
        Grid(order=3)
    with pytest.raises(GridError):
        Grid(n=10)
    g = Grid()
    assert g.h == pytest.approx(0.05)
    assert g.refine().h == pytest.approx(g.h / 2)
    assert g.trapezoid.sum() == pytest.approx(g.x_max - g.x_min)


@pytest.mark.parametrize("order", [2, 4])
@given(coeffs=st.lists(st.floats(-2, 2), min_size=1, max_size=6))
@settings(max_examples=25, deadline=None)
def test_stencils_exact_on_polynomials(order, coeffs):
    g = Grid(-4.0, 6.0, 101, order)
    p = np.polynomial.Polynomial(coeffs)
    D = diff_matrices(g.n, g.h, order)
    x = g.xi
    far = slice(4, -4)  # away from the reflected ghosts
    for k, Dk in enumerate(D, start=1):
        exact_degree = k + order - 1  # the stencil is exact up to this degree
        if p.degree() > exact_degree:
            continue
        got = (Dk @ p(x))[far]
        np.testing.assert_allclose(got, p.deriv(k)(x)[far], atol=1e-6 * (1 + np.abs(p.coef).sum()))


@pytest.mark.parametrize("order", [2, 4])
def test_convergence_rate(order):
    errs = []
    exact = [np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin]
    for n in (201, 401):
        g = Grid(-np.pi * 4, np.pi * 4, n, order)
        x = g.xi
        D = diff_matrices(g.n, g.h, order)
        errs.append(max(np.max(np.abs(Dk @ np.sin(x) - ex(x))) for Dk, ex in zip(D, exact)))
    rate = np.log2(errs[0] / errs[1])
    assert rate == pytest.approx(order, abs=0.1)


def test_precondition_periodic_cosine():
    L = 20 * np.pi
    n = 1000
    # periodic closure: the n nodes repeat with period n h
    g = Grid(-L / 2, L / 2 - L / n, n)
    x = g.x
    for k in (1.0, 2.5, 7.0):
        u = FieldSample(g, np.cos(k * x))
        out = precondition(u, 0.1, "periodic").values
        kh2 = (2 / g.h * np.sin(k * g.h / 2)) ** 2  # discrete symbol of -D2
        np.testing.assert_allclose(out, np.cos(k * x) / (1 + 0.01 * kh2), atol=1e-12)
        # against the continuous symbol the defect is d^2 (k^2 - k_h^2) <= d^2 k^4 h^2 / 12
        assert np.max(np.abs(out - np.cos(k * x) / (1 + 0.01 * k**2))) <= 0.01 * k**4 * g.h**2 / 12


def test_preconditioner_norm_in_weighted_space():
    rng = np.random.default_rng(RNG_SEED)
    g = Grid()
    eta = 0.25
    worst = 0.0
    for _ in range(50):
        u = FieldSample.from_interior(g, random_smooth(g.xi, rng), representation="weighted", eta=eta)
        for delta in (0.05, 0.1, 0.2):
            out = precondition(u, delta)
            worst = max(worst, l2_norm(out.values, g) / l2_norm(u.values, g))
    assert worst <= 2.1


def test_preconditioner_defect_is_order_delta():
    rng = np.random.default_rng(RNG_SEED)
    g = Grid()
    samples = [random_smooth(g.x, rng) for _ in range(50)]
    ratios = []
    for delta in np.arange(0.02, 0.201, 0.02):
        for u in samples:
            u = u.copy()
            u[0] = u[-1] = 0.0
            Tu = t_delta(FieldSample(g, u), delta).values
            ratios.append(l2_norm(Tu, g) / (delta * h1_norm(u, g)))
    # the symbol d^2 k^2 / (1 + d^2 k^2) is at most d |k| / 2
    assert max(ratios) <= 0.5


def test_cokernel_shape(kpp_front):
    g = kpp_front.grid
    s = kpp_front.spreading
    ck = cokernel(kpp_front, s, g, default_aux_eta(s))
    x = g.x
    slope = np.gradient(ck.phi.values, x)
    far = (x > 20) & (x < 40)
    np.testing.assert_allclose(slope[far], -1.0, atol=1e-5)
    assert np.max(np.abs(ck.phi.values[x < -20])) < 1e-6
    assert ck.ip_norm > 0
    with pytest.raises(ValueError):
        cokernel(kpp_front, spreading(0.1, kpp_front.reaction), g, 0.25)


def test_projector_is_idempotent(kpp_front):
    rng = np.random.default_rng(RNG_SEED)
    g = kpp_front.grid
    s = kpp_front.spreading
    ck = cokernel(kpp_front, s, g, default_aux_eta(s))
    for _ in range(10):
        u = FieldSample(g, random_smooth(g.x, rng))
        pu = project(u, ck)
        ppu = project(pu, ck)
        assert abs(inner(pu.values, ck.phi.values, g)) < 1e-10 * l2_norm(u.values, g) * ck.ip_norm
        np.testing.assert_allclose(ppu.values, pu.values, atol=1e-12 * np.max(np.abs(u.values)))
    uw = u.weighted(0.3)
    assert project(uw, ck).representation == "weighted"


@pytest.mark.parametrize("n", [2001, 4001])
def test_discrete_conjugation_identity(kpp_front, n):
    """``L (omega u) = omega A u`` up to truncation error."""
    g = Grid(-40.0, 60.0, n, 4)
    s = kpp_front.spreading
    cs = front_coefficients(kpp_front)
    L, A = assemble("L", s, cs, g), assemble("A", s, cs, g)
    x = g.xi
    w = critical(s)(x)
    u = np.exp(-((x - 1.0) ** 2))
    err = np.max(np.abs(L.apply(w * u) - w * A.apply(u))) / np.max(np.abs(w * A.apply(u)))
    assert err < 1e-4


def test_weighted_far_field_symbol():
    s = spreading(0.1, logistic())
    g = Grid(-40.0, 60.0, 4001, 4)
    Lp = assemble("L_plus", s, None, g)
    x = g.xi
    inside = (x > -20) & (x < 40)
    for k in (0.0, 0.5, 1.5):
        e = np.exp(1j * k * x)
        got = (Lp.apply(e) / e)[inside]
        np.testing.assert_allclose(got, plus_border(k, s), atol=1e-5)


def test_operator_metadata_and_errors(front_01):
    s = front_01.spreading
    cs = front_coefficients(front_01)
    assert assemble("L", s, cs, Grid()).bandwidth == 5
    assert assemble("L", s, cs, Grid(order=4)).bandwidth == 7
    with pytest.raises(ValueError):
        assemble("B", s, cs, Grid())
    with pytest.raises(ResolutionError):
        assemble("L", s, cs, Grid(-40, 60, 201))


def test_right_slope_row_exact_on_quadratics():
    for order in (2, 4):
        g = Grid(-4.0, 6.0, 201, order)
        x = g.xi
        u = (x - g.x_max) * (2 + 0.5 * (x - g.x_max))  # vanishes at x_max
        assert (right_slope_row(g) @ u)[0] == pytest.approx(2.0, abs=1e-9)


def test_field_sample_representations(tmp_path):
    g = Grid(-5, 5, 101)
    u = FieldSample(g, np.exp(-g.x**2))
    back = u.weighted(0.7).plain()
    np.testing.assert_allclose(back.values, u.values, rtol=1e-14)
    np.testing.assert_allclose(u.weighted(0.7).values, u.values * one_sided(0.7)(g.x))
    with pytest.raises(ValueError):
        FieldSample(g, np.full(g.n, np.nan))
    with pytest.raises(ValueError):
        FieldSample(g, u.values, "weighted")
    u.to_csv(tmp_path / "u.csv")
    assert (tmp_path / "u.csv").read_text().splitlines()[0] == "x,re_u,im_u"
