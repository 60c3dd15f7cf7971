import json

import numpy as np
import pytest
from oracles import fd_jacobian_action, kpp_front_bvp

from efkpp.errors import InconsistentParameters, NoConvergence
from efkpp.front_solver import (
    FrontEnv,
    _newton,
    front,
    load_front,
    newton_continue,
    nonlinear_part,
    solve_kpp_front,
)
from efkpp.operators import FieldSample, Grid, cokernel, inner
from efkpp.reaction import polynomial, sine
from efkpp.weights import default_aux_eta


@pytest.fixture(scope="module")
def bvp():
    return kpp_front_bvp()


@pytest.mark.parametrize("name", ["kpp_front", "front_01"])
def test_residual_and_boundary_values(name, request):
    sol = request.getfixturevalue(name)
    assert sol.ode_residual() <= 1e-7
    q = sol.profile()
    assert abs(q[0] - 1) < 1e-12 and abs(q[-1]) < 1e-20
    assert np.all(np.diff(q) <= 1e-12)  # monotone front


def test_matches_collocation_oracle(logistic_term, bvp):
    sol = solve_kpp_front(logistic_term, Grid(-40.0, 60.0, 4001, 4))
    x = sol.grid.x
    sel = (x > -25) & (x < 14)
    err = np.max(np.abs(sol.profile()[sel] - bvp.sol(x[sel])[0]))
    assert err <= 1e-5
    assert sol.mu == pytest.approx(bvp.p[0], abs=1e-4)


def test_default_grid_is_second_order_close_to_oracle(kpp_front, bvp):
    x = kpp_front.grid.x
    sel = (x > -25) & (x < 14)
    assert np.max(np.abs(kpp_front.profile()[sel] - bvp.sol(x[sel])[0])) < 5e-3


@pytest.mark.parametrize("name", ["kpp_front", "front_01"])
def test_asymptotic_tail(name, request):
    sol = request.getfixturevalue(name)
    x = np.linspace(15, 25, 41)
    ratio = sol.q(x) * np.exp(sol.spreading.eta_star * x) / (sol.mu + x)
    assert np.all(np.abs(ratio - 1) <= 0.02)


def test_continuation_is_path_independent(kpp_front, front_01):
    other = newton_continue(kpp_front, 0.1, steps=10)
    assert other.mu == pytest.approx(front_01.mu, abs=1e-8)
    assert abs(front_01.mu - kpp_front.mu) <= 0.3


@pytest.mark.parametrize("seed", [0, 1])
def test_bordered_jacobian_matches_finite_differences(front_01, seed):
    rng = np.random.default_rng(seed)
    env = front_01.env
    m = front_01.grid.n - 2
    v = front_01.core.interior + 1e-3 * rng.standard_normal(m) * np.exp(-(front_01.grid.xi / 10) ** 2)
    mu = front_01.mu + 0.1
    d, dmu = rng.standard_normal(m), rng.standard_normal()
    J = env.bordered_jacobian(v, mu)
    got = J[:m, :m] @ d + J[:m, m].toarray().ravel() * dmu
    ref = fd_jacobian_action(env.residual_F, v, mu, d, dmu)
    assert np.max(np.abs(got - ref)) <= 1e-5 * np.max(np.abs(ref))


def test_transversality_pairing(logistic_term):
    for g, tol in [(Grid(), 0.02), (Grid(-40.0, 60.0, 4001, 4), 1e-4)]:
        q0 = solve_kpp_front(logistic_term, g)
        chi = q0.env.jacobian_mu(q0.core.interior, q0.mu)
        ck = cokernel(q0, q0.spreading, g, default_aux_eta(q0.spreading))
        pairing = inner(FieldSample.from_interior(g, chi).values, ck.phi.values, g)
        assert pairing == pytest.approx(1.0, abs=tol)


def test_nonlinear_part_is_quadratic(front_01):
    env = FrontEnv(front_01.spreading, sine(), front_01.grid)
    x = front_01.grid.xi
    base = env.base_state(front_01.mu)
    omega = np.exp(env.log_w)
    w = np.exp(-(x - 1) ** 2)
    norms = [np.max(np.abs(nonlinear_part(eps * w, base, omega, sine()))) for eps in (1e-3, 5e-4)]
    assert np.log2(norms[0] / norms[1]) == pytest.approx(2.0, abs=1e-3)


def test_other_reaction_matches_its_oracle():
    # plain Newton stalls for this term; the reaction homotopy takes over
    sol = solve_kpp_front(sine(), Grid(-40.0, 60.0, 4001, 4))
    ref = kpp_front_bvp(reaction="sine")
    x = sol.grid.x
    sel = (x > -25) & (x < 14)
    assert np.max(np.abs(sol.profile()[sel] - ref.sol(x[sel])[0])) <= 1e-5
    assert sol.mu == pytest.approx(ref.p[0], abs=1e-4)
    assert front(sine(), 0.05).ode_residual() <= 1e-7


def test_invalid_reaction_is_rejected():
    with pytest.raises(InconsistentParameters):
        solve_kpp_front(polynomial([0.0, 0.1, 0.9, -1.0]))


def test_newton_reports_history(kpp_front):
    env = kpp_front.env
    with pytest.raises(NoConvergence) as info:
        _newton(env, np.zeros(kpp_front.grid.n - 2), 1.0, max_iter=1)
    assert len(info.value.history) >= 1 and info.value.history[0] > 1e-3


def test_front_file_round_trip(front_01, logistic_term, tmp_path):
    path = tmp_path / "front.csv"
    front_01.to_csv(path)
    head = json.loads(path.read_text().splitlines()[0][2:])
    assert head["delta"] == 0.1 and head["ode_residual"] <= 1e-7
    back = load_front(path, logistic_term)
    assert back.mu == front_01.mu
    np.testing.assert_array_equal(back.v, front_01.v)
    with pytest.raises(ValueError):
        load_front(path, sine())


def test_core_decays(front_01):
    assert front_01.core_decay_rate() < -0.3
