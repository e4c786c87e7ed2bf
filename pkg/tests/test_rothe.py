import numpy as np
import pytest

from dnpsteady import (ExponentField, compute_extremal_solutions,
                       constant_field, interval_mesh, logistic_source,
                       make_source, multiphase_operator, rothe_evolve,
                       rothe_step)


@pytest.fixture
def setup():
    mesh = interval_mesh(16, 1.0)
    op = multiphase_operator([1.0], [2.0])
    p = ExponentField.constant(2.0, mesh)
    src = logistic_source(sample_points=mesh.coords)
    return mesh, op, p, src


def test_step_keeps_stationary_constant():
    mesh = interval_mesh(12, 1.0)
    op = multiphase_operator([1.0], [2.0])
    p = ExponentField.constant(2.0, mesh)
    src = make_source(0.0, lambda pts, s: s, 1.0,
                      B=lambda pts, s: s ** 2 / 2.0)
    u = rothe_step(mesh, op, p, src, 0.5, constant_field(mesh, 0.3))
    assert np.max(np.abs(u - 0.3)) < 1e-10


def test_step_matches_scalar_update(setup):
    # with unit-slope capacity one step moves c to c + tau * f(c)
    mesh, op, p, src = setup
    tau = 0.1
    for c in (0.1, 0.5, 0.9):
        u = rothe_step(mesh, op, p, src, tau, constant_field(mesh, c))
        assert np.max(np.abs(u - (c + tau * c * (1 - c)))) < 1e-10


def test_step_rejects_large_tau(setup):
    mesh, op, p, src = setup
    tau_bad = 1.5 / src.lambda0
    with pytest.raises(ValueError, match="time step too large"):
        rothe_step(mesh, op, p, src, tau_bad, constant_field(mesh, 0.5))
    with pytest.raises(ValueError, match="tau"):
        rothe_step(mesh, op, p, src, -0.1, constant_field(mesh, 0.5))


def test_zero_state_stays_zero(setup):
    mesh, op, p, src = setup
    traj = rothe_evolve(mesh, op, p, src, constant_field(mesh, 0.0), 0.1, 10)
    assert np.max(np.abs(traj.final)) < 1e-10
    assert traj.times == pytest.approx(np.arange(11) * 0.1)


def test_trajectory_matches_scalar_recursion(setup):
    mesh, op, p, src = setup
    tau = 0.1
    traj = rothe_evolve(mesh, op, p, src, constant_field(mesh, 0.1), tau, 50)
    c = 0.1
    for state in traj.states[1:]:
        c = c + tau * c * (1.0 - c)
        assert np.max(np.abs(state - c)) < 1e-8
    # logistic dynamics approach the carrying capacity
    assert np.max(np.abs(traj.final - 1.0)) < 0.06


def test_ordered_initial_data_stay_ordered(setup):
    mesh, op, p, src = setup
    traj = rothe_evolve(mesh, op, p, src, constant_field(mesh, 0.1), 0.1, 30,
                        companion=constant_field(mesh, 0.2))
    assert traj.diagnostics["order_preserved"]
    assert max(traj.diagnostics["order_gaps"]) <= 1e-8


def test_states_stay_in_box(setup):
    mesh, op, p, src = setup
    rng = np.random.default_rng(0)
    u0 = rng.uniform(0.0, 1.0, size=mesh.n_nodes)
    traj = rothe_evolve(mesh, op, p, src, u0, 0.2, 20)
    assert max(traj.diagnostics["bound_violations"]) <= 1e-8
    for state in traj.states:
        assert np.min(state) >= -1e-8
        assert np.max(state) <= 1.0 + 1e-8


def test_steady_state_is_time_invariant(setup):
    mesh, op, p, src = setup
    _, U_max, _, _ = compute_extremal_solutions(mesh, op, p, src)
    traj = rothe_evolve(mesh, op, p, src, U_max, 0.1, 25, steady_ref=U_max)
    assert max(traj.diagnostics["steady_distances"]) < 1e-7


def test_compact_trajectory_mode(setup):
    mesh, op, p, src = setup
    traj = rothe_evolve(mesh, op, p, src, constant_field(mesh, 0.4), 0.1, 5,
                        keep_states=False)
    assert len(traj.states) == 2
    assert len(traj.times) == 6
    assert len(traj.step_reports) == 5
