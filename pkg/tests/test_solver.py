import numpy as np
import pytest

from dnpsteady import (ExponentField, SolverOptions, apply_K,
                       assemble_energy_gradient, constant_field,
                       gamma_convergence_study, interval_mesh,
                       logistic_source, make_source, multiphase_operator,
                       rectangle_mesh, solve_auxiliary, solve_perturbed)


@pytest.fixture
def lin_setup():
    """Single-phase Laplacian with a pure capacity source (no reaction)."""
    mesh = interval_mesh(16, 1.0)
    p = ExponentField.constant(2.0, mesh)
    op = multiphase_operator([1.0], [2.0])
    src = make_source(0.0, lambda pts, s: s, 1.0,
                      B=lambda pts, s: s ** 2 / 2.0,
                      db_ds=lambda pts, s: np.ones_like(np.asarray(s)))
    return mesh, op, p, src


def test_perturbed_limit_recovers_constant(lin_setup):
    # scalar oracle: minimize B(c) + eps c^p/p - g c -> c = g/(1+eps) here
    mesh, op, p, src = lin_setup
    g = constant_field(mesh, 0.5)
    rep = solve_perturbed(mesh, op, p, src, 1.0, 1e-8, g)
    assert np.max(np.abs(rep.minimizer - 0.5)) < 1e-6
    assert rep.converged
    oracle = 0.5 / (1.0 + 1e-2)
    rep2 = solve_perturbed(mesh, op, p, src, 1.0, 1e-2, g)
    assert np.max(np.abs(rep2.minimizer - oracle)) < 1e-9


def test_perturbed_low_edge_stays_in_box(lin_setup):
    mesh, op, p, src = lin_setup
    g = constant_field(mesh, 0.0)  # lam * b(x, 0)
    for eps in (1e-2, 1e-5):
        rep = solve_perturbed(mesh, op, p, src, 1.0, eps, g)
        assert rep.bound_violation <= 1e-8
        assert np.max(np.abs(rep.minimizer)) < 1e-6


def test_perturbed_unique_from_different_starts(lin_setup):
    mesh, op, p, src = lin_setup
    rng = np.random.default_rng(0)
    g = rng.uniform(0.0, 1.0, size=mesh.n_nodes)
    sols = []
    for _ in range(4):
        start = rng.uniform(-0.5, 1.5, size=mesh.n_nodes)
        rep = solve_perturbed(mesh, op, p, src, 1.0, 1e-3, g, start=start)
        sols.append(rep.minimizer)
    for s in sols[1:]:
        assert np.max(np.abs(s - sols[0])) < 1e-8


def test_perturbed_rejects_bad_inputs(lin_setup):
    mesh, op, p, src = lin_setup
    g = constant_field(mesh, 0.5)
    with pytest.raises(ValueError, match="eps"):
        solve_perturbed(mesh, op, p, src, 1.0, 0.0, g)
    with pytest.raises(ValueError, match="monotonicity"):
        solve_perturbed(mesh, op, p, src, 0.5, 1e-3, g)
    with pytest.raises(ValueError, match="admissible band"):
        solve_perturbed(mesh, op, p, src, 1.0, 1e-3,
                        constant_field(mesh, 2.0))


def test_auxiliary_constant_solutions(lin_setup):
    mesh, op, p, src = lin_setup
    rep = solve_auxiliary(mesh, op, p, src, 1.0, constant_field(mesh, 0.5))
    assert np.max(np.abs(rep.minimizer - 0.5)) < 1e-8
    rep_hi = solve_auxiliary(mesh, op, p, src, 1.0, constant_field(mesh, 1.0))
    assert np.max(np.abs(rep_hi.minimizer - 1.0)) < 1e-8


def test_auxiliary_stage_gaps_sandwich(lin_setup):
    mesh, op, p, src = lin_setup
    rep = solve_auxiliary(mesh, op, p, src, 1.0, constant_field(mesh, 0.5))
    assert rep.eps_schedule[0] == pytest.approx(1e-2)
    assert rep.eps_schedule[-1] == 0.0
    for row in rep.stage_gaps:
        assert -1e-12 <= row["gap"] <= row["bound"] + 1e-12


def test_strict_convexity_witness(lin_setup):
    mesh, op, p, src = lin_setup
    rng = np.random.default_rng(1)
    g = constant_field(mesh, 0.5)
    eps = 0.1
    for _ in range(10):
        V1 = rng.uniform(-1.0, 2.0, size=mesh.n_nodes)
        V2 = rng.uniform(-1.0, 2.0, size=mesh.n_nodes)
        if np.max(np.abs(V1 - V2)) < 0.5:
            V2 = V2 + 1.0
        mid = 0.5 * (V1 + V2)
        e1, _ = assemble_energy_gradient(mesh, op, src, 1.0, eps, V1, p, g=g)
        e2, _ = assemble_energy_gradient(mesh, op, src, 1.0, eps, V2, p, g=g)
        em, _ = assemble_energy_gradient(mesh, op, src, 1.0, eps, mid, p, g=g)
        assert em < 0.5 * (e1 + e2) - 1e-8


def test_apply_K_fixed_points():
    mesh = interval_mesh(12, 1.0)
    p = ExponentField.constant(2.0, mesh)
    op = multiphase_operator([1.0], [2.0])
    src = logistic_source(sample_points=mesh.coords)
    lam = src.lambda0
    for c in (0.0, 1.0):
        V = apply_K(mesh, op, p, src, lam, constant_field(mesh, c))
        assert np.max(np.abs(V - c)) < 1e-9


def test_apply_K_pure_capacity_identity(lin_setup):
    mesh, op, p, src = lin_setup
    for c in (0.2, 0.9):
        V = apply_K(mesh, op, p, src, 1.0, constant_field(mesh, c))
        assert np.max(np.abs(V - c)) < 1e-9


def test_apply_K_monotone_in_the_state():
    mesh = interval_mesh(10, 1.0)
    p = ExponentField.constant(2.0, mesh)
    op = multiphase_operator([1.0], [2.0])
    src = logistic_source(sample_points=mesh.coords)
    lam = src.lambda0
    rng = np.random.default_rng(2)
    for _ in range(10):
        U1 = rng.uniform(0.0, 1.0, size=mesh.n_nodes)
        U2 = np.minimum(U1 + rng.uniform(0.0, 0.5, size=mesh.n_nodes), 1.0)
        V1 = apply_K(mesh, op, p, src, lam, U1)
        V2 = apply_K(mesh, op, p, src, lam, U2)
        assert np.all(V1 <= V2 + 1e-8)


def test_apply_K_rejects_out_of_box_state():
    mesh = interval_mesh(8, 1.0)
    p = ExponentField.constant(2.0, mesh)
    op = multiphase_operator([1.0], [2.0])
    src = logistic_source(sample_points=mesh.coords)
    with pytest.raises(ValueError, match="leaves"):
        apply_K(mesh, op, p, src, src.lambda0, constant_field(mesh, 1.5))


def test_gamma_study_rows(lin_setup):
    mesh, op, p, src = lin_setup
    g = constant_field(mesh, 0.4)
    study = gamma_convergence_study(mesh, op, p, src, 1.0, g,
                                    [1e-1, 1e-2, 1e-3, 1e-6, 1e-10])
    assert study.ok
    gaps = [r["gap"] for r in study.rows]
    assert all(g2 <= g1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-9
    for row in study.rows:
        assert row["bound"] == pytest.approx(row["eps"] / p.p_min)


def test_gamma_study_rejects_bad_eps_list(lin_setup):
    mesh, op, p, src = lin_setup
    g = constant_field(mesh, 0.4)
    with pytest.raises(ValueError):
        gamma_convergence_study(mesh, op, p, src, 1.0, g, [1e-2, 1e-1])
    with pytest.raises(ValueError):
        gamma_convergence_study(mesh, op, p, src, 1.0, g, [0.0])


def test_variable_exponent_2d_solve():
    mesh = rectangle_mesh(4, 4, 1.0, 1.0)
    pfun = lambda pts: 2.2 + 0.4 * np.sin(2.0 * np.pi * pts[:, 0]) \
        * np.cos(np.pi * pts[:, 1])
    p = ExponentField.from_callable(pfun, mesh)
    op = multiphase_operator([1.0, 1.0], [2.0, pfun])
    src = logistic_source(sample_points=mesh.coords)
    lam = src.lambda0
    g = src.g_lam(mesh.coords, constant_field(mesh, 0.5), lam)
    rep = solve_auxiliary(mesh, op, p, src, lam, g)
    assert rep.converged
    assert rep.bound_violation <= 1e-8
    # x-independent scalar data, so the solution is the constant zero of
    # lam*b(V) = g, i.e. V = g / lam pointwise only if g were constant;
    # here g is constant because the state was constant
    assert np.max(np.abs(rep.minimizer - rep.minimizer[0])) < 1e-8


def test_report_summary_roundtrip(lin_setup):
    mesh, op, p, src = lin_setup
    rep = solve_auxiliary(mesh, op, p, src, 1.0, constant_field(mesh, 0.5))
    summary = rep.summary()
    assert summary["converged"] is True
    assert summary["grad_norm"] <= 1e-9
    assert summary["eps_schedule"][-1] == 0.0


def test_sandwich_bound_above_unit_box():
    # minimizers live in [0, delta0]; the bound constant grows with the box
    from dnpsteady.solver import sandwich_bound
    mesh = interval_mesh(8, 1.0)
    p = ExponentField.constant(2.0, mesh)
    small = make_source(0.0, lambda pts, s: s, 1.0)
    assert sandwich_bound(mesh, p, small, 1e-2) == pytest.approx(5e-3)
    big = make_source(lambda pts, s: 2.0 - s, lambda pts, s: s, 2.0)
    assert sandwich_bound(mesh, p, big, 1e-2) == pytest.approx(
        1e-2 * 2.0 ** 2 / 2.0)


def test_custom_options_tolerance(lin_setup):
    mesh, op, p, src = lin_setup
    opts = SolverOptions(tol=1e-13)
    rep = solve_auxiliary(mesh, op, p, src, 1.0, constant_field(mesh, 0.3),
                          opts=opts)
    assert rep.grad_norm <= 1e-13
