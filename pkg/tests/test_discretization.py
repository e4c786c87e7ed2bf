import numpy as np
import pytest

from dnpsteady import (ExponentField, assemble_energy_gradient, build_mesh,
                       constant_field, integrate, interval_mesh,
                       logistic_source, make_source, multiphase_operator,
                       rectangle_mesh)
from dnpsteady.discretization import assemble_hessian, flux_gradient


def test_interval_mesh_counts():
    mesh = interval_mesh(4, 1.0)
    assert mesh.n_nodes == 5
    assert mesh.n_elems == 4
    assert mesh.volume == pytest.approx(1.0)


def test_rectangle_mesh_counts():
    mesh = rectangle_mesh(2, 2, 1.0, 1.0)
    assert mesh.n_nodes == 9
    assert mesh.n_elems == 8
    assert mesh.volume == pytest.approx(1.0)


def test_uniform_measures_equal():
    for mesh in (interval_mesh(7, 2.0), rectangle_mesh(3, 4, 1.0, 2.0)):
        assert np.allclose(mesh.measures, mesh.measures[0])


@pytest.mark.parametrize("bad", [
    {"kind": "interval", "n": 1, "length": 1.0},
    {"kind": "interval", "n": 4, "length": 0.0},
    {"kind": "rectangle", "nx": 1, "ny": 2, "lx": 1.0, "ly": 1.0},
    {"kind": "hexgrid", "n": 4},
])
def test_build_mesh_rejects_bad_specs(bad):
    with pytest.raises(ValueError):
        build_mesh(bad)


def test_integrate_constants():
    mesh = rectangle_mesh(3, 3, 1.0, 1.0)
    assert integrate(mesh, constant_field(mesh, 3.0)) == pytest.approx(3.0)
    assert integrate(mesh, constant_field(mesh, 0.0)) == 0.0


def test_integrate_linear_profile():
    mesh = interval_mesh(1000, 1.0)
    assert integrate(mesh, mesh.coords[:, 0]) == pytest.approx(0.5, abs=1e-6)


def test_integrate_shape_mismatch():
    mesh = interval_mesh(4, 1.0)
    with pytest.raises(ValueError):
        integrate(mesh, np.ones(3))


def test_element_gradients_linear_field():
    mesh = rectangle_mesh(3, 3, 1.0, 1.0)
    u = 2.0 * mesh.coords[:, 0] - 0.5 * mesh.coords[:, 1]
    grads = mesh.element_gradients(u)
    assert np.allclose(grads[:, 0], 2.0)
    assert np.allclose(grads[:, 1], -0.5)


def test_flux_sum_vanishes():
    # testing with the constant hat-sum annihilates the flux block
    mesh = rectangle_mesh(4, 4, 1.0, 1.0)
    op = multiphase_operator([1.0, 1.0], [2.0, 3.0])
    rng = np.random.default_rng(3)
    for _ in range(5):
        u = rng.standard_normal(mesh.n_nodes)
        assert abs(flux_gradient(mesh, op, u).sum()) < 1e-13


def test_constant_state_zero_gradient():
    # with g = lam * b(c) every constant solves the capacity equation
    mesh = interval_mesh(8, 1.0)
    p = ExponentField.constant(2.0, mesh)
    op = multiphase_operator([1.0], [2.0])
    src = make_source(0.0, lambda pts, s: s, 1.0,
                      B=lambda pts, s: s ** 2 / 2.0)
    c = 0.4
    g = constant_field(mesh, src.lambda0 * c)
    _, grad = assemble_energy_gradient(mesh, op, src, src.lambda0, 0.0,
                                       constant_field(mesh, c), p, g=g)
    assert np.max(np.abs(grad)) < 1e-15


def test_reaction_energy_zero_at_origin():
    mesh = interval_mesh(8, 1.0)
    p = ExponentField.constant(2.0, mesh)
    op = multiphase_operator([1.0], [2.0])
    src = logistic_source()
    energy, _ = assemble_energy_gradient(mesh, op, src, 0.0, 0.0,
                                         constant_field(mesh, 0.0), p)
    assert energy == 0.0


def test_reaction_mode_rejects_lam():
    mesh = interval_mesh(8, 1.0)
    p = ExponentField.constant(2.0, mesh)
    op = multiphase_operator([1.0], [2.0])
    src = logistic_source()
    with pytest.raises(ValueError, match="lam=0"):
        assemble_energy_gradient(mesh, op, src, 1.0, 0.0,
                                 constant_field(mesh, 0.0), p)


def _random_state(rng, n, delta0=1.0, margin=0.02):
    """Random nodal values spanning all extension branches, but kept away
    from the branch joints where the energy is only C^1."""
    u = rng.uniform(-0.4, 1.4, size=n) * delta0
    for joint in (0.0, delta0):
        near = np.abs(u - joint) < margin
        u[near] = joint + np.where(u[near] >= joint, margin, -margin)
    return u


@pytest.mark.parametrize("mesh", [interval_mesh(16, 1.0),
                                  rectangle_mesh(4, 4, 1.0, 1.0)])
@pytest.mark.parametrize("eps", [0.0, 0.5])
def test_gradient_matches_directional_derivative(mesh, eps):
    rng = np.random.default_rng(11)
    pfield = ExponentField.from_callable(
        lambda pts: 2.2 + 0.5 * np.sin(2.0 * np.pi * pts[:, 0]), mesh)
    op = multiphase_operator(
        [1.0, 0.5], [2.0, lambda pts: 2.2 + 0.5 * np.sin(
            2.0 * np.pi * pts[:, 0])])
    src = logistic_source(sample_points=mesh.coords)
    lam = 1.2 * src.lambda0
    h = 1e-6
    for _ in range(25):
        V = _random_state(rng, mesh.n_nodes)
        phi = rng.standard_normal(mesh.n_nodes)
        g = rng.uniform(0.0, lam, size=mesh.n_nodes)
        energy, grad = assemble_energy_gradient(mesh, op, src, lam, eps, V,
                                                pfield, g=g)
        ep, _ = assemble_energy_gradient(mesh, op, src, lam, eps,
                                         V + h * phi, pfield, g=g)
        em, _ = assemble_energy_gradient(mesh, op, src, lam, eps,
                                         V - h * phi, pfield, g=g)
        dd = (ep - em) / (2.0 * h)
        ref = float(np.dot(grad, phi))
        assert abs(dd - ref) <= 1e-5 * max(1e-8, abs(dd), abs(ref))


def test_energy_lower_bound_constant():
    # J >= -lam*delta0*int(b(d0)-b(0)) - lam/2*int (b(d0)-b(0))^2
    mesh = interval_mesh(16, 1.0)
    p = ExponentField.constant(2.0, mesh)
    op = multiphase_operator([1.0], [2.0])
    src = logistic_source(sample_points=mesh.coords)
    lam = src.lambda0
    bound = -lam * src.delta0 * mesh.volume - 0.5 * lam * mesh.volume
    rng = np.random.default_rng(5)
    for _ in range(50):
        V = rng.uniform(-2.0, 3.0, size=mesh.n_nodes)
        g = rng.uniform(0.0, lam, size=mesh.n_nodes)
        energy, _ = assemble_energy_gradient(mesh, op, src, lam, 0.0, V, p,
                                             g=g)
        assert energy >= bound - 1e-12


def test_hessian_matches_gradient_differences():
    mesh = interval_mesh(12, 1.0)
    p = ExponentField.constant(2.5, mesh)
    op = multiphase_operator([1.0, 1.0], [2.0, 2.5])
    src = logistic_source(sample_points=mesh.coords)
    lam = src.lambda0
    rng = np.random.default_rng(21)
    V = 0.2 + 0.6 * rng.uniform(size=mesh.n_nodes)
    g = rng.uniform(0.0, lam, size=mesh.n_nodes)
    H = assemble_hessian(mesh, op, src, lam, 0.3, V, p).toarray()
    h = 1e-6
    for _ in range(5):
        phi = rng.standard_normal(mesh.n_nodes)
        _, gp = assemble_energy_gradient(mesh, op, src, lam, 0.3,
                                         V + h * phi, p, g=g)
        _, gm = assemble_energy_gradient(mesh, op, src, lam, 0.3,
                                         V - h * phi, p, g=g)
        fd = (gp - gm) / (2.0 * h)
        assert np.allclose(H @ phi, fd, rtol=1e-4, atol=1e-7)


def test_mesh_rejects_nonfinite_field():
    mesh = interval_mesh(4, 1.0)
    bad = np.full(mesh.n_nodes, np.nan)
    with pytest.raises(ValueError):
        integrate(mesh, bad)
