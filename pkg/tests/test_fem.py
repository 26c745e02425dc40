import numpy as np
import pytest

from enspod import fem
from enspod.mesh import build_structured_square

from conftest import random_zero_boundary


def test_p2_partition_of_unity():
    pts = np.array([[0.1, 0.2], [0.3, 0.3], [0.0, 0.9]])
    V = fem.p2_values(pts)
    G = fem.p2_grads(pts)
    assert np.allclose(V.sum(axis=1), 1.0)
    assert np.allclose(G.sum(axis=1), 0.0)
    P = fem.p1_values(pts)
    assert np.allclose(P.sum(axis=1), 1.0)


def test_p2_nodal_property():
    # basis functions are 1 at their own node and 0 at the other five
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                      [0.5, 0.5], [0.0, 0.5], [0.5, 0.0]])
    V = fem.p2_values(nodes)
    assert np.allclose(V, np.eye(6), atol=1e-14)


def test_mass_matrix_total(square_disc):
    # row sums of the vector mass matrix integrate the constant field (1, 1)
    one = np.ones(square_disc.space.n_vel)
    assert np.isclose(one @ (square_disc.M @ one), 2.0, atol=1e-13)


def test_stiffness_annihilates_constants(square_disc):
    one = np.ones(square_disc.space.n_vel)
    assert np.abs(square_disc.A @ one).max() < 1e-13


def test_stiffness_exact_on_linear_field(square_disc):
    u = fem.interpolate(square_disc.space, lambda x, y: (x, 0.0 * y))
    assert np.isclose(u @ (square_disc.A @ u), 1.0, atol=1e-13)


def test_divergence_free_linear_field(square_disc):
    u = fem.interpolate(square_disc.space, lambda x, y: (x, -y))
    assert np.abs(square_disc.B @ u).max() < 1e-13
    # int div(x, y) = 2 |Omega|
    v = fem.interpolate(square_disc.space, lambda x, y: (x, y))
    assert np.isclose((square_disc.B @ v).sum(), 2.0, atol=1e-13)


def test_convection_skew_symmetry(square_space, rng):
    w = rng.standard_normal(square_space.n_vel)
    u = rng.standard_normal(square_space.n_vel)
    N = fem.assemble_convection(square_space, w)
    assert abs(u @ (N @ u)) < 1e-12 * np.abs(w).max() * (u @ u)


def test_trilinear_matches_assembled_operator(square_space, rng):
    w, u, v = rng.standard_normal((3, square_space.n_vel))
    N = fem.assemble_convection(square_space, w)
    direct = fem.trilinear(square_space, w, u, v)
    assert np.isclose(direct, v @ (N @ u), atol=1e-12 * max(abs(direct), 1.0))


def test_convection_rhs_matches_operator(square_space, rng):
    w, u = rng.standard_normal((2, square_space.n_vel))
    N = fem.assemble_convection(square_space, w)
    assert np.allclose(fem.convection_rhs(square_space, w, u), N @ u,
                       atol=1e-12)


def test_skew_form_identity_zero_boundary(square_space, rng):
    # b*(w, u, v) = (w . grad u, v) + 0.5 (div w, u . v) for fields
    # vanishing on the boundary
    w, u, v = random_zero_boundary(square_space, rng, n=3)
    lhs = fem.trilinear(square_space, w, u, v)
    rhs = fem.trilinear_unskewed_identity(square_space, w, u, v)
    assert abs(lhs - rhs) <= 1e-11 * max(abs(lhs), 1.0)


def test_norms_exact_on_linear_field(square_space):
    u = fem.interpolate(square_space, lambda x, y: (x, 0.0 * y))
    n = fem.norms(square_space, u)
    assert np.isclose(n["l2"], 1.0 / np.sqrt(3.0), atol=1e-13)
    assert np.isclose(n["h1_semi"], 1.0, atol=1e-13)
    assert np.isclose(n["l3"], 0.25 ** (1.0 / 3.0), atol=1e-10)
    assert np.isclose(n["l6"], (1.0 / 7.0) ** (1.0 / 6.0), atol=1e-10)


def test_curl_exact_on_rotation(square_space):
    u = fem.interpolate(square_space, lambda x, y: (-y, x))  # curl = 2
    assert np.isclose(fem.curl_sq_integral(square_space, u), 4.0, atol=1e-12)


def test_load_vector_duality(square_space):
    F = fem.load_vector(square_space, lambda x, y: (1.0 + 0.0 * x, 0.0 * y))
    u = fem.interpolate(square_space, lambda x, y: (x, 0.0 * y))
    assert np.isclose(F @ u, 0.5, atol=1e-12)


def test_saddle_solver_residuals(square_disc, rng):
    nu = 0.1
    S = nu * square_disc.A
    F = fem.load_vector(square_disc.space,
                        lambda x, y: (np.sin(np.pi * y), np.cos(np.pi * x)))
    u, p = fem.solve_steady_stokes(square_disc, F, nu)
    f = square_disc.space.free_vel
    res = (S @ u - square_disc.B.T @ p - F)[f]
    assert np.abs(res).max() < 1e-10
    assert np.abs(square_disc.B @ u).max() < 1e-10
    assert abs(square_disc.c @ p) < 1e-10
    # boundary values are strongly zero
    mask = np.ones(square_disc.space.n_vel, dtype=bool)
    mask[f] = False
    assert np.abs(u[mask]).max() == 0.0


def test_stokes_zero_force_gives_zero(square_disc):
    u, p = fem.solve_steady_stokes(
        square_disc, lambda x, y: (0.0 * x, 0.0 * y), 1.0)
    assert np.abs(u).max() < 1e-13
    assert np.abs(p).max() < 1e-11


def test_stokes_rejects_nonpositive_viscosity(square_disc):
    with pytest.raises(ValueError):
        fem.solve_steady_stokes(square_disc,
                                lambda x, y: (0.0 * x, 0.0 * y), 0.0)


def test_dirichlet_dofs_cover_all_markers():
    space = fem.TaylorHoodSpace(build_structured_square(4))
    # on the unit square every boundary node is constrained: 16 edges ->
    # 16 vertices + 16 midpoints, times two components
    assert space.n_vel - len(space.free_vel) == 2 * 32
