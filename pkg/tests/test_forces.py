import numpy as np

from enspod import fem, forces
from enspod.mesh import build_structured_square


def test_rotational_force_is_counterclockwise():
    # torque about the origin is positive inside the unit disk
    x, y = 0.3, 0.2
    fx, fy = forces.rotational_force(x, y)
    assert x * fy - y * fx > 0
    # vanishes on the unit circle
    fx, fy = forces.rotational_force(1.0, 0.0)
    assert fx == 0.0 and fy == 0.0


def test_perturbed_force_linearity():
    x = np.array([0.2, 0.7])
    y = np.array([0.1, 0.4])
    bx, by = forces.rotational_force(x, y)
    px, py = forces.trig_perturbation(x, y)
    fx, fy = forces.perturbed_force(0.25)(x, y)
    assert np.allclose(fx, bx + 0.25 * px)
    assert np.allclose(fy, by + 0.25 * py)


def test_static_force_model_is_time_independent():
    space = fem.TaylorHoodSpace(build_structured_square(4))
    model = forces.StaticForceModel(space, forces.rotational_force, 3)
    F0, F1 = model(0.0), model(17.3)
    assert F0.shape == (3, space.n_vel)
    assert np.array_equal(F0, F1)
    assert np.allclose(F0[0], F0[2])


def test_manufactured_flow_satisfies_momentum_at_a_point():
    # finite-difference check of f = u_t + u.grad(u) - nu lap(u) + grad(p)
    nu = 0.07
    velocity, force = forces.manufactured_flow(nu)
    x0, y0, t0 = 0.37, 0.61, 0.8
    d = 1e-5

    def u(x, y, t):
        ux, uy = velocity(np.array([x]), np.array([y]), t)
        return np.array([float(ux[0]), float(uy[0])])

    u_t = (u(x0, y0, t0 + d) - u(x0, y0, t0 - d)) / (2 * d)
    u_x = (u(x0 + d, y0, t0) - u(x0 - d, y0, t0)) / (2 * d)
    u_y = (u(x0, y0 + d, t0) - u(x0, y0 - d, t0)) / (2 * d)
    lap = (u(x0 + d, y0, t0) + u(x0 - d, y0, t0) + u(x0, y0 + d, t0)
           + u(x0, y0 - d, t0) - 4 * u(x0, y0, t0)) / d ** 2
    uu = u(x0, y0, t0)
    p = lambda x, y: np.sin(np.pi * x) * np.cos(np.pi * y) * np.cos(3 * t0)
    grad_p = np.array([(p(x0 + d, y0) - p(x0 - d, y0)) / (2 * d),
                       (p(x0, y0 + d) - p(x0, y0 - d)) / (2 * d)])
    expect = u_t + uu[0] * u_x + uu[1] * u_y - nu * lap + grad_p
    fx, fy = force(np.array([x0]), np.array([y0]), t0)
    assert np.allclose([float(fx[0]), float(fy[0])], expect, atol=1e-5)


def test_manufactured_flow_is_divergence_free_and_no_slip():
    velocity, _ = forces.manufactured_flow(0.1)
    d = 1e-6
    x0, y0, t0 = 0.42, 0.33, 0.5

    def comp(i, x, y):
        out = velocity(np.array([x]), np.array([y]), t0)
        return float(out[i][0])

    div = ((comp(0, x0 + d, y0) - comp(0, x0 - d, y0))
           + (comp(1, x0, y0 + d) - comp(1, x0, y0 - d))) / (2 * d)
    assert abs(div) < 1e-6
    for x, y in [(0.0, 0.3), (1.0, 0.7), (0.5, 0.0), (0.5, 1.0)]:
        assert abs(comp(0, x, y)) < 1e-14
        assert abs(comp(1, x, y)) < 1e-14
