"""Body forces for the experiments and a manufactured flow for convergence
studies.

The offset-circles flow is driven by a counterclockwise rotational force;
perturbed variants add a scaled trigonometric field and are used only to
generate initial conditions through a steady Stokes solve.
"""

import numpy as np
import sympy

from . import fem


def rotational_force(x, y):
    """f = (-4y (1 - x^2 - y^2), 4x (1 - x^2 - y^2))."""
    s = 1.0 - x ** 2 - y ** 2
    return -4.0 * y * s, 4.0 * x * s


def trig_perturbation(x, y):
    """(sin(3 pi x) sin(3 pi y), cos(3 pi x) cos(3 pi y))."""
    return (np.sin(3 * np.pi * x) * np.sin(3 * np.pi * y),
            np.cos(3 * np.pi * x) * np.cos(3 * np.pi * y))


def perturbed_force(eps):
    def f(x, y):
        bx, by = rotational_force(x, y)
        px, py = trig_perturbation(x, y)
        return bx + eps * px, by + eps * py
    return f


class StaticForceModel:
    """Time-independent loads shared by all members; assembled once."""

    def __init__(self, space, force, J):
        self._load = np.tile(fem.load_vector(space, force), (J, 1))

    def __call__(self, t):
        return self._load


class TimeForceModel:
    """Per-member time-dependent analytic forces."""

    def __init__(self, space, forces):
        self.space = space
        self.forces = forces

    def __call__(self, t):
        return np.stack([fem.load_vector(self.space, lambda x, y, fj=f: fj(x, y, t))
                         for f in self.forces])


def manufactured_flow(nu, amplitude=10.0, freq=3.0, p_amplitude=1.0):
    """Divergence-free manufactured solution on the unit square.

    Stream function psi = amplitude * (x(1-x)y(1-y))^2 * cos(freq t) gives a
    velocity with zero value and zero normal derivative on the boundary;
    pressure p_amplitude * sin(pi x) cos(pi y) cos(freq t) has zero mean.
    Returns (velocity(x, y, t), force(x, y, t)) as vectorized callables.
    """
    x, y, t = sympy.symbols("x y t")
    psi = amplitude * (x * (1 - x) * y * (1 - y)) ** 2 * sympy.cos(freq * t)
    u = sympy.diff(psi, y)
    v = -sympy.diff(psi, x)
    p = p_amplitude * sympy.sin(sympy.pi * x) * sympy.cos(sympy.pi * y) \
        * sympy.cos(freq * t)

    def material(w):
        return (sympy.diff(w, t) + u * sympy.diff(w, x) + v * sympy.diff(w, y)
                - nu * (sympy.diff(w, x, 2) + sympy.diff(w, y, 2)))

    fx = sympy.simplify(material(u) + sympy.diff(p, x))
    fy = sympy.simplify(material(v) + sympy.diff(p, y))
    u_fn = sympy.lambdify((x, y, t), (u, v), "numpy")
    f_fn = sympy.lambdify((x, y, t), (fx, fy), "numpy")

    def velocity(xa, ya, ta):
        ux, uy = u_fn(xa, ya, ta)
        return np.broadcast_to(ux, np.shape(xa)), np.broadcast_to(uy, np.shape(xa))

    def force(xa, ya, ta):
        gx, gy = f_fn(xa, ya, ta)
        return np.broadcast_to(gx, np.shape(xa)), np.broadcast_to(gy, np.shape(xa))

    return velocity, force
