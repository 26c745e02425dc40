import numpy as np
import pytest

from enspod import fem, mesh


@pytest.fixture(scope="session")
def square_space():
    return fem.TaylorHoodSpace(mesh.build_structured_square(8))


@pytest.fixture(scope="session")
def square_disc(square_space):
    return fem.Discretization(square_space)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def random_zero_boundary(space, rng, n=1):
    """Random velocity fields vanishing on the Dirichlet boundary."""
    u = rng.standard_normal((n, space.n_vel))
    mask = np.zeros(space.n_vel, dtype=bool)
    mask[space.free_vel] = True
    u[:, ~mask] = 0.0
    return u[0] if n == 1 else u
