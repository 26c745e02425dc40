"""Reduced R-dimensional ensemble stepping on a POD basis.

Because the basis vectors are discretely divergence free, the reduced system
has no pressure: each step forms the dense R x R matrix

    G = 3/(2 dt) I + nu K_R + sum_k <a>_k T[k]

shared by all members, factorizes it once, and back-substitutes the J
right-hand sides.  All reduced operators are precomputed from the full
space; no full-space operation happens inside a step.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import fem
from .pod import RankError


class BasisConsistencyError(ValueError):
    """Basis vectors are not discretely divergence free."""


@dataclass
class ReducedOperators:
    """Precomputed Galerkin operators on the leading R POD modes."""

    K: np.ndarray        # (R, R) viscous Gram (grad phi_j, grad phi_i)
    T: np.ndarray        # (R, R, R); T[k, i, j] = b*(phi_k, phi_j, phi_i)
    Phi: np.ndarray      # (n_vel, R) basis columns, for lifting/projection
    MPhi: np.ndarray     # M @ Phi, for L2 projections and force reduction

    @property
    def R(self):
        return self.K.shape[0]

    def project(self, u):
        """Reduced coefficients of the L2 projection of a full-space field."""
        return self.MPhi.T @ u

    def lift(self, a):
        return self.Phi @ a

    def reduce_load(self, F):
        """(f, phi_i) for a full-space load vector F."""
        return self.Phi.T @ F


def reduce_operators(basis, disc, R, div_tol=1e-8):
    """Build reduced operators for the leading R modes of ``basis``.

    Verifies that every mode is discretely divergence free, which holds by
    construction when the snapshots came from the saddle-point solver.
    """
    if not 0 <= R <= basis.rank:
        raise RankError(f"requested R={R} exceeds basis rank {basis.rank}")
    Phi = basis.vectors[:, :R]
    div = disc.B @ Phi
    worst = float(np.abs(div).max()) if div.size else 0.0
    if worst > div_tol:
        raise BasisConsistencyError(
            f"basis mode violates discrete divergence-freeness by {worst:g}; "
            "snapshots did not come from a divergence-free solve")
    K = Phi.T @ (disc.A @ Phi)
    K = 0.5 * (K + K.T)
    T = np.empty((R, R, R))
    for k in range(R):
        N = fem.assemble_convection(disc.space, Phi[:, k])
        T[k] = Phi.T @ (N @ Phi)
        T[k] = 0.5 * (T[k] - T[k].T)   # exact skew-symmetry in (i, j)
    return ReducedOperators(K=K, T=T, Phi=Phi, MPhi=disc.M @ Phi)


@dataclass
class ReducedEnsembleState:
    a_n: np.ndarray      # (J, R)
    a_nm1: np.ndarray    # (J, R)
    n: int
    dt: float

    @property
    def J(self):
        return self.a_n.shape[0]


def rom_initialize(ops, u0, u1, dt):
    """Project the full-space initial fields (J, n_vel) at levels 0 and 1."""
    u0 = np.atleast_2d(u0)
    u1 = np.atleast_2d(u1)
    a0 = u0 @ ops.MPhi
    a1 = u1 @ ops.MPhi
    return ReducedEnsembleState(a_n=a1, a_nm1=a0, n=1, dt=dt)


def reduced_mean_fluct(state):
    extrap = 2.0 * state.a_n - state.a_nm1
    mean = extrap.mean(axis=0)
    return mean, extrap - mean


def rom_step(state, ops, f_red, nu):
    """One shared-matrix BDF2 step in reduced coordinates.

    ``f_red`` is the (J, R) array of reduced forces at t^{n+1}.
    """
    if state.n < 1:
        raise ValueError("rom_step requires two history levels (n >= 1)")
    dt = state.dt
    R = ops.R
    mean, fluct = reduced_mean_fluct(state)
    G = (1.5 / dt) * np.eye(R) + nu * ops.K \
        + np.einsum("k,kij->ij", mean, ops.T)
    try:
        lu, piv = scipy.linalg.lu_factor(G)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise RuntimeError(f"reduced step {state.n} is singular: {exc}") from exc
    extrap = 2.0 * state.a_n - state.a_nm1
    rhs = f_red + (0.5 / dt) * (4.0 * state.a_n - state.a_nm1)
    # fluctuation convection, tested against phi_i: sum_k a'_k T[k] @ extrap
    rhs -= np.einsum("jk,kil,jl->ji", fluct, ops.T, extrap)
    a_np1 = scipy.linalg.lu_solve((lu, piv), rhs.T).T
    if not np.all(np.isfinite(a_np1)):
        raise RuntimeError(f"non-finite reduced solution at step {state.n + 1}")
    return ReducedEnsembleState(a_n=a_np1, a_nm1=state.a_n.copy(),
                                n=state.n + 1, dt=dt)


@dataclass
class ReducedTrajectory:
    times: np.ndarray
    coeffs: np.ndarray      # (n_steps+1, J, R)
    energy: np.ndarray      # (n_steps+1, J), 0.5 |a|^2 by orthonormality
    enstrophy: np.ndarray   # (n_steps+1, J), from lifted fields

    def average_coeffs(self):
        return self.coeffs.mean(axis=1)


def rom_run(state0, ops, nu, reduced_loads, T, disc, a_initial):
    """Advance to time T recording coefficients and lifted diagnostics.

    ``reduced_loads(t)`` returns the (J, R) reduced forces; ``a_initial`` is
    the (J, R) level-0 coefficients for the record.
    """
    dt = state0.dt
    n_steps = int(round(T / dt))
    J, R = state0.a_n.shape
    coeffs = np.empty((n_steps + 1, J, R))
    energy = np.empty((n_steps + 1, J))
    enstrophy = np.empty((n_steps + 1, J))
    space = disc.space

    def record(n, a):
        coeffs[n] = a
        energy[n] = 0.5 * np.einsum("jr,jr->j", a, a)
        for j in range(J):
            lifted = ops.lift(a[j])
            enstrophy[n, j] = 0.5 * nu * fem.curl_sq_integral(space, lifted)

    record(0, np.atleast_2d(a_initial))
    record(1, state0.a_n)
    state = state0
    while state.n < n_steps:
        t_np1 = (state.n + 1) * dt
        state = rom_step(state, ops, reduced_loads(t_np1), nu)
        record(state.n, state.a_n)
    times = dt * np.arange(n_steps + 1)
    return state, ReducedTrajectory(times=times, coeffs=coeffs,
                                    energy=energy, enstrophy=enstrophy)
