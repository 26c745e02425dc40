"""Second-order BDF2 ensemble time stepping in the full velocity space.

All J ensemble members share one implicit coefficient matrix per step,

    S^n = 3/(2 dt) M + N(<u>^n) + nu A,

factorized once, with member-specific right-hand sides carrying the BDF2
history and the explicit fluctuation convection term.  The first step is
bootstrapped with one Crank-Nicolson step per member (two Picard iterations
on the convecting field).
"""

from dataclasses import dataclass, field

import numpy as np

from . import fem
from .fem import SaddleSolver, SolverError


class BootstrapError(RuntimeError):
    """Crank-Nicolson bootstrap failed to converge."""


@dataclass
class EnsembleState:
    """Velocity coefficients of J members at two time levels."""

    u_n: np.ndarray      # (J, n_vel), level n
    u_nm1: np.ndarray    # (J, n_vel), level n-1
    n: int
    dt: float

    @property
    def J(self):
        return self.u_n.shape[0]


def compute_mean_fluct(state):
    """Extrapolated ensemble mean and per-member fluctuations."""
    extrap = 2.0 * state.u_n - state.u_nm1
    mean = extrap.mean(axis=0)
    return mean, extrap - mean


def bootstrap(disc, u0, dt, nu, loads, t0=0.0, picard_iters=2):
    """One Crank-Nicolson step per member to produce the state at n=1.

    ``u0`` is (J, n_vel); ``loads(t)`` returns the (J, n_vel) load vectors.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    u0 = np.atleast_2d(np.asarray(u0, dtype=float))
    J = u0.shape[0]
    f_half = 0.5 * (loads(t0) + loads(t0 + dt))
    M, A = disc.M, disc.A
    u1 = np.empty_like(u0)
    for j in range(J):
        w = u0[j]
        uj = u0[j]
        prev_res = None
        for _ in range(picard_iters):
            N = fem.assemble_convection(disc.space, w)
            S = (1.0 / dt) * M + 0.5 * N + 0.5 * nu * A
            F = f_half[j] + (1.0 / dt) * (M @ u0[j]) \
                - 0.5 * (N @ u0[j]) - 0.5 * nu * (A @ u0[j])
            solver = SaddleSolver(disc, S)
            uj, _ = solver.solve(F)
            res = float(np.linalg.norm(uj - 2.0 * w + u0[j]))
            if prev_res is not None and res > 10.0 * prev_res + 1e-12:
                raise BootstrapError(
                    f"Picard residual grew from {prev_res:g} to {res:g} "
                    f"for member {j}")
            prev_res = res
            w = 0.5 * (u0[j] + uj)
        u1[j] = uj
    return EnsembleState(u_n=u1, u_nm1=u0.copy(), n=1, dt=dt)


def step(disc, state, loads_np1, nu):
    """Advance the ensemble one BDF2 step using the shared factorization.

    ``loads_np1`` is the (J, n_vel) array of load vectors at t^{n+1}.
    Returns the new state.
    """
    if state.n < 1:
        raise ValueError("step requires two history levels (n >= 1)")
    dt = state.dt
    mean, fluct = compute_mean_fluct(state)
    S = (1.5 / dt) * disc.M + fem.assemble_convection(disc.space, mean) \
        + nu * disc.A
    try:
        solver = SaddleSolver(disc, S)
    except SolverError as exc:
        raise SolverError(f"factorization failed at step {state.n}: {exc}") from exc
    extrap = 2.0 * state.u_n - state.u_nm1
    hist = disc.M @ (4.0 * state.u_n - state.u_nm1).T
    u_np1 = np.empty_like(state.u_n)
    for j in range(state.J):
        F = loads_np1[j] + (0.5 / dt) * hist[:, j] \
            - fem.convection_rhs(disc.space, fluct[j], extrap[j])
        u_np1[j], _ = solver.solve(F)
    if not np.all(np.isfinite(u_np1)):
        raise SolverError(f"non-finite velocity at step {state.n + 1}")
    return EnsembleState(u_n=u_np1, u_nm1=state.u_n.copy(), n=state.n + 1, dt=dt)


@dataclass
class TrajectoryRecord:
    """Output of a full ensemble run."""

    times: np.ndarray                 # recorded step times (every step)
    energy: np.ndarray                # (n_steps+1, J)
    enstrophy: np.ndarray             # (n_steps+1, J)
    averages: np.ndarray              # (n_steps+1, n_vel) plain member average
    snapshots: list = field(default_factory=list)   # per member: list of columns
    snapshot_steps: list = field(default_factory=list)


def run(disc, state0, nu, loads, T, stride=1, history=None):
    """Advance from the bootstrapped state to time T, recording snapshots
    every ``stride`` steps (step 0 included) plus energy/enstrophy series.

    ``history`` must hold the initial fields (J, n_vel) at n=0; they are the
    ``u_nm1`` level of ``state0``.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    dt = state0.dt
    n_steps = int(round(T / dt))
    if n_steps < 1:
        raise ValueError("T must cover at least one step")
    J = state0.J
    u0 = state0.u_nm1 if history is None else history

    space = disc.space

    def diag(u):
        e = 0.5 * float(u @ (disc.M @ u))
        w = 0.5 * nu * fem.curl_sq_integral(space, u)
        return e, w

    energy = np.empty((n_steps + 1, J))
    enstrophy = np.empty((n_steps + 1, J))
    averages = np.empty((n_steps + 1, space.n_vel))
    snapshots = [[] for _ in range(J)]
    snapshot_steps = []

    def record(n, U):
        for j in range(J):
            energy[n, j], enstrophy[n, j] = diag(U[j])
        averages[n] = U.mean(axis=0)
        if n % stride == 0:
            snapshot_steps.append(n)
            for j in range(J):
                snapshots[j].append(U[j].copy())

    record(0, u0)
    record(1, state0.u_n)
    state = state0
    while state.n < n_steps:
        t_np1 = (state.n + 1) * dt
        state = step(disc, state, loads(t_np1), nu)
        record(state.n, state.u_n)

    times = dt * np.arange(n_steps + 1)
    rec = TrajectoryRecord(times=times, energy=energy, enstrophy=enstrophy,
                           averages=averages, snapshots=snapshots,
                           snapshot_steps=snapshot_steps)
    return state, rec
