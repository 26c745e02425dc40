"""End-to-end experiment orchestration for the offset-circles study and the
temporal convergence check.

The pipeline mirrors the experiment protocol: perturbed initial conditions
come from steady Stokes solves with force f + eps * trig perturbation, the
time evolution of every member is driven by the unperturbed rotational
force, snapshots feed the POD build, and the reduced ensemble is compared
against the full ensemble average in the relative L2(0,T;L2) norm.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import diagnostics, ensemble, fem, forces, io, mesh as meshmod, pod, rom


class PipelineError(RuntimeError):
    pass


def resolve_mesh(spec_str):
    """'data:<name>', 'square:<n>', or a filesystem path."""
    if spec_str.startswith("data:"):
        from importlib.resources import files
        path = files("enspod").joinpath(f"data/{spec_str[5:]}.msh2d")
        return meshmod.load_mesh(str(path))
    if spec_str.startswith("square:"):
        return meshmod.build_structured_square(int(spec_str.split(":", 1)[1]))
    return meshmod.load_mesh(spec_str)


@dataclass
class FullRunResult:
    state1: ensemble.EnsembleState       # bootstrapped state (holds u^{j,1})
    record: ensemble.TrajectoryRecord
    snapshots: pod.SnapshotSet
    initial: np.ndarray                  # (J, n_vel)


class Experiment:
    """Caches the mesh/space/operators for one configuration."""

    def __init__(self, cfg):
        cfg.validate()
        self.cfg = cfg
        self.mesh = resolve_mesh(cfg.mesh)
        self.space = fem.TaylorHoodSpace(self.mesh)
        self.disc = fem.Discretization(self.space)
        if cfg.force == "offset_circles":
            self.base_force = forces.rotational_force
        elif cfg.force == "none":
            self.base_force = lambda x, y: (0.0 * x, 0.0 * x)
        else:
            raise PipelineError(f"unknown force id '{cfg.force}'")

    def initial_conditions(self, eps_values=None):
        """Steady Stokes solve per perturbation value."""
        eps_values = self.cfg.eps if eps_values is None else eps_values
        u0 = np.empty((len(eps_values), self.space.n_vel))
        for j, eps in enumerate(eps_values):
            f_eps = forces.perturbed_force(eps) if eps != 0.0 else self.base_force
            u0[j], _ = fem.solve_steady_stokes(self.disc, f_eps, self.cfg.nu)
        return u0

    def run_full(self, u0=None, T=None):
        cfg = self.cfg
        if u0 is None:
            u0 = self.initial_conditions()
        T = cfg.T if T is None else T
        loads = forces.StaticForceModel(self.space, self.base_force, u0.shape[0])
        state1 = ensemble.bootstrap(self.disc, u0, cfg.dt, cfg.nu, loads)
        u1 = state1.u_n.copy()
        state, record = ensemble.run(self.disc, state1, cfg.nu, loads, T,
                                     stride=cfg.stride, history=u0)
        snaps = pod.snapshot_set_from_lists(record.snapshots, cfg.dt, cfg.stride)
        boot = ensemble.EnsembleState(u_n=u1, u_nm1=u0.copy(), n=1, dt=cfg.dt)
        return FullRunResult(state1=boot, record=record, snapshots=snaps,
                             initial=u0)

    def build_pod(self, snapshots, R=None):
        return pod.build_basis(snapshots, self.disc.M, self.disc.A, R=R)

    def run_rom(self, basis, R, u0, u1, T=None):
        """Reduced run initialized from full-space fields at levels 0 and 1.

        Returns (trajectory, stability rows, bound-check worst violation,
        condition-satisfied flag).
        """
        cfg = self.cfg
        T = cfg.T if T is None else T
        ops = rom.reduce_operators(basis, self.disc, R)
        state0 = rom.rom_initialize(ops, u0, u1, cfg.dt)
        f_red = ops.reduce_load(fem.load_vector(self.space, self.base_force))
        J = state0.J
        f_red_all = np.tile(f_red, (J, 1))
        _, traj = rom.rom_run(state0, ops, cfg.nu, lambda t: f_red_all, T,
                              self.disc, state0.a_nm1)
        stab = self._stability(traj, ops, basis, R)
        return traj, ops, stab

    def _stability(self, traj, ops, basis, R):
        """Indicators per step, plus the summed energy-bound check."""
        cfg = self.cfg
        s_norm = pod.stiffness_spectral_norm(basis, R, cfg.nu)
        coeffs = traj.coeffs                       # (N+1, J, R)
        n_levels, J, _ = coeffs.shape
        rows = []
        all_ok41 = True
        for n in range(1, n_levels - 1):           # fluctuations used at step n
            extrap = 2.0 * coeffs[n] - coeffs[n - 1]
            fluct = extrap - extrap.mean(axis=0)
            for j in range(J):
                grad2 = float(fluct[j] @ (ops.K @ fluct[j]))
                l3 = fem.norms(self.space, ops.lift(fluct[j]))["l3"]
                ind41 = np.sqrt(s_norm) * (cfg.dt / cfg.nu) * grad2
                ind42 = diagnostics.C_SE ** 2 * s_norm * (cfg.dt / cfg.nu) * l3 ** 2
                ok41 = ind41 <= cfg.threshold_41
                ok42 = ind42 <= cfg.threshold_42
                all_ok41 = all_ok41 and ok41
                rows.append((n, j, ind41, ind42, int(ok41), int(ok42)))

        dual = diagnostics.DualNormSolver(self.disc)
        f_dual = dual(fem.load_vector(self.space, self.base_force))
        worst = -np.inf
        for j in range(J):
            energies = np.empty((n_levels, 2))
            grad_sq = np.empty(n_levels)
            for n in range(n_levels):
                a = coeffs[n, j]
                energies[n, 0] = float(a @ a)
                grad_sq[n] = float(a @ (ops.K @ a))
                b = 2.0 * a - coeffs[max(n - 1, 0), j]
                energies[n, 1] = float(b @ b)
            dual_sq = np.full(n_levels, f_dual ** 2)
            worst = max(worst, diagnostics.stability_bound_check(
                energies, grad_sq, dual_sq, cfg.dt, cfg.nu))
        return {"rows": rows, "condition_ok": all_ok41, "worst_violation": worst,
                "s_norm": s_norm}

    def rom_errors(self, basis, full, R_list, T=None):
        """Relative L2(0,T;L2) error of the ROM ensemble average per R."""
        cfg = self.cfg
        out = {}
        for R in R_list:
            traj, ops, stab = self.run_rom(basis, R, full.initial,
                                           full.state1.u_n, T=T)
            lifted = traj.average_coeffs() @ ops.Phi.T
            err = diagnostics.relative_error_l2t(
                self.disc, full.record.averages, lifted, cfg.dt)
            out[R] = {"error": err, "traj": traj, "stability": stab, "ops": ops}
        return out


# ---------------------------------------------------------------------------
# CLI-facing commands (file-based)

def _timeseries_rows(record):
    rows = []
    n_levels, J = record.energy.shape
    for n in range(n_levels):
        for j in range(J):
            rows.append((n, record.times[n], j, record.energy[n, j],
                         record.enstrophy[n, j]))
        rows.append((n, record.times[n], "ave", record.energy[n].mean(),
                     record.enstrophy[n].mean()))
    return rows


def cmd_snapshots(cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    exp = Experiment(cfg)
    full = exp.run_full()
    io.save_snapshots(full.snapshots, os.path.join(out_dir, "snapshots.bin"))
    io.save_fields(full.record.averages, os.path.join(out_dir, "uave_full.bin"))
    io.save_fields(full.state1.u_nm1, os.path.join(out_dir, "u_level0.bin"))
    io.save_fields(full.state1.u_n, os.path.join(out_dir, "u_level1.bin"))
    io.write_csv(os.path.join(out_dir, "timeseries.csv"),
                 ["step", "time", "member", "energy", "enstrophy"],
                 _timeseries_rows(full.record))
    return full


def cmd_pod(cfg, out_dir):
    snaps = io.load_snapshots(os.path.join(out_dir, "snapshots.bin"))
    exp = Experiment(cfg)
    basis = exp.build_pod(snaps)
    R_check = min(max(cfg.R_list), basis.rank)
    lhs, rhs = pod.tail_identity_l2(snaps, basis, exp.disc.M, R_check)
    # relative check with an absolute floor for round-off-level tails
    if abs(lhs - rhs) > 1e-6 * rhs + 1e-13 * float(basis.eigenvalues[0]):
        raise PipelineError(
            f"POD tail-sum self-check failed at R={R_check}: "
            f"lhs={lhs:.6e} rhs={rhs:.6e}")
    io.save_basis(basis, os.path.join(out_dir, "basis.bin"))
    lam = basis.eigenvalues
    total = float(np.sum(lam))
    cum = np.cumsum(lam) / total if total > 0 else np.zeros_like(lam)
    io.write_csv(os.path.join(out_dir, "eigenvalues.csv"),
                 ["i", "lambda", "cumfrac"],
                 [(i + 1, float(lam[i]), float(cum[i])) for i in range(len(lam))])
    return basis


def cmd_rom(cfg, out_dir, eps_values=None):
    """Run the reduced ensemble for every R; if eps_values is given the
    initial conditions are recomputed (extrapolatory mode) along with a
    fresh full reference."""
    exp = Experiment(cfg)
    basis = io.load_basis(os.path.join(out_dir, "basis.bin"))
    if eps_values is None:
        u0 = io.load_fields(os.path.join(out_dir, "u_level0.bin"))
        u1 = io.load_fields(os.path.join(out_dir, "u_level1.bin"))
        averages = io.load_fields(os.path.join(out_dir, "uave_full.bin"))
        full = FullRunResult(
            state1=ensemble.EnsembleState(u_n=u1, u_nm1=u0, n=1, dt=cfg.dt),
            record=ensemble.TrajectoryRecord(
                times=cfg.dt * np.arange(averages.shape[0]),
                energy=np.zeros((averages.shape[0], u0.shape[0])),
                enstrophy=np.zeros((averages.shape[0], u0.shape[0])),
                averages=averages),
            snapshots=None, initial=u0)
    else:
        u0 = exp.initial_conditions(eps_values)
        full = exp.run_full(u0=u0)
    results = exp.rom_errors(basis, full, cfg.R_list)
    io.write_csv(os.path.join(out_dir, "errors.csv"), ["R", "rel_error"],
                 [(R, results[R]["error"]) for R in cfg.R_list])
    stab_rows = []
    Rmax = max(cfg.R_list)
    for n, j, i41, i42, ok41, ok42 in results[Rmax]["stability"]["rows"]:
        stab_rows.append((n, j, i41, i42, ok41, ok42))
    io.write_csv(os.path.join(out_dir, "stability.csv"),
                 ["step", "member", "ind41", "ind42", "ok41", "ok42"], stab_rows)
    traj = results[Rmax]["traj"]
    rec_like = ensemble.TrajectoryRecord(times=traj.times, energy=traj.energy,
                                         enstrophy=traj.enstrophy,
                                         averages=np.zeros((1, 1)))
    io.write_csv(os.path.join(out_dir, "timeseries_rom.csv"),
                 ["step", "time", "member", "energy", "enstrophy"],
                 _timeseries_rows(rec_like))
    return results


def cmd_compare(cfg, out_dir):
    """Re-derive errors.csv from stored trajectories (data-mining mode)."""
    return cmd_rom(cfg, out_dir, eps_values=None)


def cmd_convergence(cfg, out_dir=None, dts=(0.02, 0.01, 0.005), T=0.2,
                    ref_refine=4, n_cells=32):
    """Temporal convergence of the full ensemble scheme on a manufactured
    flow, measured against a small-step reference on the same mesh.

    Returns rows (dt, final-time L2 error, L2(0,T;L2) error) plus observed
    rates between consecutive dt halvings.
    """
    m = meshmod.build_structured_square(n_cells)
    space = fem.TaylorHoodSpace(m)
    disc = fem.Discretization(space)
    nu = cfg.nu
    velocity, force = forces.manufactured_flow(nu)

    u0_exact = fem.interpolate(space, lambda x, y: velocity(x, y, 0.0))
    u0 = np.stack([u0_exact, (1.0 + 1e-3) * u0_exact])
    J = u0.shape[0]

    load_cache = {}

    def loads(t):
        key = round(t, 12)
        if key not in load_cache:
            F = fem.load_vector(space, lambda x, y: force(x, y, t))
            load_cache[key] = np.tile(F, (J, 1))
        return load_cache[key]

    def run_at(dt):
        state1 = ensemble.bootstrap(disc, u0, dt, nu, loads)
        _, rec = ensemble.run(disc, state1, nu, loads, T, stride=1, history=u0)
        return rec

    dt_ref = min(dts) / ref_refine
    ref = run_at(dt_ref)
    sub = int(round(1.0 / dt_ref))  # reference steps per unit time

    rows = []
    for dt in dts:
        rec = run_at(dt)
        skip = int(round(dt / dt_ref))
        err_sq = []
        for n in range(rec.averages.shape[0]):
            d = rec.averages[n] - ref.averages[n * skip]
            err_sq.append(float(d @ (disc.M @ d)))
        final = np.sqrt(err_sq[-1])
        l2t = diagnostics.l2t_norm(np.array(err_sq), dt)
        rows.append((dt, final, l2t))
    rates = []
    for k in range(1, len(rows)):
        r_final = np.log2(rows[k - 1][1] / rows[k][1]) / np.log2(
            rows[k - 1][0] / rows[k][0])
        rates.append(float(r_final))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        io.write_csv(os.path.join(out_dir, "convergence.csv"),
                     ["dt", "err_final_l2", "err_l2t"], rows)
    return rows, rates


def cmd_mesh_gen(cfg, out_dir):
    """Materialize the configured mesh as a .msh2d file."""
    os.makedirs(out_dir, exist_ok=True)
    m = resolve_mesh(cfg.mesh)
    path = os.path.join(out_dir, "mesh.msh2d")
    meshmod.save_mesh(m, path)
    return path
