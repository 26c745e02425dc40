"""Command-line entry point.

Subcommands: mesh-gen, snapshots, pod, rom, compare, convergence.  Each takes
``--config <file>`` and ``--out <dir>`` (``--out`` overrides the configured
output directory).  Exit codes: 0 success, 2 invalid input or configuration,
3 numerical failure (divergence, singular system, rank deficiency).
"""

import argparse
import sys

import numpy as np

from . import pipeline
from .config import ConfigError, ExperimentConfig, load_config
from .ensemble import BootstrapError
from .fem import SolverError
from .io import FileFormatError
from .mesh import MeshFormatError, MeshValidationError
from .pod import BasisConsistencyError, RankError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

_INVALID = (ConfigError, MeshFormatError, MeshValidationError,
            FileFormatError, FileNotFoundError, pipeline.PipelineError)
_NUMERICAL = (SolverError, BootstrapError, RankError, BasisConsistencyError,
              np.linalg.LinAlgError)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="enspod",
        description="Ensemble time stepping and reduced-order modelling for "
                    "incompressible flow.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("mesh-gen", "write the configured mesh to <out>/mesh.msh2d"),
        ("snapshots", "run the full ensemble and store snapshots"),
        ("pod", "build the POD basis from stored snapshots"),
        ("rom", "run the reduced ensemble for every configured R"),
        ("compare", "recompute rom errors from stored data"),
        ("convergence", "temporal convergence study on a manufactured flow"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None,
                       help="configuration file (defaults apply if omitted)")
        p.add_argument("--out", default=None,
                       help="output directory (overrides the config)")
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    out = args.out if args.out else cfg.out_dir
    return cfg, out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg, out = _load(args)
        if args.command == "mesh-gen":
            path = pipeline.cmd_mesh_gen(cfg, out)
            print(f"wrote {path}")
        elif args.command == "snapshots":
            full = pipeline.cmd_snapshots(cfg, out)
            print(f"ran {full.record.times.shape[0] - 1} steps, "
                  f"{len(full.record.snapshot_steps)} snapshot levels per member")
        elif args.command == "pod":
            basis = pipeline.cmd_pod(cfg, out)
            print(f"basis rank {basis.rank} from {basis.n_columns} snapshots")
        elif args.command == "rom":
            results = pipeline.cmd_rom(cfg, out)
            for R in cfg.R_list:
                print(f"R={R}: rel_error={results[R]['error']:.6e}")
        elif args.command == "compare":
            results = pipeline.cmd_compare(cfg, out)
            for R in cfg.R_list:
                print(f"R={R}: rel_error={results[R]['error']:.6e}")
        elif args.command == "convergence":
            rows, rates = pipeline.cmd_convergence(cfg, out)
            for dt, final, l2t in rows:
                print(f"dt={dt:g}: final_l2={final:.6e} l2t={l2t:.6e}")
            for r in rates:
                print(f"rate={r:.3f}")
    except _INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
