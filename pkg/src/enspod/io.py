"""Persistence: snapshot and basis binaries, CSV reports.

Binary layouts are little-endian.  Snapshot file: 8-byte magic ``ENSPOD1\\0``,
int64 n_vel, int64 J_S, int64 N_S+1, float64 dt, int64 stride, then the
snapshot columns member-major (each column n_vel float64).  Basis file:
magic ``ENSPODB\\0``, int64 n_vel, int64 rank, int64 n_eigenvalues, the full
eigenvalue spectrum, the rank x rank gradient Gram matrix (row-major), then
the basis vectors column-major.
"""

import numpy as np

from .pod import PodBasis, SnapshotSet

SNAPSHOT_MAGIC = b"ENSPOD1\x00"
BASIS_MAGIC = b"ENSPODB\x00"


class FileFormatError(ValueError):
    pass


def _write_i64(fh, *vals):
    np.array(vals, dtype="<i8").tofile(fh)


def _read_i64(fh, n):
    out = np.fromfile(fh, dtype="<i8", count=n)
    if out.size != n:
        raise FileFormatError("truncated file")
    return [int(v) for v in out]


def save_snapshots(snapshots, path):
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        _write_i64(fh, snapshots.columns.shape[0], snapshots.n_members,
                   snapshots.n_per_member)
        np.array([snapshots.dt], dtype="<f8").tofile(fh)
        _write_i64(fh, snapshots.stride)
        np.ascontiguousarray(snapshots.columns.T, dtype="<f8").tofile(fh)


def load_snapshots(path):
    with open(path, "rb") as fh:
        if fh.read(8) != SNAPSHOT_MAGIC:
            raise FileFormatError(f"{path}: not a snapshot file")
        n_vel, J, npm = _read_i64(fh, 3)
        dt_arr = np.fromfile(fh, dtype="<f8", count=1)
        (stride,) = _read_i64(fh, 1)
        data = np.fromfile(fh, dtype="<f8", count=n_vel * J * npm)
        if data.size != n_vel * J * npm:
            raise FileFormatError(f"{path}: truncated snapshot data")
    cols = data.reshape(J * npm, n_vel).T.copy()
    return SnapshotSet(columns=cols, n_members=J, n_per_member=npm,
                       dt=float(dt_arr[0]), stride=stride)


def save_basis(basis, path):
    with open(path, "wb") as fh:
        fh.write(BASIS_MAGIC)
        _write_i64(fh, basis.vectors.shape[0], basis.rank,
                   len(basis.eigenvalues), basis.n_columns)
        np.ascontiguousarray(basis.eigenvalues, dtype="<f8").tofile(fh)
        np.ascontiguousarray(basis.grad_gram, dtype="<f8").tofile(fh)
        np.ascontiguousarray(basis.vectors.T, dtype="<f8").tofile(fh)


def load_basis(path):
    with open(path, "rb") as fh:
        if fh.read(8) != BASIS_MAGIC:
            raise FileFormatError(f"{path}: not a basis file")
        n_vel, rank, n_lam, n_cols = _read_i64(fh, 4)
        lam = np.fromfile(fh, dtype="<f8", count=n_lam)
        gram = np.fromfile(fh, dtype="<f8", count=rank * rank).reshape(rank, rank)
        vecs = np.fromfile(fh, dtype="<f8", count=n_vel * rank)
        if vecs.size != n_vel * rank:
            raise FileFormatError(f"{path}: truncated basis data")
    return PodBasis(vectors=vecs.reshape(rank, n_vel).T.copy(),
                    eigenvalues=lam, rank=rank, grad_gram=gram,
                    n_columns=n_cols, source_id=-1)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    """CSV with a fixed header and shortest-round-trip float formatting."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def save_fields(fields, path):
    """Raw little-endian dump of an (n, m) float array with a small header."""
    with open(path, "wb") as fh:
        fh.write(b"ENSPODF\x00")
        _write_i64(fh, fields.shape[0], fields.shape[1])
        np.ascontiguousarray(fields, dtype="<f8").tofile(fh)


def load_fields(path):
    with open(path, "rb") as fh:
        if fh.read(8) != b"ENSPODF\x00":
            raise FileFormatError(f"{path}: not a field trajectory file")
        n, m = _read_i64(fh, 2)
        data = np.fromfile(fh, dtype="<f8", count=n * m)
        if data.size != n * m:
            raise FileFormatError(f"{path}: truncated data")
    return data.reshape(n, m)
