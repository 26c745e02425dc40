import numpy as np
import pytest

from enspod import io
from enspod.pod import PodBasis, SnapshotSet


def test_snapshot_roundtrip(tmp_path, rng):
    cols = rng.standard_normal((40, 12))
    snaps = SnapshotSet(columns=cols, n_members=3, n_per_member=4,
                        dt=0.025, stride=5)
    path = tmp_path / "s.bin"
    io.save_snapshots(snaps, str(path))
    back = io.load_snapshots(str(path))
    assert np.array_equal(back.columns, cols)
    assert back.n_members == 3
    assert back.n_per_member == 4
    assert back.dt == 0.025
    assert back.stride == 5


def test_basis_roundtrip(tmp_path, rng):
    vecs = rng.standard_normal((30, 4))
    lam = np.sort(rng.random(9))[::-1]
    gram = rng.standard_normal((4, 4))
    gram = gram + gram.T
    basis = PodBasis(vectors=vecs, eigenvalues=lam, rank=4, grad_gram=gram,
                     n_columns=9, source_id=0)
    path = tmp_path / "b.bin"
    io.save_basis(basis, str(path))
    back = io.load_basis(str(path))
    assert np.array_equal(back.vectors, vecs)
    assert np.array_equal(back.eigenvalues, lam)
    assert np.array_equal(back.grad_gram, gram)
    assert back.rank == 4
    assert back.n_columns == 9


def test_fields_roundtrip(tmp_path, rng):
    arr = rng.standard_normal((7, 13))
    path = tmp_path / "f.bin"
    io.save_fields(arr, str(path))
    assert np.array_equal(io.load_fields(str(path)), arr)


def test_magic_mismatch(tmp_path, rng):
    arr = rng.standard_normal((2, 2))
    path = tmp_path / "f.bin"
    io.save_fields(arr, str(path))
    with pytest.raises(io.FileFormatError):
        io.load_snapshots(str(path))
    with pytest.raises(io.FileFormatError):
        io.load_basis(str(path))


def test_truncated_file(tmp_path, rng):
    cols = rng.standard_normal((20, 6))
    snaps = SnapshotSet(columns=cols, n_members=2, n_per_member=3,
                        dt=0.01, stride=1)
    path = tmp_path / "s.bin"
    io.save_snapshots(snaps, str(path))
    data = path.read_bytes()
    path.write_bytes(data[:len(data) - 16])
    with pytest.raises(io.FileFormatError):
        io.load_snapshots(str(path))


def test_csv_floats_roundtrip(tmp_path):
    path = tmp_path / "t.csv"
    io.write_csv(str(path), ["i", "x"], [(1, 0.1 + 0.2), (2, 1.0 / 3.0)])
    lines = path.read_text().splitlines()
    assert lines[0] == "i,x"
    assert float(lines[1].split(",")[1]) == 0.1 + 0.2
    assert float(lines[2].split(",")[1]) == 1.0 / 3.0
