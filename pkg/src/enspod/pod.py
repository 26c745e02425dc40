"""POD basis construction by the method of snapshots.

The correlation matrix of the snapshot columns in the velocity mass inner
product is diagonalized; basis vectors are recovered from the dominant
eigenpairs and are orthonormal in the M-weighted inner product.  The exact
eigenvalue tail-sum identities for the mean projection error (in L2 and in
the gradient seminorm) are provided for verification.
"""

from dataclasses import dataclass

import numpy as np


class RankError(ValueError):
    """Requested more basis vectors than the numerical rank supports."""


class BasisConsistencyError(ValueError):
    """Basis and snapshot set do not belong together."""


@dataclass
class SnapshotSet:
    """Snapshot matrix columns, member-major: all of member 1's time levels,
    then member 2's, and so on."""

    columns: np.ndarray   # (n_vel, J_S * (N_S + 1))
    n_members: int
    n_per_member: int     # N_S + 1
    dt: float
    stride: int

    def __post_init__(self):
        expected = self.n_members * self.n_per_member
        if self.columns.shape[1] != expected:
            raise ValueError(
                f"column count {self.columns.shape[1]} != "
                f"J_S*(N_S+1) = {expected}")

    @property
    def n_columns(self):
        return self.columns.shape[1]


def snapshot_set_from_lists(per_member, dt, stride):
    """Build a SnapshotSet from per-member lists of coefficient vectors."""
    cols = [np.asarray(c, dtype=float) for member in per_member for c in member]
    return SnapshotSet(columns=np.column_stack(cols),
                       n_members=len(per_member),
                       n_per_member=len(per_member[0]),
                       dt=dt, stride=stride)


def correlation_matrix(snapshots, M):
    """C = A^T M A, symmetrized to kill round-off asymmetry."""
    A = snapshots.columns if isinstance(snapshots, SnapshotSet) else snapshots
    C = A.T @ (M @ A)
    return 0.5 * (C + C.T)


@dataclass
class PodBasis:
    """R retained POD vectors plus the full correlation spectrum.

    ``eigenvalues`` holds the complete (descending) spectrum of the
    correlation matrix so that tail sums are exact; ``vectors`` holds only
    the ``rank`` columns above the cutoff.  ``grad_gram`` is the stiffness
    Gram matrix of the retained vectors, from which S_R and the gradient
    norms derive.
    """

    vectors: np.ndarray       # (n_vel, rank)
    eigenvalues: np.ndarray   # full spectrum, descending
    rank: int
    grad_gram: np.ndarray     # (rank, rank), (grad phi_i, grad phi_j)
    n_columns: int
    source_id: int            # id() of the snapshot column array

    @property
    def grad_norms(self):
        return np.sqrt(np.maximum(np.diag(self.grad_gram), 0.0))

    def reduced_stiffness(self, R, nu):
        """S_R = I + nu * (grad phi_i, grad phi_j) for the leading R modes."""
        return np.eye(R) + nu * self.grad_gram[:R, :R]


def build_basis(snapshots, M, A, R=None, cutoff=1e-12):
    """Solve the correlation eigenproblem and form the basis vectors.

    ``R`` requests the number of retained modes (default: full numerical
    rank).  Eigenvalues at or below ``cutoff * lambda_1`` are discarded
    before vectors are formed.  Eigenvector sign convention: the first
    component of each eigenvector whose magnitude exceeds 1e-12 of the
    largest is made positive.
    """
    cols = snapshots.columns if isinstance(snapshots, SnapshotSet) else snapshots
    C = correlation_matrix(cols, M)
    lam, vecs = np.linalg.eigh(C)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    vecs = vecs[:, order]
    rank = int(np.sum(lam > cutoff * max(lam[0], 0.0))) if lam.size else 0
    if R is None:
        R = rank
    if R > rank:
        raise RankError(f"requested {R} modes but numerical rank is {rank}")
    keep = vecs[:, :rank].copy()
    for i in range(rank):
        v = keep[:, i]
        nz = np.nonzero(np.abs(v) > 1e-12 * np.abs(v).max())[0][0]
        if v[nz] < 0:
            keep[:, i] = -v
    phi = (cols @ keep) / np.sqrt(lam[:rank])
    grad_gram = phi.T @ (A @ phi)
    grad_gram = 0.5 * (grad_gram + grad_gram.T)
    basis = PodBasis(vectors=phi[:, :R], eigenvalues=lam, rank=R,
                     grad_gram=grad_gram[:R, :R],
                     n_columns=cols.shape[1], source_id=id(cols))
    return basis


def project_l2(basis, M, u, R=None):
    """L2 projection onto the leading R modes.

    Returns (a, lifted) with a_i = (u, phi_i)_M and lifted = sum a_i phi_i.
    """
    Phi = basis.vectors if R is None else basis.vectors[:, :R]
    a = Phi.T @ (M @ u)
    return a, Phi @ a


def _check_source(snapshots, basis):
    cols = snapshots.columns if isinstance(snapshots, SnapshotSet) else snapshots
    if cols.shape[1] != basis.n_columns:
        raise BasisConsistencyError(
            "basis was not built from this snapshot set")
    return cols


def tail_identity_l2(snapshots, basis, M, R):
    """Both sides of the L2 tail identity.

    lhs: mean squared L2 projection error of the snapshots onto the leading
    R modes; rhs: the eigenvalue tail sum divided by the column count.
    They are equal in exact arithmetic.
    """
    cols = _check_source(snapshots, basis)
    count = cols.shape[1]
    Phi = basis.vectors[:, :R]
    Mcols = M @ cols
    coeffs = Phi.T @ Mcols if R > 0 else np.zeros((0, count))
    resid = cols - Phi @ coeffs if R > 0 else cols
    lhs = float(np.einsum("ij,ij->", resid, M @ resid)) / count
    # trailing eigenvalues are >= 0 in exact arithmetic; clip round-off noise
    rhs = float(np.sum(np.maximum(basis.eigenvalues[R:], 0.0))) / count
    return lhs, rhs


def tail_identity_h1(snapshots, basis, M, A, R):
    """Both sides of the gradient-seminorm tail identity.

    rhs sums lambda_i * |grad phi_i|^2 over retained modes beyond R, which
    requires the basis to have been built at (numerically) full rank.
    """
    cols = _check_source(snapshots, basis)
    count = cols.shape[1]
    Phi = basis.vectors[:, :R]
    coeffs = Phi.T @ (M @ cols) if R > 0 else np.zeros((0, count))
    resid = cols - Phi @ coeffs if R > 0 else cols
    lhs = float(np.einsum("ij,ij->", resid, A @ resid)) / count
    gn2 = np.diag(basis.grad_gram)
    rhs = float(np.sum(basis.eigenvalues[R:basis.rank] * gn2[R:])) / count
    return lhs, rhs


def stiffness_spectral_norm(basis, R, nu, tol=1e-8, max_iters=10000):
    """Spectral norm of S_R by symmetric power iteration."""
    S = basis.reduced_stiffness(R, nu)
    if R == 1:
        return float(abs(S[0, 0]))
    x = np.ones(R) / np.sqrt(R)
    prev = 0.0
    for _ in range(max_iters):
        y = S @ x
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            return 0.0
        x = y / lam
        if abs(lam - prev) <= tol * lam:
            return lam
        prev = lam
    raise RuntimeError("power iteration failed to converge")
