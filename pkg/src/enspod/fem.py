"""Taylor-Hood P2-P1 finite elements on triangle meshes.

Velocity is vector P2 (vertex + edge-midpoint nodes, two components, blocked
layout: component 0 dofs first), pressure is P1 on vertices.  All forms are
integrated with a symmetric degree-5 rule, which is exact for every
polynomial integrand that occurs (the trilinear form on P2 fields has degree
5); Lp norms and analytic loads use a high-order collapsed Gauss rule.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import quadrature


class SolverError(RuntimeError):
    """A linear solve failed (singular or badly scaled system)."""


# ---------------------------------------------------------------------------
# reference element

def p2_values(pts):
    """P2 basis values at reference points (nq, 2) -> (nq, 6).

    Node order: vertices 0, 1, 2 then midpoints of edges opposite each
    vertex (m0 between v1-v2, m1 between v2-v0, m2 between v0-v1).
    """
    xi, eta = pts[:, 0], pts[:, 1]
    l1 = 1.0 - xi - eta
    l2, l3 = xi, eta
    return np.column_stack([
        l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
        4 * l2 * l3, 4 * l3 * l1, 4 * l1 * l2,
    ])


def p2_grads(pts):
    """P2 basis gradients wrt (xi, eta): (nq, 6, 2)."""
    xi, eta = pts[:, 0], pts[:, 1]
    l1 = 1.0 - xi - eta
    l2, l3 = xi, eta
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # (3, 2)
    g = np.empty((pts.shape[0], 6, 2))
    for d in range(2):
        g[:, 0, d] = (4 * l1 - 1) * dl[0, d]
        g[:, 1, d] = (4 * l2 - 1) * dl[1, d]
        g[:, 2, d] = (4 * l3 - 1) * dl[2, d]
        g[:, 3, d] = 4 * (l3 * dl[1, d] + l2 * dl[2, d])
        g[:, 4, d] = 4 * (l1 * dl[2, d] + l3 * dl[0, d])
        g[:, 5, d] = 4 * (l2 * dl[0, d] + l1 * dl[1, d])
    return g


def p1_values(pts):
    xi, eta = pts[:, 0], pts[:, 1]
    return np.column_stack([1.0 - xi - eta, xi, eta])


# ---------------------------------------------------------------------------
# function space

class TaylorHoodSpace:
    """P2 velocity / P1 pressure dof maps with quadrature geometry.

    Velocity dof layout: dof = comp * n_scalar + node, where nodes are the
    mesh vertices followed by edge midpoints.  ``no_slip_markers`` selects
    which boundary components receive homogeneous Dirichlet conditions
    (default: all of them).
    """

    def __init__(self, mesh, no_slip_markers=None):
        self.mesh = mesh
        nv = mesh.n_vertices
        tris = mesh.triangles

        edge_index = {}
        tri_edges = np.empty((len(tris), 3), dtype=np.int64)
        for t, tri in enumerate(tris):
            for k in range(3):
                i, j = int(tri[(k + 1) % 3]), int(tri[(k + 2) % 3])
                key = (min(i, j), max(i, j))
                if key not in edge_index:
                    edge_index[key] = len(edge_index)
                tri_edges[t, k] = edge_index[key]
        self.n_edges = len(edge_index)
        self.n_scalar = nv + self.n_edges
        self.n_vel = 2 * self.n_scalar
        self.n_pr = nv

        # P2 node coordinates: vertices then edge midpoints
        coords = np.empty((self.n_scalar, 2))
        coords[:nv] = mesh.vertices
        for (i, j), e in edge_index.items():
            coords[nv + e] = 0.5 * (mesh.vertices[i] + mesh.vertices[j])
        self.node_coords = coords

        self.tri_nodes = np.concatenate([tris, nv + tri_edges], axis=1)  # (nt, 6)

        # geometry
        a = mesh.vertices[tris[:, 0]]
        b = mesh.vertices[tris[:, 1]]
        c = mesh.vertices[tris[:, 2]]
        J = np.empty((len(tris), 2, 2))
        J[:, :, 0] = b - a
        J[:, :, 1] = c - a
        self.jac = J
        self.detj = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1]
        inv[:, 0, 1] = -J[:, 0, 1]
        inv[:, 1, 0] = -J[:, 1, 0]
        inv[:, 1, 1] = J[:, 0, 0]
        self.jinv = inv / self.detj[:, None, None]
        self.tri_origin = a

        # Dirichlet velocity dofs: all P2 nodes on no-slip boundary markers
        if no_slip_markers is None:
            markers = set(int(m) for m in mesh.boundary_markers)
        else:
            markers = set(int(m) for m in no_slip_markers)
        nodes = set()
        for (i, j), m in zip(mesh.boundary_edges, mesh.boundary_markers):
            if int(m) in markers:
                nodes.add(int(i))
                nodes.add(int(j))
                key = (min(int(i), int(j)), max(int(i), int(j)))
                nodes.add(nv + edge_index[key])
        self.dirichlet_nodes = np.array(sorted(nodes), dtype=np.int64)
        dd = np.concatenate([self.dirichlet_nodes,
                             self.n_scalar + self.dirichlet_nodes])
        self.dirichlet_dofs = dd
        mask = np.ones(self.n_vel, dtype=bool)
        mask[dd] = False
        self.free_vel = np.nonzero(mask)[0]

        self._qcache = {}

    # cached quadrature data -------------------------------------------------
    def qdata(self, rule="deg5", grads=True):
        key = (rule, grads)
        if key not in self._qcache:
            if rule == "deg5":
                pts, w = quadrature.degree5_rule()
            else:
                pts, w = quadrature.collapsed_gauss_rule()
            V = p2_values(pts)
            P = p1_values(pts)
            G = None
            if grads:
                Gref = p2_grads(pts)
                G = np.einsum("qak,tkd->tqad", Gref, self.jinv)
            self._qcache[key] = (pts, w, V, P, G)
        return self._qcache[key]

    def quad_points_physical(self, rule="deg5"):
        pts, _, _, _, _ = self.qdata(rule, grads=False)
        return self.tri_origin[:, None, :] + np.einsum(
            "tde,qe->tqd", self.jac, pts)

    # field access ------------------------------------------------------------
    def local_coeffs(self, u):
        """Velocity coefficients per triangle: (nt, 6, 2)."""
        ns = self.n_scalar
        return np.stack([u[self.tri_nodes], u[ns + self.tri_nodes]], axis=2)

    def values_at_quad(self, u, rule="deg5"):
        _, _, V, _, _ = self.qdata(rule, grads=False)
        return np.einsum("qa,tac->tqc", V, self.local_coeffs(u))

    def grads_at_quad(self, u, rule="deg5"):
        """(nt, nq, 2, 2) with entry [t, q, c, d] = d u_c / d x_d."""
        _, _, _, _, G = self.qdata(rule, grads=True)
        return np.einsum("tqad,tac->tqcd", G, self.local_coeffs(u))


# ---------------------------------------------------------------------------
# assembly

def _scatter(space, loc, rows_nodes, cols_nodes, shape):
    rows = rows_nodes.ravel()
    cols = cols_nodes.ravel()
    return sp.coo_matrix((loc.ravel(), (rows, cols)), shape=shape).tocsr()


def _vector_blockdiag(space, Ms):
    """Expand a scalar (n_s x n_s) operator to both velocity components."""
    return sp.block_diag([Ms, Ms], format="csr")


def assemble_scalar_mass(space):
    _, w, V, _, _ = space.qdata()
    Mref = np.einsum("q,qa,qb->ab", w, V, V)
    loc = space.detj[:, None, None] * Mref[None, :, :]
    tn = space.tri_nodes
    rows = np.repeat(tn, 6, axis=1)
    cols = np.tile(tn, (1, 6))
    return _scatter(space, loc, rows, cols, (space.n_scalar, space.n_scalar))


def assemble_mass(space):
    """Vector P2 mass matrix (Gram matrix of the velocity space)."""
    return _vector_blockdiag(space, assemble_scalar_mass(space))


def assemble_stiffness(space):
    """Vector P2 stiffness matrix (grad u, grad v), viscosity applied by caller."""
    _, w, _, _, G = space.qdata()
    loc = np.einsum("q,tqad,tqbd,t->tab", w, G, G, space.detj)
    tn = space.tri_nodes
    rows = np.repeat(tn, 6, axis=1)
    cols = np.tile(tn, (1, 6))
    As = _scatter(space, loc, rows, cols, (space.n_scalar, space.n_scalar))
    return _vector_blockdiag(space, As)


def assemble_divergence(space):
    """B with B[k, j] = (div psi_j, chi_k), shape (n_pr, n_vel)."""
    _, w, _, P, G = space.qdata()
    ns = space.n_scalar
    tn = space.tri_nodes
    prows = space.mesh.triangles  # (nt, 3)
    blocks = []
    for c in range(2):
        loc = np.einsum("q,qk,tqa,t->tka", w, P, G[:, :, :, c], space.detj)
        rows = np.repeat(prows, 6, axis=1)
        cols = np.tile(c * ns + tn, (1, 3))
        blocks.append(_scatter(space, loc, rows, cols, (space.n_pr, space.n_vel)))
    return (blocks[0] + blocks[1]).tocsr()


def assemble_convection(space, w_field):
    """N(w) with N[i, j] = b*(w, psi_j, psi_i); skew-symmetric by construction."""
    _, w, V, _, G = space.qdata()
    wq = space.values_at_quad(w_field)
    # C[a, b] = int (w . grad phi_b) phi_a
    wg = np.einsum("tqd,tqbd->tqb", wq, G)
    C = np.einsum("q,tqb,qa,t->tab", w, wg, V, space.detj)
    K = 0.5 * (C - np.transpose(C, (0, 2, 1)))
    tn = space.tri_nodes
    rows = np.repeat(tn, 6, axis=1)
    cols = np.tile(tn, (1, 6))
    Ks = _scatter(space, K, rows, cols, (space.n_scalar, space.n_scalar))
    return _vector_blockdiag(space, Ks)


def convection_rhs(space, w_field, u_field):
    """Vector r with r_i = b*(w, u, psi_i), without assembling N(w)."""
    _, w, V, _, G = space.qdata()
    uloc = space.local_coeffs(u_field)
    wq = space.values_at_quad(w_field)
    uq = np.einsum("qa,tac->tqc", V, uloc)
    gu = np.einsum("tqad,tac->tqcd", G, uloc)
    wdotgu = np.einsum("tqd,tqcd->tqc", wq, gu)
    wgrad = np.einsum("tqd,tqad->tqa", wq, G)
    loc = 0.5 * np.einsum("t,q,tqc,qa->tac", space.detj, w, wdotgu, V)
    loc -= 0.5 * np.einsum("t,q,tqa,tqc->tac", space.detj, w, wgrad, uq)
    r = np.zeros(space.n_vel)
    ns = space.n_scalar
    for c in range(2):
        np.add.at(r, c * ns + space.tri_nodes, loc[:, :, c])
    return r


def trilinear(space, w_field, u_field, v_field):
    """Direct quadrature evaluation of b*(w, u, v)."""
    _, w, _, _, _ = space.qdata()
    wq = space.values_at_quad(w_field)
    uq = space.values_at_quad(u_field)
    vq = space.values_at_quad(v_field)
    gu = space.grads_at_quad(u_field)
    gv = space.grads_at_quad(v_field)
    t1 = np.einsum("tqd,tqcd,tqc->tq", wq, gu, vq)
    t2 = np.einsum("tqd,tqcd,tqc->tq", wq, gv, uq)
    per_tri = np.einsum("q,tq->t", w, t1 - t2)
    return 0.5 * float(per_tri @ space.detj)


def trilinear_unskewed_identity(space, w_field, u_field, v_field):
    """Independent evaluation of int w.grad(u).v + 1/2 int div(w) (u.v)."""
    _, w, _, _, _ = space.qdata()
    wq = space.values_at_quad(w_field)
    uq = space.values_at_quad(u_field)
    vq = space.values_at_quad(v_field)
    gu = space.grads_at_quad(u_field)
    gw = space.grads_at_quad(w_field)
    divw = gw[:, :, 0, 0] + gw[:, :, 1, 1]
    t1 = np.einsum("tqd,tqcd,tqc->tq", wq, gu, vq)
    t2 = 0.5 * divw * np.einsum("tqc,tqc->tq", uq, vq)
    per_tri = np.einsum("q,tq->t", w, t1 + t2)
    return float(per_tri @ space.detj)


def load_vector(space, f, rule="high"):
    """F_i = (f, psi_i) for an analytic force f(x, y) -> (fx, fy)."""
    _, w, V, _, _ = space.qdata(rule, grads=False)
    xq = space.quad_points_physical(rule)
    fx, fy = f(xq[:, :, 0], xq[:, :, 1])
    fx = np.broadcast_to(fx, xq.shape[:2])
    fy = np.broadcast_to(fy, xq.shape[:2])
    F = np.zeros(space.n_vel)
    ns = space.n_scalar
    for c, fq in enumerate((fx, fy)):
        loc = np.einsum("t,q,tq,qa->ta", space.detj, w, fq, V)
        np.add.at(F, c * ns + space.tri_nodes, loc)
    return F


def interpolate(space, f):
    """P2 nodal interpolant: coefficients are nodal values of f."""
    x = space.node_coords[:, 0]
    y = space.node_coords[:, 1]
    fx, fy = f(x, y)
    fx = np.broadcast_to(fx, x.shape)
    fy = np.broadcast_to(fy, x.shape)
    return np.concatenate([fx, fy])


def norms(space, u):
    """L2, H1-seminorm, L3 and L6 norms of a velocity field."""
    _, w, _, _, _ = space.qdata()
    uq = space.values_at_quad(u)
    gu = space.grads_at_quad(u)
    u2 = np.einsum("tqc,tqc->tq", uq, uq)
    g2 = np.einsum("tqcd,tqcd->tq", gu, gu)
    l2 = np.einsum("q,tq,t->", w, u2, space.detj)
    h1 = np.einsum("q,tq,t->", w, g2, space.detj)
    # |u|^3 and |u|^6 are not polynomial: use the high-order rule
    _, wh, _, _, _ = space.qdata("high", grads=False)
    uqh = space.values_at_quad(u, rule="high")
    mag = np.sqrt(np.einsum("tqc,tqc->tq", uqh, uqh))
    l3 = np.einsum("q,tq,t->", wh, mag ** 3, space.detj)
    l6 = np.einsum("q,tq,t->", wh, mag ** 6, space.detj)
    return {
        "l2": float(np.sqrt(max(l2, 0.0))),
        "h1_semi": float(np.sqrt(max(h1, 0.0))),
        "l3": float(max(l3, 0.0) ** (1.0 / 3.0)),
        "l6": float(max(l6, 0.0) ** (1.0 / 6.0)),
    }


def curl_sq_integral(space, u):
    """Integral of |curl u|^2 (scalar curl in 2D), exact quadrature."""
    _, w, _, _, _ = space.qdata()
    gu = space.grads_at_quad(u)
    curl = gu[:, :, 1, 0] - gu[:, :, 0, 1]
    return float(np.einsum("q,tq,t->", w, curl ** 2, space.detj))


def pressure_integral_vector(space):
    """c with c_k = int chi_k dx (row sums of the P1 mass matrix)."""
    _, w, _, P, _ = space.qdata()
    loc = np.einsum("q,qk,t->tk", w, P, space.detj)
    c = np.zeros(space.n_pr)
    np.add.at(c, space.mesh.triangles, loc)
    return c


# ---------------------------------------------------------------------------
# discretization bundle and saddle-point solver

class Discretization:
    """Assembled operators for one space: M, A (no viscosity), B, and the
    pressure-mean constraint vector.  Immutable after construction."""

    def __init__(self, space):
        self.space = space
        self.M = assemble_mass(space)
        self.A = assemble_stiffness(space)
        self.B = assemble_divergence(space)
        self.c = pressure_integral_vector(space)

    def l2_norm(self, u):
        return float(np.sqrt(max(u @ (self.M @ u), 0.0)))

    def h1_norm(self, u):
        return float(np.sqrt(max(u @ (self.A @ u), 0.0)))


class SaddleSolver:
    """Sparse LU of the velocity-pressure saddle system with homogeneous
    Dirichlet velocity rows/columns eliminated and the pressure mean pinned
    by one Lagrange multiplier row.

    Solves  S u - B^T p = F,  B u = 0,  int p = 0  for any number of
    right-hand sides against a single factorization.
    """

    def __init__(self, disc, S_vel):
        space = disc.space
        f = space.free_vel
        Sff = S_vel[f][:, f]
        Bf = disc.B[:, f]
        c = sp.csr_matrix(disc.c.reshape(-1, 1))
        K = sp.bmat([
            [Sff, -Bf.T, None],
            [Bf, None, c],
            [None, c.T, None],
        ], format="csc")
        try:
            self.lu = splu(K)
        except RuntimeError as exc:
            raise SolverError(f"saddle-point factorization failed: {exc}") from exc
        self.space = space
        self.nf = len(f)
        self.free = f

    def solve(self, F):
        rhs = np.zeros(self.nf + self.space.n_pr + 1)
        rhs[:self.nf] = F[self.free]
        x = self.lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolverError("saddle-point solve produced non-finite values")
        u = np.zeros(self.space.n_vel)
        u[self.free] = x[:self.nf]
        p = x[self.nf:self.nf + self.space.n_pr]
        return u, p


def solve_steady_stokes(disc, f, nu):
    """Steady Stokes solve with no-slip boundary and zero-mean pressure.

    ``f`` may be an analytic force f(x, y) -> (fx, fy) or a pre-assembled
    load vector.
    """
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    F = f if isinstance(f, np.ndarray) else load_vector(disc.space, f)
    solver = SaddleSolver(disc, nu * disc.A)
    return solver.solve(F)
