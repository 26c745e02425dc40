"""Triangle meshes with boundary identification.

Provides a structured generator for rectangles (used by the convergence
studies), a loader/saver for the plain-text ``.msh2d`` format, and mesh
validation.  Meshes are immutable after construction.
"""

import numpy as np


class MeshFormatError(ValueError):
    """Raised when a mesh file cannot be parsed; carries the line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MeshValidationError(ValueError):
    """Raised when mesh connectivity violates a structural invariant."""


class Mesh:
    """Conforming triangle mesh of a planar domain.

    Parameters
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise vertex indices
    boundary_edges : (nb, 2) int array
    boundary_markers : (nb,) int array, one label per boundary component
    """

    def __init__(self, vertices, triangles, boundary_edges, boundary_markers):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64)
        self.boundary_markers = np.ascontiguousarray(boundary_markers, dtype=np.int64)
        validate(self)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.boundary_edges, other.boundary_edges)
            and np.array_equal(self.boundary_markers, other.boundary_markers)
        )


def signed_areas(mesh):
    p = mesh.vertices
    t = mesh.triangles
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def _edge_counts(triangles):
    """Map of sorted vertex pair -> number of adjacent triangles."""
    counts = {}
    for tri in triangles:
        for k in range(3):
            e = (int(tri[k]), int(tri[(k + 1) % 3]))
            key = (min(e), max(e))
            counts[key] = counts.get(key, 0) + 1
    return counts


def validate(mesh):
    """Check index ranges, orientation, and conformity.  Raises on failure."""
    nv = mesh.n_vertices
    if mesh.triangles.size and (mesh.triangles.min() < 0 or mesh.triangles.max() >= nv):
        raise MeshValidationError("triangle vertex index out of range")
    if mesh.boundary_edges.size and (mesh.boundary_edges.min() < 0
                                     or mesh.boundary_edges.max() >= nv):
        raise MeshValidationError("boundary edge vertex index out of range")
    areas = signed_areas(mesh)
    if np.any(areas <= 0.0):
        bad = int(np.argmin(areas))
        raise MeshValidationError(f"triangle {bad} has non-positive area {areas[bad]:g}")
    counts = _edge_counts(mesh.triangles)
    if any(c > 2 for c in counts.values()):
        raise MeshValidationError("non-conforming mesh: an edge is shared by >2 triangles")
    true_boundary = {e for e, c in counts.items() if c == 1}
    listed = {(min(int(i), int(j)), max(int(i), int(j))) for i, j in mesh.boundary_edges}
    if listed != true_boundary:
        raise MeshValidationError("boundary edge list does not match edges on exactly "
                                  "one triangle")


def detect_boundary(vertices, triangles):
    """Boundary edges (in one triangle only) with markers by connected component.

    Components are numbered 1, 2, ... ordered by their smallest vertex index,
    which makes marker assignment deterministic.
    """
    counts = _edge_counts(triangles)
    edges = sorted(e for e, c in counts.items() if c == 1)
    # union-find over boundary vertices
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        parent.setdefault(i, i)
        parent.setdefault(j, j)
        parent[find(i)] = find(j)
    roots = sorted({find(v) for v in parent}, key=lambda r: min(
        v for v in parent if find(v) == r))
    comp_order = {}
    for r in roots:
        comp_order[r] = min(v for v in parent if find(v) == r)
    ordered = sorted(roots, key=lambda r: comp_order[r])
    marker_of = {r: k + 1 for k, r in enumerate(ordered)}
    edge_arr = np.array(edges, dtype=np.int64).reshape(-1, 2)
    markers = np.array([marker_of[find(i)] for i, j in edges], dtype=np.int64)
    return edge_arr, markers


def build_structured_square(n, extent=(0.0, 1.0, 0.0, 1.0)):
    """Structured mesh of a rectangle: n x n cells, each split along the
    lower-left to upper-right diagonal.  All outer edges get marker 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x0, x1, y0, y1 = extent
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    triangles = np.array(tris, dtype=np.int64)
    edges, markers = detect_boundary(vertices, triangles)
    markers[:] = 1
    return Mesh(vertices, triangles, edges, markers)


def mesh_size(mesh):
    """Maximum edge length over all triangles."""
    p = mesh.vertices
    t = mesh.triangles
    h = 0.0
    for k in range(3):
        d = p[t[:, k]] - p[t[:, (k + 1) % 3]]
        h = max(h, float(np.sqrt((d ** 2).sum(axis=1)).max()))
    return h


def save_mesh(mesh, path):
    """Write the text ``.msh2d`` format (see load_mesh)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("msh2d 1\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"triangles {mesh.n_triangles}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        fh.write(f"boundary {len(mesh.boundary_edges)}\n")
        for (i, j), m in zip(mesh.boundary_edges, mesh.boundary_markers):
            fh.write(f"{i} {j} {m}\n")


def load_mesh(path):
    """Read a ``.msh2d`` file.

    Format: header line ``msh2d 1``; ``vertices N`` then N lines ``x y``;
    ``triangles M`` then M lines ``i j k`` (0-based); optional ``boundary K``
    with K lines ``i j marker``.  If the boundary section is absent, boundary
    edges are detected and markers assigned per connected component.
    Triangles with clockwise orientation are flipped.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            s = lines[pos].strip()
            pos += 1
            if s:
                return s, pos
        raise MeshFormatError("unexpected end of file", line=len(lines))

    header, ln = next_line()
    if header.split() != ["msh2d", "1"]:
        raise MeshFormatError("expected header 'msh2d 1'", line=ln)

    def section(name):
        s, ln = next_line()
        parts = s.split()
        if len(parts) != 2 or parts[0] != name:
            raise MeshFormatError(f"expected '{name} <count>'", line=ln)
        try:
            return int(parts[1])
        except ValueError:
            raise MeshFormatError(f"bad count in '{name}' section", line=ln)

    nv = section("vertices")
    vertices = np.empty((nv, 2))
    for r in range(nv):
        s, ln = next_line()
        parts = s.split()
        if len(parts) != 2:
            raise MeshFormatError("expected 'x y'", line=ln)
        try:
            vertices[r] = [float(parts[0]), float(parts[1])]
        except ValueError:
            raise MeshFormatError("bad vertex coordinate", line=ln)

    nt = section("triangles")
    triangles = np.empty((nt, 3), dtype=np.int64)
    for r in range(nt):
        s, ln = next_line()
        parts = s.split()
        if len(parts) != 3:
            raise MeshFormatError("expected 'i j k'", line=ln)
        try:
            triangles[r] = [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError("bad triangle index", line=ln)
        if triangles[r].min() < 0 or triangles[r].max() >= nv:
            raise MeshFormatError(
                f"triangle references vertex index outside 0..{nv - 1}", line=ln)

    # normalize orientation before connectivity checks
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    areas = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                   - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))
    flip = areas < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    edges = None
    markers = None
    if pos < len(lines) and any(s.strip() for s in lines[pos:]):
        nb = section("boundary")
        edges = np.empty((nb, 2), dtype=np.int64)
        markers = np.empty(nb, dtype=np.int64)
        for r in range(nb):
            s, ln = next_line()
            parts = s.split()
            if len(parts) != 3:
                raise MeshFormatError("expected 'i j marker'", line=ln)
            try:
                edges[r] = [int(parts[0]), int(parts[1])]
                markers[r] = int(parts[2])
            except ValueError:
                raise MeshFormatError("bad boundary entry", line=ln)
    if edges is None:
        edges, markers = detect_boundary(vertices, triangles)
    return Mesh(vertices, triangles, edges, markers)
