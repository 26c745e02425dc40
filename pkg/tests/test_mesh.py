import numpy as np
import pytest

from enspod import mesh


def test_structured_square_counts():
    m = mesh.build_structured_square(4)
    assert m.n_vertices == 25
    assert m.n_triangles == 32
    assert len(m.boundary_edges) == 16
    assert set(m.boundary_markers) == {1}


def test_structured_square_total_area():
    m = mesh.build_structured_square(5, extent=(0.0, 2.0, 0.0, 3.0))
    assert np.isclose(mesh.signed_areas(m).sum(), 6.0)
    assert np.all(mesh.signed_areas(m) > 0)


def test_mesh_size_scales():
    h4 = mesh.mesh_size(mesh.build_structured_square(4))
    h8 = mesh.mesh_size(mesh.build_structured_square(8))
    assert np.isclose(h4, 2.0 * h8)
    assert np.isclose(h4, np.sqrt(2.0) / 4.0)


def test_validation_rejects_bad_index():
    m = mesh.build_structured_square(2)
    tri = m.triangles.copy()
    tri[0, 0] = 99
    with pytest.raises(mesh.MeshValidationError):
        mesh.Mesh(m.vertices, tri, m.boundary_edges, m.boundary_markers)


def test_validation_rejects_flipped_triangle():
    m = mesh.build_structured_square(2)
    tri = m.triangles.copy()
    tri[3] = tri[3][[0, 2, 1]]
    with pytest.raises(mesh.MeshValidationError):
        mesh.Mesh(m.vertices, tri, m.boundary_edges, m.boundary_markers)


def test_validation_rejects_wrong_boundary():
    m = mesh.build_structured_square(2)
    with pytest.raises(mesh.MeshValidationError):
        mesh.Mesh(m.vertices, m.triangles, m.boundary_edges[:-1],
                  m.boundary_markers[:-1])


def test_save_load_roundtrip(tmp_path):
    m = mesh.build_structured_square(3, extent=(0.0, 1.0, -0.5, 0.5))
    path = tmp_path / "m.msh2d"
    mesh.save_mesh(m, str(path))
    m2 = mesh.load_mesh(str(path))
    assert m == m2


def test_load_without_boundary_section_detects_it(tmp_path):
    m = mesh.build_structured_square(3)
    path = tmp_path / "m.msh2d"
    lines = [f"msh2d 1", f"vertices {m.n_vertices}"]
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in m.vertices]
    lines += [f"triangles {m.n_triangles}"]
    lines += [f"{i} {j} {k}" for i, j, k in m.triangles]
    path.write_text("\n".join(lines) + "\n")
    m2 = mesh.load_mesh(str(path))
    assert np.array_equal(m.boundary_edges, m2.boundary_edges)
    assert set(m2.boundary_markers) == {1}


def test_load_flips_clockwise_triangles(tmp_path):
    m = mesh.build_structured_square(2)
    tri = m.triangles.copy()
    tri[0] = tri[0][[0, 2, 1]]
    path = tmp_path / "m.msh2d"
    lines = [f"msh2d 1", f"vertices {m.n_vertices}"]
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in m.vertices]
    lines += [f"triangles {len(tri)}"]
    lines += [f"{i} {j} {k}" for i, j, k in tri]
    path.write_text("\n".join(lines) + "\n")
    m2 = mesh.load_mesh(str(path))
    assert np.all(mesh.signed_areas(m2) > 0)


def test_format_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.msh2d"
    path.write_text("msh2d 1\nvertices 2\n0.0 0.0\noops here\n")
    with pytest.raises(mesh.MeshFormatError) as exc:
        mesh.load_mesh(str(path))
    assert exc.value.line == 4


def test_bad_header_rejected(tmp_path):
    path = tmp_path / "bad.msh2d"
    path.write_text("mesh 2\n")
    with pytest.raises(mesh.MeshFormatError):
        mesh.load_mesh(str(path))


def test_packaged_annulus_mesh():
    from enspod.pipeline import resolve_mesh
    m = resolve_mesh("data:offset_circles_coarse")
    assert m.n_vertices == 827
    assert m.n_triangles == 1539
    assert set(m.boundary_markers) == {1, 2}
    # area of the unit disk minus the r=0.1 hole, up to mesh chord error
    area = mesh.signed_areas(m).sum()
    exact = np.pi * (1.0 - 0.01)
    assert abs(area - exact) < 0.02
    # outer boundary vertices sit on the unit circle
    outer = m.boundary_edges[m.boundary_markers == 1].ravel()
    radii = np.hypot(m.vertices[outer, 0], m.vertices[outer, 1])
    assert np.allclose(radii, 1.0, atol=1e-12)
    inner = m.boundary_edges[m.boundary_markers == 2].ravel()
    r_in = np.hypot(m.vertices[inner, 0] - 0.5, m.vertices[inner, 1])
    assert np.allclose(r_in, 0.1, atol=1e-12)
