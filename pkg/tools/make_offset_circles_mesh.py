#!/usr/bin/env python3
"""Generate the coarse flow-between-offset-circles mesh shipped with the
package (outer circle r=1 at the origin, inner circle r=0.1 at (0.5, 0)).

A graded point cloud is seeded between the circles — spacing ~0.025 at the
inner circle growing to ~0.07 near the outer one — then relaxed with a few
Lloyd iterations (area-weighted centroid averaging of the incident-triangle
centroids, boundary points held fixed) and triangulated with Delaunay.
Triangles whose centroid falls inside the inner hole are discarded.  The
construction is fully deterministic; run once and commit the output as
package data.

Usage: python tools/make_offset_circles_mesh.py [out_path]
"""

import sys
import pathlib

import numpy as np
from scipy.spatial import Delaunay

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from enspod.mesh import Mesh, detect_boundary, save_mesh  # noqa: E402

R_OUTER = 1.0
R_INNER = 0.1
CENTER = 0.5          # inner-circle center on the real axis
H_OUT = 0.070         # target spacing far from the inner circle
H_IN = 0.025          # target spacing at the inner circle
GRADE = 0.55          # spacing growth rate with distance from the hole
N_SMOOTH = 25         # Lloyd relaxation sweeps


def target_h(p):
    d = np.hypot(p[..., 0] - CENTER, p[..., 1]) - R_INNER
    return np.minimum(H_OUT, H_IN + GRADE * np.maximum(d, 0.0))


def boundary_points():
    n_out = int(round(2 * np.pi * R_OUTER / H_OUT))
    th = 2 * np.pi * np.arange(n_out) / n_out
    outer = np.column_stack([np.cos(th), np.sin(th)])
    n_in = int(round(2 * np.pi * R_INNER / H_IN))
    th = 2 * np.pi * np.arange(n_in) / n_in
    inner = np.column_stack([CENTER + R_INNER * np.cos(th),
                             R_INNER * np.sin(th)])
    return outer, inner


def seed_interior():
    """Hex-like rows with locally graded horizontal and vertical spacing."""
    pts = []
    y = -R_OUTER
    row = 0
    while y < R_OUTER:
        x = -R_OUTER + (0.45 * H_OUT if row % 2 else 0.0)
        while x < R_OUTER:
            p = np.array([x, y])
            pts.append(p)
            x += target_h(p)
        y += 0.82 * target_h(np.array([0.0, y]))
        row += 1
    pts = np.array(pts)
    r = np.hypot(pts[:, 0], pts[:, 1])
    rin = np.hypot(pts[:, 0] - CENTER, pts[:, 1])
    h = target_h(pts)
    keep = (r < R_OUTER - 0.6 * h) & (rin > R_INNER + 0.6 * h)
    return pts[keep]


def signed_areas_of(p, t):
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def build():
    outer, inner = boundary_points()
    fixed = np.vstack([outer, inner])
    pts = np.vstack([fixed, seed_interior()])
    nfix = len(fixed)
    for _ in range(N_SMOOTH):
        tri = Delaunay(pts)
        simp = tri.simplices
        cent = pts[simp].mean(axis=1)
        good = np.hypot(cent[:, 0] - CENTER, cent[:, 1]) > R_INNER
        simp, cent = simp[good], cent[good]
        a = np.abs(signed_areas_of(pts, simp))
        newp = np.zeros_like(pts)
        wsum = np.zeros(len(pts))
        for k in range(3):
            np.add.at(newp, simp[:, k], cent * a[:, None])
            np.add.at(wsum, simp[:, k], a)
        mask = wsum > 0
        newp[mask] /= wsum[mask, None]
        pts[nfix:][mask[nfix:]] = newp[nfix:][mask[nfix:]]
        # keep relaxed points strictly between the circles
        r = np.hypot(pts[nfix:, 0], pts[nfix:, 1])
        r_clip = np.clip(r, None, R_OUTER - 0.55 * H_OUT)
        pts[nfix:] *= np.where(r > 0, r_clip / np.maximum(r, 1e-12),
                               1.0)[:, None]
        rin = np.hypot(pts[nfix:, 0] - CENTER, pts[nfix:, 1])
        lo = R_INNER + 0.55 * H_IN
        bad = rin < lo
        if bad.any():
            d = pts[nfix:][bad] - [CENTER, 0.0]
            dn = np.hypot(d[:, 0], d[:, 1])[:, None]
            pts[nfix:][bad] = [CENTER, 0.0] + d / dn * lo
    simp = Delaunay(pts).simplices
    cent = pts[simp].mean(axis=1)
    simp = simp[np.hypot(cent[:, 0] - CENTER, cent[:, 1]) > R_INNER]
    flip = signed_areas_of(pts, simp) < 0
    simp[flip] = simp[flip][:, [0, 2, 1]]
    edges, markers = detect_boundary(pts, simp)
    return Mesh(pts, simp, edges, markers)


def main(out_path):
    mesh = build()
    save_mesh(mesh, out_path)
    n_edges = len({tuple(sorted((t[a], t[(a + 1) % 3])))
                   for t in mesh.triangles for a in range(3)})
    dofs = 3 * mesh.n_vertices + 2 * n_edges
    print(f"wrote {out_path}: {mesh.n_vertices} vertices, "
          f"{mesh.n_triangles} triangles, {dofs} Taylor-Hood dofs")
    return mesh


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else str(
        pathlib.Path(__file__).resolve().parents[1]
        / "src/enspod/data/offset_circles_coarse.msh2d")
    main(out)
