"""Triangulated periodic cell with matched periodic boundaries.

The cell (-Lambda/2, Lambda/2] x (zeta(x1), H) is meshed by a mapped
structured grid: uniform columns in x1, each column graded linearly from the
surface to the artificial boundary.  This makes the left/right boundary node
sets congruent under translation by (Lambda, 0) exactly and puts the surface
nodes on the graph of zeta exactly, which the quasi-periodic identification
and the Dirichlet condition both rely on.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import GeometryError

__all__ = ["CellMesh", "build_cell_mesh", "audit_mesh"]


class CellMesh:
    """Nodes, triangles and boundary markers of one periodic cell."""

    def __init__(self, surface, height, nx, ny):
        if height <= surface.sup_height:
            raise GeometryError(
                f"artificial boundary H={height} must lie above the surface "
                f"(sup zeta = {surface.sup_height})"
            )
        self.surface = surface
        self.height = float(height)
        self.period = surface.period
        self.nx = int(nx)
        self.ny = int(ny)

        lam = self.period
        self.x1_grid = np.linspace(-lam / 2.0, lam / 2.0, self.nx + 1)
        zeta = surface(self.x1_grid)
        if np.any(zeta >= height):
            raise GeometryError("surface intersects the artificial boundary")
        frac = np.linspace(0.0, 1.0, self.ny + 1)
        x1 = np.repeat(self.x1_grid, self.ny + 1)
        x2 = (zeta[:, None] + np.outer(height - zeta, frac)).ravel()
        self.nodes = np.column_stack([x1, x2])

        # quad (i, j) split along the same diagonal everywhere
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        n00 = (i * (self.ny + 1) + j).ravel()
        n10 = ((i + 1) * (self.ny + 1) + j).ravel()
        n01 = n00 + 1
        n11 = n10 + 1
        tris = np.empty((2 * self.nx * self.ny, 3), dtype=int)
        tris[0::2] = np.column_stack([n00, n10, n11])
        tris[1::2] = np.column_stack([n00, n11, n01])
        self.triangles = tris

        jj = np.arange(self.ny + 1)
        self.surface_nodes = np.arange(self.nx + 1) * (self.ny + 1)
        self.top_nodes = self.surface_nodes + self.ny
        self.left_nodes = jj
        self.right_nodes = self.nx * (self.ny + 1) + jj

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    def node_index(self, i, j):
        return i * (self.ny + 1) + j

    def max_edge(self):
        p = self.nodes[self.triangles]
        e = np.concatenate(
            [p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]]
        )
        return float(np.max(np.hypot(e[:, 0], e[:, 1])))

    def triangle_areas(self):
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def interpolate(self, nodal_values, points):
        """P1 interpolation of nodal data at arbitrary points inside the cell."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(nodal_values)
        out = np.zeros(pts.shape[0], dtype=vals.dtype)
        lam = self.period
        for r, (x1, x2) in enumerate(pts):
            i = int(np.clip((x1 + lam / 2.0) / (lam / self.nx), 0, self.nx - 1e-9))
            i = min(i, self.nx - 1)
            # vertical fraction within column i..i+1 varies; use column i edge
            zl = self.surface(self.x1_grid[i])
            col_h = self.height - zl
            j = int(np.clip((x2 - zl) / (col_h / self.ny), 0, self.ny - 1e-9))
            j = min(j, self.ny - 1)
            # two candidate triangles of quad (i, j)
            for t in (2 * (i * self.ny + j), 2 * (i * self.ny + j) + 1):
                tri = self.triangles[t]
                p = self.nodes[tri]
                T = np.array(
                    [[p[1, 0] - p[0, 0], p[2, 0] - p[0, 0]],
                     [p[1, 1] - p[0, 1], p[2, 1] - p[0, 1]]]
                )
                rhs = np.array([x1 - p[0, 0], x2 - p[0, 1]])
                ab = np.linalg.solve(T, rhs)
                bary = np.array([1.0 - ab.sum(), ab[0], ab[1]])
                if np.all(bary > -1e-9):
                    out[r] = bary @ vals[tri]
                    break
            else:
                # fall back to nearest node (point on a seam or just outside)
                n = np.argmin(np.hypot(*(self.nodes - (x1, x2)).T))
                out[r] = vals[n]
        return out

    def save_csv(self, node_path, element_path):
        np.savetxt(node_path, self.nodes, delimiter=",", header="x1,x2",
                   comments="", fmt="%.17g")
        np.savetxt(element_path, self.triangles, delimiter=",",
                   header="n0,n1,n2", comments="", fmt="%d")


def audit_mesh(mesh, tol=1e-12):
    """Check the invariants the solver relies on; returns a report dict."""
    lam = mesh.period
    left = mesh.nodes[mesh.left_nodes]
    right = mesh.nodes[mesh.right_nodes]
    pairing = float(np.max(np.abs(right - left - np.array([lam, 0.0]))))
    surf = mesh.nodes[mesh.surface_nodes]
    on_graph = float(np.max(np.abs(surf[:, 1] - mesh.surface(surf[:, 0]))))
    inside = bool(
        np.all(mesh.nodes[:, 1] <= mesh.height + tol)
        and np.all(mesh.nodes[:, 1] >= mesh.surface(mesh.nodes[:, 0]) - tol)
    )
    # conformity: every edge shared by at most two triangles
    edges = np.sort(
        np.concatenate(
            [mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]]]
        ),
        axis=1,
    )
    _, counts = np.unique(edges, axis=0, return_counts=True)
    report = {
        "pairing_error": pairing,
        "surface_error": on_graph,
        "nodes_inside": inside,
        "max_edge_multiplicity": int(counts.max()),
        "min_area": float(np.min(mesh.triangle_areas())),
        "max_edge": mesh.max_edge(),
    }
    report["ok"] = (
        pairing <= tol
        and on_graph <= tol
        and inside
        and counts.max() <= 2
        and report["min_area"] > 0
    )
    return report


def build_cell_mesh(surface, height, target_h, aspect=1.0):
    """Quasi-uniform conforming triangulation with matched periodic boundaries.

    Guarantees max edge length <= 1.5 * target_h by refining the initial
    count estimate if the slanted columns stretch any diagonal.  ``aspect``
    scales the vertical spacing relative to target_h (< 1 refines vertically).
    """
    if target_h <= 0:
        raise GeometryError("target_h must be positive")
    lam = surface.period
    xs = np.linspace(-lam / 2, lam / 2, 4096)
    zmin = float(np.min(surface(xs)))
    if height <= surface.sup_height:
        raise GeometryError("artificial boundary must lie strictly above the surface")
    nx = max(4, int(math.ceil(lam / target_h)))
    ny = max(4, int(math.ceil((height - zmin) / (target_h * aspect))))
    for _ in range(12):
        mesh = CellMesh(surface, height, nx, ny)
        if mesh.max_edge() <= 1.5 * target_h:
            return mesh
        nx = int(math.ceil(nx * 1.2))
        ny = int(math.ceil(ny * 1.2))
    raise GeometryError("could not reach the requested mesh size; surface too steep?")
