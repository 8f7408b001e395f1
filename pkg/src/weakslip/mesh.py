"""Unstructured triangle meshes with marked boundary and interface facets.

A mesh stores vertices, counterclockwise cells, edge topology derived from
the cells, and two facet sets: *exterior* facets (edges adjacent to one
cell) and optionally *interior* marked facets (edges adjacent to two cells
that carry boundary-condition data, listed once per side so each side can
be integrated with its own outward normal).  Meshes may carry quadratic
geometry: one extra node per edge, used for isoparametric cells whose
boundary edges follow a curved domain.
"""

import numpy as np

from .elements import EDGE_VERTICES, tabulate_basis
from .errors import GeometryError, InvalidArgumentError
from .quadrature import edge_rule


class Mesh:
    """Triangle mesh.

    Parameters
    ----------
    vertices : ndarray, shape (nv, 2)
    cells : ndarray, shape (nc, 3)
        Vertex indices; cells with negative area are reordered to be
        counterclockwise.
    geometry_degree : int, optional
        1 for straight cells, 2 for isoparametric quadratic cells.
    edge_nodes : ndarray, shape (ne, 2), optional
        Coordinates of the per-edge geometry node (degree 2 only).
        Defaults to edge midpoints, matching straight cells.
    region_markers : ndarray, shape (nc,), optional
        Integer subdomain id per cell (0 if omitted).
    """

    def __init__(self, vertices, cells, geometry_degree=1, edge_nodes=None,
                 region_markers=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        if cells.ndim != 2 or cells.shape[1] != 3:
            raise InvalidArgumentError("cells must have shape (nc, 3)")
        if cells.min(initial=0) < 0 or cells.max(initial=-1) >= len(self.vertices):
            raise InvalidArgumentError("cell vertex index out of range")
        # Enforce counterclockwise orientation.
        v = self.vertices
        d1 = v[cells[:, 1]] - v[cells[:, 0]]
        d2 = v[cells[:, 2]] - v[cells[:, 0]]
        area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        flip = area2 < 0.0
        if flip.any():
            cells[flip] = cells[flip][:, [0, 2, 1]]
            area2 = np.abs(area2)
        if np.any(area2 <= 0.0):
            raise GeometryError(
                f"{int(np.sum(area2 <= 0.0))} degenerate cells (zero area)")
        self.cells = cells
        self.geometry_degree = int(geometry_degree)
        if self.geometry_degree not in (1, 2):
            raise InvalidArgumentError("geometry_degree must be 1 or 2")

        self._build_edges()
        if region_markers is None:
            self.region_markers = np.zeros(len(cells), dtype=np.int64)
        else:
            self.region_markers = np.asarray(region_markers, dtype=np.int64)

        if self.geometry_degree == 2:
            if edge_nodes is None:
                ev = self.edges
                edge_nodes = 0.5 * (v[ev[:, 0]] + v[ev[:, 1]])
            self.edge_nodes = np.ascontiguousarray(edge_nodes, dtype=float)
            if self.edge_nodes.shape != (len(self.edges), 2):
                raise InvalidArgumentError("edge_nodes shape mismatch")
        else:
            self.edge_nodes = None

        # Exterior facets: every edge with a single adjacent cell.
        ext = np.flatnonzero(self._edge_count == 1)
        order = np.argsort(self._edge_first_cell[ext], kind="stable")
        ext = ext[order]
        self.facet_cell = self._edge_first_cell[ext]
        self.facet_local = self._edge_first_local[ext]
        self.facet_edge = ext
        self.facet_marker = np.zeros(len(ext), dtype=np.int64)

        # Interior marked facets (filled by set_interior_facets).
        self.int_cell = np.empty(0, dtype=np.int64)
        self.int_local = np.empty(0, dtype=np.int64)
        self.int_marker = np.empty(0, dtype=np.int64)

        self.marker_ids = {}
        self.boundary_snap = None

    def _build_edges(self):
        cells = self.cells
        nc = len(cells)
        raw = np.empty((3 * nc, 2), dtype=np.int64)
        for k, (a, b) in enumerate(EDGE_VERTICES):
            raw[k * nc:(k + 1) * nc, 0] = cells[:, a]
            raw[k * nc:(k + 1) * nc, 1] = cells[:, b]
        key = np.sort(raw, axis=1)
        edges, inverse, counts = np.unique(
            key, axis=0, return_inverse=True, return_counts=True)
        if counts.max(initial=2) > 2:
            raise GeometryError("non-manifold edge (more than two cells)")
        self.edges = edges
        self.cell_edges = inverse.reshape(3, nc).T.copy()
        self._edge_count = counts
        # First (cell, local edge) incident to each edge; scatter the
        # entries reversed so the first occurrence wins.
        cell_of_entry = np.tile(np.arange(nc), 3)
        local_of_entry = np.repeat(np.arange(3), nc)
        first = np.full(len(edges), -1, dtype=np.int64)
        first_local = np.zeros(len(edges), dtype=np.int64)
        first[inverse[::-1]] = cell_of_entry[::-1]
        first_local[inverse[::-1]] = local_of_entry[::-1]
        self._edge_first_cell = first
        self._edge_first_local = first_local

    # -- queries -----------------------------------------------------------

    def areas(self):
        v = self.vertices
        c = self.cells
        d1 = v[c[:, 1]] - v[c[:, 0]]
        d2 = v[c[:, 2]] - v[c[:, 0]]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def centroids(self):
        return self.vertices[self.cells].mean(axis=1)

    def circumradii(self):
        v = self.vertices[self.cells]
        a = np.linalg.norm(v[:, 1] - v[:, 0], axis=1)
        b = np.linalg.norm(v[:, 2] - v[:, 1], axis=1)
        c = np.linalg.norm(v[:, 0] - v[:, 2], axis=1)
        return a * b * c / (4.0 * np.abs(self.areas()))

    def facet_midpoints(self):
        ev = self.edges[self.facet_edge]
        return 0.5 * (self.vertices[ev[:, 0]] + self.vertices[ev[:, 1]])

    def facets_with_marker(self, marker):
        marker = self.resolve_marker(marker)
        sel = np.flatnonzero(self.facet_marker == marker)
        return self.facet_cell[sel], self.facet_local[sel]

    def interior_facets_with_marker(self, marker):
        marker = self.resolve_marker(marker)
        sel = np.flatnonzero(self.int_marker == marker)
        return self.int_cell[sel], self.int_local[sel]

    def resolve_marker(self, marker):
        if isinstance(marker, str):
            try:
                return self.marker_ids[marker]
            except KeyError:
                raise InvalidArgumentError(f"unknown marker {marker!r}") from None
        return int(marker)

    # -- construction helpers ---------------------------------------------

    def classify_boundary(self, classify):
        """Assign exterior facet markers from ``classify(midpoints) -> ids``."""
        self.facet_marker = np.asarray(
            classify(self.facet_midpoints()), dtype=np.int64)
        if len(self.facet_marker) != len(self.facet_cell):
            raise InvalidArgumentError("classifier returned wrong length")

    def set_interior_facets(self, cells, locs, markers):
        self.int_cell = np.asarray(cells, dtype=np.int64)
        self.int_local = np.asarray(locs, dtype=np.int64)
        self.int_marker = np.asarray(markers, dtype=np.int64)

    def edge_of(self, cell, local):
        return self.cell_edges[cell, local]


def facet_geometry(mesh, cells, locs, t):
    """Geometry of facet traces at edge parameters ``t``.

    Parameters
    ----------
    mesh : Mesh
    cells, locs : ndarray, shape (nf,)
        Adjacent cell and local edge index per facet.
    t : ndarray, shape (nq,)
        Points in [0, 1] along each facet (endpoint ``t=0`` is the first
        vertex of the local edge in counterclockwise cell order).

    Returns
    -------
    x : ndarray, shape (nf, nq, 2)
        Physical coordinates.
    normal : ndarray, shape (nf, nq, 2)
        Unit outward normal with respect to the adjacent cell.
    measure : ndarray, shape (nf, nq)
        Arc-length measure ``|dx/dt|``.
    """
    t = np.asarray(t, dtype=float)
    conn = mesh.cells[cells]
    a_idx = conn[np.arange(len(cells)), (locs + 1) % 3]
    b_idx = conn[np.arange(len(cells)), (locs + 2) % 3]
    a = mesh.vertices[a_idx][:, None, :]
    b = mesh.vertices[b_idx][:, None, :]
    tt = t[None, :, None]
    if mesh.geometry_degree == 1:
        x = a + tt * (b - a)
        dx = np.broadcast_to(b - a, x.shape).copy()
    else:
        m = mesh.edge_nodes[mesh.cell_edges[cells, locs]][:, None, :]
        n0 = (1.0 - t) * (1.0 - 2.0 * t)
        n1 = t * (2.0 * t - 1.0)
        nm = 4.0 * t * (1.0 - t)
        x = a * n0[None, :, None] + b * n1[None, :, None] + m * nm[None, :, None]
        dx = (a * (4.0 * t - 3.0)[None, :, None]
              + b * (4.0 * t - 1.0)[None, :, None]
              + m * (4.0 - 8.0 * t)[None, :, None])
    measure = np.linalg.norm(dx, axis=2)
    normal = np.stack([dx[:, :, 1], -dx[:, :, 0]], axis=2) / measure[:, :, None]
    return x, normal, measure


def facet_lengths(mesh, cells, locs, degree=4):
    """Arc length of each facet (the penalty scaling ``h_F``)."""
    t, w = edge_rule(degree)
    _, _, measure = facet_geometry(mesh, cells, locs, t)
    return measure @ w


def generate_rect_mesh(m, n, lx=1.0, ly=1.0, origin=(0.0, 0.0)):
    """Structured triangulation of ``[x0, x0+lx] x [y0, y0+ly]``.

    Each of the ``m x n`` squares is bisected along its lower-left to
    upper-right diagonal, giving ``2*m*n`` cells and ``(m+1)*(n+1)``
    vertices.  Exterior facets are marked ``left``, ``right``, ``bottom``,
    ``top``.
    """
    if m < 1 or n < 1:
        raise InvalidArgumentError("need at least one square per direction")
    x0, y0 = origin
    xs = np.linspace(x0, x0 + lx, m + 1)
    ys = np.linspace(y0, y0 + ly, n + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (m + 1) + i

    ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    a = vid(ii, jj)
    b = vid(ii + 1, jj)
    c = vid(ii + 1, jj + 1)
    d = vid(ii, jj + 1)
    cells = np.empty((2 * m * n, 3), dtype=np.int64)
    cells[0::2] = np.column_stack([a, b, c])
    cells[1::2] = np.column_stack([a, c, d])

    mesh = Mesh(vertices, cells)
    mesh.marker_ids = {"left": 1, "right": 2, "bottom": 3, "top": 4}
    tol = 1e-12 * max(lx, ly)

    def classify(mid):
        ids = np.zeros(len(mid), dtype=np.int64)
        ids[np.abs(mid[:, 0] - x0) < tol] = 1
        ids[np.abs(mid[:, 0] - (x0 + lx)) < tol] = 2
        ids[np.abs(mid[:, 1] - y0) < tol] = 3
        ids[np.abs(mid[:, 1] - (y0 + ly)) < tol] = 4
        return ids

    mesh.classify_boundary(classify)
    if np.any(mesh.facet_marker == 0):
        raise GeometryError("unclassified boundary facet on rectangle")
    return mesh


def _stitch_rings(inner_ids, outer_ids, inner_ang, outer_ang):
    """Triangulate the annulus strip between two concentric rings."""
    na, nb = len(inner_ids), len(outer_ids)
    cells = []
    i = j = 0
    twopi = 2.0 * np.pi

    def ang_a(k):
        return inner_ang[k % na] + twopi * (k // na)

    def ang_b(k):
        return outer_ang[k % nb] + twopi * (k // nb)

    while i < na or j < nb:
        advance_outer = j < nb and (i == na or ang_b(j + 1) <= ang_a(i + 1))
        if advance_outer:
            cells.append((outer_ids[j % nb], outer_ids[(j + 1) % nb],
                          inner_ids[i % na]))
            j += 1
        else:
            cells.append((inner_ids[(i + 1) % na], inner_ids[i % na],
                          outer_ids[j % nb]))
            i += 1
    return cells


def generate_ellipse_mesh(n, eps_y=0.0, degree=2):
    """Mesh the ellipse ``x^2 + y^2 / (1 + eps_y)^2 < 1``.

    Built from ``n`` concentric rings of a hexagonal disc lattice (ring
    ``k`` holds ``6k`` points), stitched ring by ring, then scaled by
    ``1 + eps_y`` in ``y``.  Boundary vertices land exactly on the
    ellipse; with ``degree=2`` the boundary edge nodes are snapped to the
    ellipse so boundary cells are isoparametric quadratic.
    """
    if n < 2:
        raise InvalidArgumentError("ellipse mesh needs n >= 2 rings")
    sy = 1.0 + eps_y
    pts = [(0.0, 0.0)]
    ring_ids = [[0]]
    ring_ang = [[0.0]]
    for k in range(1, n + 1):
        cnt = 6 * k
        ang = 2.0 * np.pi * np.arange(cnt) / cnt
        r = k / n
        ids = list(range(len(pts), len(pts) + cnt))
        pts.extend(zip(r * np.cos(ang), r * np.sin(ang)))
        ring_ids.append(ids)
        ring_ang.append(list(ang))

    cells = []
    # Innermost ring fans to the center point.
    first = ring_ids[1]
    for j in range(6):
        cells.append((first[j], first[(j + 1) % 6], 0))
    for k in range(1, n):
        cells.extend(_stitch_rings(ring_ids[k], ring_ids[k + 1],
                                   ring_ang[k], ring_ang[k + 1]))

    vertices = np.asarray(pts)
    vertices[:, 1] *= sy

    def snap(p):
        ang = np.arctan2(p[:, 1] / sy, p[:, 0])
        return np.column_stack([np.cos(ang), sy * np.sin(ang)])

    mesh = Mesh(vertices, np.asarray(cells, dtype=np.int64),
                geometry_degree=degree)
    if degree == 2:
        bdry = mesh.cell_edges[mesh.facet_cell, mesh.facet_local]
        mesh.edge_nodes[bdry] = snap(mesh.edge_nodes[bdry])
    mesh.marker_ids = {"boundary": 1}
    mesh.facet_marker[:] = 1
    mesh.boundary_snap = snap
    return mesh


def refine_uniform(mesh):
    """Red refinement: every cell splits into four similar children.

    New vertices are placed at the geometry edge nodes (the curved
    midpoints for quadratic meshes).  Exterior and interior facet markers
    are inherited by the two child facets of each parent facet, and
    boundary edge nodes are re-snapped when the mesh carries a boundary
    projection.
    """
    v = mesh.vertices
    if mesh.geometry_degree == 2:
        mid = mesh.edge_nodes
    else:
        ev = mesh.edges
        mid = 0.5 * (v[ev[:, 0]] + v[ev[:, 1]])
    new_vertices = np.vstack([v, mid])
    off = len(v)
    c = mesh.cells
    e = mesh.cell_edges + off
    nc = len(c)
    children = np.empty((4 * nc, 3), dtype=np.int64)
    children[0::4] = np.column_stack([c[:, 0], e[:, 2], e[:, 1]])
    children[1::4] = np.column_stack([c[:, 1], e[:, 0], e[:, 2]])
    children[2::4] = np.column_stack([c[:, 2], e[:, 1], e[:, 0]])
    children[3::4] = np.column_stack([e[:, 0], e[:, 1], e[:, 2]])

    regions = np.repeat(mesh.region_markers, 4)
    fine = Mesh(new_vertices, children, geometry_degree=mesh.geometry_degree,
                region_markers=regions)

    def child_facets(cells, locs):
        ca = 4 * cells + (locs + 1) % 3
        cb = 4 * cells + (locs + 2) % 3
        return (np.concatenate([ca, cb]),
                np.concatenate([np.full(len(ca), 2, dtype=np.int64),
                                np.full(len(cb), 1, dtype=np.int64)]))

    # Exterior markers.
    cc, ll = child_facets(mesh.facet_cell, mesh.facet_local)
    mm = np.concatenate([mesh.facet_marker, mesh.facet_marker])
    edge_ids = fine.cell_edges[cc, ll]
    marker_by_edge = np.zeros(len(fine.edges), dtype=np.int64)
    marker_by_edge[edge_ids] = mm
    fine.facet_marker = marker_by_edge[fine.facet_edge]

    if len(mesh.int_cell):
        ic, il = child_facets(mesh.int_cell, mesh.int_local)
        im = np.concatenate([mesh.int_marker, mesh.int_marker])
        fine.set_interior_facets(ic, il, im)

    fine.marker_ids = dict(mesh.marker_ids)
    fine.boundary_snap = mesh.boundary_snap
    if fine.geometry_degree == 2 and fine.boundary_snap is not None:
        bdry_edges = fine.cell_edges[fine.facet_cell, fine.facet_local]
        fine.edge_nodes[bdry_edges] = fine.boundary_snap(
            fine.edge_nodes[bdry_edges])
    return fine


def write_vtk(path, mesh, point_data=None, cell_data=None):
    """Write the mesh and nodal/cell fields as legacy ASCII VTK."""
    lines = ["# vtk DataFile Version 3.0", "weakslip fields", "ASCII",
             "DATASET UNSTRUCTURED_GRID"]
    nv = len(mesh.vertices)
    lines.append(f"POINTS {nv} double")
    for x, y in mesh.vertices:
        lines.append(f"{x:.15g} {y:.15g} 0.0")
    nc = len(mesh.cells)
    lines.append(f"CELLS {nc} {4 * nc}")
    for tri in mesh.cells:
        lines.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    lines.append(f"CELL_TYPES {nc}")
    lines.extend(["5"] * nc)

    def write_fields(fields, count):
        for name, arr in fields.items():
            arr = np.asarray(arr)
            if arr.ndim == 1:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(f"{val:.15g}" for val in arr[:count])
            else:
                lines.append(f"VECTORS {name} double")
                lines.extend(f"{vx:.15g} {vy:.15g} 0.0"
                             for vx, vy in arr[:count])

    if point_data:
        lines.append(f"POINT_DATA {nv}")
        write_fields(point_data, nv)
    if cell_data:
        lines.append(f"CELL_DATA {nc}")
        write_fields(cell_data, nc)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
