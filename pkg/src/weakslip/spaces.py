"""Mixed finite element spaces on triangle meshes.

A :class:`MixedSpace` is an ordered list of fields, each a continuous
Lagrange space (degree 1 or 2) or a discontinuous cellwise-constant space
(degree 0), with one or two components.  Global dofs are blocked by field
in declaration order; within a field, components interleave node by node,
so a Taylor-Hood velocity block is ``[u0x, u0y, u1x, u1y, ...]``.
"""

import numpy as np

from . import elements
from .errors import (InvalidArgumentError, GeometryError, PointLocationError,
                     UnsupportedError)


class Field:
    def __init__(self, name, degree, ncomp=1):
        if degree not in elements.SUPPORTED_DEGREES:
            raise UnsupportedError(f"unsupported degree {degree}")
        if ncomp not in (1, 2):
            raise InvalidArgumentError("fields have one or two components")
        self.name = name
        self.degree = degree
        self.ncomp = ncomp


class MixedSpace:
    """Ordered collection of fields over one mesh.

    Parameters
    ----------
    mesh : Mesh
    fields : sequence of Field or (name, degree, ncomp) tuples
    """

    def __init__(self, mesh, fields):
        self.mesh = mesh
        self.fields = [f if isinstance(f, Field) else Field(*f)
                       for f in fields]
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise InvalidArgumentError("duplicate field names")
        self._by_name = {f.name: f for f in self.fields}

        nv = len(mesh.vertices)
        ne = len(mesh.edges)
        nc = len(mesh.cells)
        self._scalar_ndofs = {}
        self._scalar_cell_dofs = {}
        for f in self.fields:
            if f.degree == 0:
                nd = nc
                cd = np.arange(nc, dtype=np.int64)[:, None]
            elif f.degree == 1:
                nd = nv
                cd = mesh.cells
            else:
                nd = nv + ne
                cd = np.hstack([mesh.cells, nv + mesh.cell_edges])
            self._scalar_ndofs[f.name] = nd
            self._scalar_cell_dofs[f.name] = cd

        self.offsets = {}
        off = 0
        for f in self.fields:
            self.offsets[f.name] = off
            off += f.ncomp * self._scalar_ndofs[f.name]
        self.ndofs = off

        # Cell-local global dof layout: fields in order, components
        # interleaved node by node within each field.
        blocks = []
        self.local_slices = {}
        pos = 0
        for f in self.fields:
            cd = self._scalar_cell_dofs[f.name]
            nb = cd.shape[1]
            if f.ncomp == 1:
                block = self.offsets[f.name] + cd
            else:
                block = np.empty((nc, 2 * nb), dtype=np.int64)
                block[:, 0::2] = self.offsets[f.name] + 2 * cd
                block[:, 1::2] = self.offsets[f.name] + 2 * cd + 1
            blocks.append(block)
            self.local_slices[f.name] = slice(pos, pos + f.ncomp * nb)
            pos += f.ncomp * nb
        self.cell_dofs = np.hstack(blocks)
        self.nlocal = pos

    def field(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise InvalidArgumentError(f"no field {name!r}") from None

    def scalar_ndofs(self, name):
        return self._scalar_ndofs[name]

    def nbasis(self, name):
        return self._scalar_cell_dofs[name].shape[1]

    def field_slice(self, name):
        f = self.field(name)
        off = self.offsets[name]
        return slice(off, off + f.ncomp * self._scalar_ndofs[name])

    def dof_coords(self, name):
        """Physical coordinates of the scalar dofs of a field."""
        f = self.field(name)
        mesh = self.mesh
        if f.degree == 0:
            return mesh.centroids()
        if f.degree == 1:
            return mesh.vertices
        if mesh.geometry_degree == 2:
            mids = mesh.edge_nodes
        else:
            ev = mesh.edges
            mids = 0.5 * (mesh.vertices[ev[:, 0]] + mesh.vertices[ev[:, 1]])
        return np.vstack([mesh.vertices, mids])

    def boundary_dofs(self, name, markers, comps=None):
        """Global dofs of ``name`` on facets with the given marker(s).

        For degree-0 fields, returns the dof of each adjacent cell.
        ``comps`` restricts a vector field to selected components.
        """
        mesh = self.mesh
        if isinstance(markers, (str, int)):
            markers = [markers]
        ids = [mesh.resolve_marker(m) for m in markers]
        sel = np.isin(mesh.facet_marker, ids)
        cells = mesh.facet_cell[sel]
        locs = mesh.facet_local[sel]
        return self.facet_closure_dofs(name, cells, locs, comps)

    def facet_closure_dofs(self, name, cells, locs, comps=None):
        f = self.field(name)
        mesh = self.mesh
        scalar = []
        if f.degree == 0:
            scalar.append(cells)
        else:
            conn = mesh.cells[cells]
            rng = np.arange(len(cells))
            scalar.append(conn[rng, (locs + 1) % 3])
            scalar.append(conn[rng, (locs + 2) % 3])
            if f.degree == 2:
                nv = len(mesh.vertices)
                scalar.append(nv + mesh.cell_edges[cells, locs])
        scalar = np.unique(np.concatenate(scalar)) if scalar else \
            np.empty(0, dtype=np.int64)
        off = self.offsets[name]
        if f.ncomp == 1:
            return off + scalar
        if comps is None:
            comps = (0, 1)
        return np.sort(np.concatenate(
            [off + f.ncomp * scalar + c for c in comps]))

    def global_dof(self, name, scalar_dof, comp=0):
        f = self.field(name)
        return self.offsets[name] + f.ncomp * scalar_dof + comp

    def zeros(self):
        return np.zeros(self.ndofs)


def cell_geometry(mesh, ref_points, cells=None):
    """Geometry map data at reference points for a batch of cells.

    Returns
    -------
    x : ndarray, shape (nc, nq, 2)
        Physical coordinates of the mapped points.
    inv_jt : ndarray, shape (nc, nq, 2, 2)
        Transposed inverse Jacobian (maps reference gradients to physical).
    det_j : ndarray, shape (nc, nq)
        Jacobian determinant (positive).
    """
    if cells is None:
        cells = np.arange(len(mesh.cells))
    ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
    nq = len(ref_points)
    conn = mesh.cells[cells]
    verts = mesh.vertices[conn]  # (nc, 3, 2)
    if mesh.geometry_degree == 1:
        d1 = verts[:, 1] - verts[:, 0]
        d2 = verts[:, 2] - verts[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        x = (verts[:, None, 0, :]
             + ref_points[None, :, 0, None] * d1[:, None, :]
             + ref_points[None, :, 1, None] * d2[:, None, :])
        inv_jt = np.empty((len(cells), 2, 2))
        inv_jt[:, 0, 0] = d2[:, 1]
        inv_jt[:, 0, 1] = -d1[:, 1]
        inv_jt[:, 1, 0] = -d2[:, 0]
        inv_jt[:, 1, 1] = d1[:, 0]
        inv_jt /= det[:, None, None]
        inv_jt = np.broadcast_to(inv_jt[:, None], (len(cells), nq, 2, 2))
        det_j = np.broadcast_to(det[:, None], (len(cells), nq))
        return x, inv_jt, det_j

    nodes = np.concatenate(
        [verts, mesh.edge_nodes[mesh.cell_edges[cells]]], axis=1)  # (nc,6,2)
    phi, dphi = elements.tabulate_basis(2, ref_points)
    x = np.einsum("qa,caj->cqj", phi, nodes)
    jac = np.einsum("cai,qaj->cqij", nodes, dphi)
    det_j = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if np.any(det_j <= 0.0):
        raise GeometryError("inverted isoparametric cell")
    inv_jt = np.empty_like(jac)
    inv_jt[..., 0, 0] = jac[..., 1, 1]
    inv_jt[..., 0, 1] = -jac[..., 1, 0]
    inv_jt[..., 1, 0] = -jac[..., 0, 1]
    inv_jt[..., 1, 1] = jac[..., 0, 0]
    inv_jt /= det_j[..., None, None]
    return x, inv_jt, det_j


def physical_gradients(dphi_ref, inv_jt):
    """Push reference gradients (nq, nb, 2) to physical (nc, nq, nb, 2)."""
    return np.einsum("cqij,qbj->cqbi", inv_jt, dphi_ref)


class FeFunction:
    """Coefficient vector bound to a mixed space."""

    def __init__(self, space, vec=None):
        self.space = space
        self.vec = space.zeros() if vec is None else np.asarray(vec, float)
        if self.vec.shape != (space.ndofs,):
            raise InvalidArgumentError("coefficient vector has wrong length")

    def copy(self):
        return FeFunction(self.space, self.vec.copy())

    def field_values(self, name):
        """Scalar-dof-ordered values, shape (ndofs_scalar, ncomp)."""
        f = self.space.field(name)
        block = self.vec[self.space.field_slice(name)]
        return block.reshape(-1, f.ncomp)

    def set_field(self, name, values):
        f = self.space.field(name)
        vals = np.asarray(values, dtype=float).reshape(-1, f.ncomp)
        self.vec[self.space.field_slice(name)] = vals.ravel()

    def interpolate(self, name, fn):
        """Set a field from ``fn(points) -> (n,) or (n, ncomp)`` values."""
        coords = self.space.dof_coords(name)
        vals = np.asarray(fn(coords), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        self.set_field(name, vals)

    def evaluate(self, name, points):
        """Point evaluation of one field; raises if a point is outside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cells, ref = locate_points(self.space.mesh, pts)
        f = self.space.field(name)
        vals = np.empty((len(pts), f.ncomp))
        dofs = self.space._scalar_cell_dofs[name][cells]
        coeff = self.field_values(name)[dofs]  # (np, nb, ncomp)
        for i in range(len(pts)):
            phi, _ = elements.tabulate_basis(f.degree, ref[i:i + 1])
            vals[i] = phi[0] @ coeff[i]
        return vals[:, 0] if f.ncomp == 1 else vals


def locate_points(mesh, points, tol=1e-8):
    """Find containing cells and reference coordinates for query points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v = mesh.vertices
    c = mesh.cells
    p0 = v[c[:, 0]]
    d1 = v[c[:, 1]] - p0
    d2 = v[c[:, 2]] - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    cells_out = np.empty(len(pts), dtype=np.int64)
    ref_out = np.empty((len(pts), 2))
    for i, p in enumerate(pts):
        rx = p[0] - p0[:, 0]
        ry = p[1] - p0[:, 1]
        a = (rx * d2[:, 1] - ry * d2[:, 0]) / det
        b = (ry * d1[:, 0] - rx * d1[:, 1]) / det
        score = np.minimum(np.minimum(a, b), 1.0 - a - b)
        best = int(np.argmax(score))
        if score[best] < -tol:
            raise PointLocationError(f"point {tuple(p)} is outside the mesh")
        cells_out[i] = best
        ref_out[i] = (a[best], b[best])
    if mesh.geometry_degree == 2:
        _newton_refine(mesh, pts, cells_out, ref_out)
    return cells_out, ref_out


def _newton_refine(mesh, pts, cells, ref, iters=4):
    for i in range(len(pts)):
        cell = cells[i:i + 1]
        for _ in range(iters):
            x, inv_jt, _ = cell_geometry(mesh, ref[i:i + 1], cell)
            err = pts[i] - x[0, 0]
            if np.abs(err).max() < 1e-13:
                break
            # inv_jt is J^{-T}; apply J^{-1} = inv_jt^T to the residual.
            ref[i] += inv_jt[0, 0].T @ err
