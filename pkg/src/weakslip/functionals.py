"""Scalar diagnostics of convection states.

All quantities follow the usual mantle-convection conventions on a
rectangular box: Nusselt numbers are boundary heat fluxes normalized by the
basal temperature integral, the rms velocities are root mean squares over
the volume and the top surface, and the dissipation/work pair feeds the
steady-state power balance ``<Phi> = Ra <W>`` used as a consistency check.
"""

from dataclasses import dataclass

import numpy as np

from . import elements
from .errors import PointLocationError
from .mesh import facet_geometry
from .quadrature import edge_rule, triangle_rule
from .spaces import cell_geometry, locate_points, physical_gradients


@dataclass
class FunctionalReport:
    nu_top: float
    nu_bottom: float
    mean_temperature: float
    u_rms: float
    u_rms_surface: float
    mean_dissipation: float
    mean_work: float
    corner_flux: tuple

    def as_dict(self):
        out = {
            "nu_top": self.nu_top,
            "nu_bottom": self.nu_bottom,
            "mean_temperature": self.mean_temperature,
            "u_rms": self.u_rms,
            "u_rms_surface": self.u_rms_surface,
            "mean_dissipation": self.mean_dissipation,
            "mean_work": self.mean_work,
        }
        for i, q in enumerate(self.corner_flux, start=1):
            out[f"corner_flux_{i}"] = q
        return out


def _field_at_points(space, w, name, cells, ref, inv_jt):
    """Values and gradients of one field on given cells/reference points."""
    f = space.field(name)
    phi, dphi = elements.tabulate_basis(f.degree, ref)
    pg = physical_gradients(dphi, inv_jt)
    block = w[space.cell_dofs[cells][:, space.local_slices[name]]]
    vals, grads = [], []
    for c in range(f.ncomp):
        dofs = block[:, c::f.ncomp]
        vals.append(dofs @ phi.T)
        grads.append(np.einsum("ca,cqak->cqk", dofs, pg))
    return vals, grads


def _boundary_integrals(problem, w, marker):
    """(integral of T, integral of grad T . n, integral of |u|^2, length)."""
    mesh, space = problem.mesh, problem.space
    t, wt = edge_rule(problem.facet_quad_degree)
    cells, locs = mesh.facets_with_marker(marker)
    int_t = int_flux = int_u2 = length = 0.0
    for le in (0, 1, 2):
        sel = np.nonzero(locs == le)[0]
        if not sel.size:
            continue
        cb, lb = cells[sel], locs[sel]
        ref = elements.edge_to_ref(le, t)
        _, nrm, meas = facet_geometry(mesh, cb, lb, t)
        _, inv_jt, _ = cell_geometry(mesh, ref, cb)
        wq = meas * wt
        length += wq.sum()
        uv, _ = _field_at_points(space, w, "u", cb, ref, inv_jt)
        int_u2 += ((uv[0] ** 2 + uv[1] ** 2) * wq).sum()
        if "T" in space.offsets:
            tv, tg = _field_at_points(space, w, "T", cb, ref, inv_jt)
            int_t += (tv[0] * wq).sum()
            dtdn = tg[0][..., 0] * nrm[..., 0] + tg[0][..., 1] * nrm[..., 1]
            int_flux += (dtdn * wq).sum()
    return int_t, int_flux, int_u2, length


def _corner_fluxes(problem, w, corners, normals):
    """One-sided ``grad T . n`` evaluated from the cell touching each
    corner."""
    mesh, space = problem.mesh, problem.space
    out = []
    for (px, py), nvec in zip(corners, normals):
        try:
            cell, ref = locate_points(mesh, np.array([[px, py]]))
        except PointLocationError:
            out.append(np.nan)
            continue
        _, inv_jt, _ = cell_geometry(mesh, ref, cell)
        _, tg = _field_at_points(space, w, "T", cell, ref, inv_jt)
        out.append(float(tg[0][0, 0, 0] * nvec[0] + tg[0][0, 0, 1] * nvec[1]))
    return tuple(out)


def compute_functionals(problem, w, *, top_marker=4, bottom_marker=3):
    """Evaluate the report for a state on a rectangular convection box.

    The corner fluxes are ordered bottom-left, bottom-right, top-left,
    top-right and use the outward normal of the horizontal wall each corner
    sits on.
    """
    mesh, space = problem.mesh, problem.space
    w = np.asarray(w, dtype=float)
    pts, wts = triangle_rule(problem.quad_degree)
    has_t = "T" in space.offsets
    vol = int_t = int_u2 = int_phi = int_w = 0.0
    ncells = len(mesh.cells)
    chunk = 4096
    for start in range(0, ncells, chunk):
        cells = np.arange(start, min(start + chunk, ncells))
        x, inv_jt, det = cell_geometry(mesh, pts, cells)
        wq = det * wts
        vol += wq.sum()
        uv, ug = _field_at_points(space, w, "u", cells, pts, inv_jt)
        int_u2 += ((uv[0] ** 2 + uv[1] ** 2) * wq).sum()
        tq = None
        if has_t:
            tv, _ = _field_at_points(space, w, "T", cells, pts, inv_jt)
            tq = tv[0]
            int_t += (tq * wq).sum()
            int_w += (tq * uv[1] * wq).sum()
        grad = [[ug[0][..., 0], ug[0][..., 1]],
                [ug[1][..., 0], ug[1][..., 1]]]
        pq = 0.0
        if "p" in space.offsets:
            pv, _ = _field_at_points(space, w, "p", cells, pts, inv_jt)
            pq = pv[0]
        fl = problem.flux_at(T=tq, y=x[..., 1])
        fv = fl(uv, grad, pq)
        # dissipation from the deviatoric part: (F + p I) : eps(u)
        e00, e11 = grad[0][0], grad[1][1]
        e01 = 0.5 * (grad[0][1] + grad[1][0])
        phi_q = ((fv[0][0] + pq) * e00 + (fv[1][1] + pq) * e11
                 + (fv[0][1] + fv[1][0]) * e01)
        int_phi += (phi_q * wq).sum()
    bot_t, bot_flux, _, _ = _boundary_integrals(problem, w, bottom_marker)
    _, top_flux, top_u2, top_len = _boundary_integrals(problem, w,
                                                       top_marker)
    nu_top = abs(top_flux / bot_t) if has_t and bot_t != 0.0 else np.nan
    nu_bottom = abs(bot_flux / bot_t) if has_t and bot_t != 0.0 else np.nan
    xmin, ymin = mesh.vertices.min(axis=0)
    xmax, ymax = mesh.vertices.max(axis=0)
    corners = ((xmin, ymin), (xmax, ymin), (xmin, ymax), (xmax, ymax))
    normals = ((0.0, -1.0), (0.0, -1.0), (0.0, 1.0), (0.0, 1.0))
    corner = _corner_fluxes(problem, w, corners, normals) if has_t \
        else (np.nan,) * 4
    return FunctionalReport(
        nu_top=float(nu_top),
        nu_bottom=float(nu_bottom),
        mean_temperature=float(int_t / vol) if has_t else np.nan,
        u_rms=float(np.sqrt(int_u2 / vol)),
        u_rms_surface=float(np.sqrt(top_u2 / top_len)),
        mean_dissipation=float(int_phi / vol),
        mean_work=float(int_w / vol) if has_t else np.nan,
        corner_flux=corner,
    )
