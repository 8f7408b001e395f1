"""Residual and Jacobian assembly for Stokes/energy problems.

The discrete system is the sum of volume, Neumann, weak-Dirichlet, weak-slip
and continuity-correction terms for the momentum/mass pair, plus a standard
Galerkin energy equation.  All boundary terms are derived from the problem's
viscous flux: the consistency term pairs the flux with the test trace, and the
symmetry/penalty terms are built from the flux's homogeneity tensor, so any
differentiable flux yields a consistent, adjoint-consistent method.

Kernels are evaluated batched over cells (or facets) at quadrature points.
Jacobians come from seeding every element-local dof with a forward-mode
derivative direction and pushing the seeds through the identical residual
code path; there are no hand-derived linearizations.
"""

import numpy as np
import scipy.sparse as sp

from . import elements
from .dual import Dual, dot_at_level, strip_level, value
from .errors import AssemblyError, InvalidArgumentError
from .flux import (
    boundary_state,
    flux_and_homogeneity,
    hyper_product,
    normal_projection,
    outer,
    penalty_coefficient,
    tangential_rejection,
    tensor_dot_vec,
)
from .mesh import facet_geometry, facet_lengths
from .quadrature import edge_rule, triangle_rule
from .spaces import cell_geometry, physical_gradients
from .viscosity import stokes_flux

_CELL_CHUNK = 2048
_ALL_TERMS = frozenset(
    ["momentum", "mass", "energy", "neumann", "weak_velocity"])


# ---------------------------------------------------------------------------
# boundary conditions


class StrongDirichlet:
    """Nodal elimination of velocity components on a marker.

    ``values`` is a callable ``(x, y) -> (u0, u1)`` (or a constant pair);
    ``components`` selects which components are pinned, so an axis-aligned
    free-slip wall is ``StrongDirichlet((0, 0), components=(1,))`` on a
    horizontal boundary.
    """

    def __init__(self, values=(0.0, 0.0), components=(0, 1)):
        self.values = values
        self.components = tuple(components)


class NitscheDirichlet:
    """Weakly imposed full-velocity data ``u = u_D``."""

    def __init__(self, data=(0.0, 0.0)):
        self.data = data


class NitscheSlip:
    """Weakly imposed impenetrability ``u·n = u_S·n`` with tangential
    traction data ``g_τ`` (its tangential projection is applied)."""

    def __init__(self, normal_data=(0.0, 0.0), tangential_traction=None):
        self.normal_data = normal_data
        self.tangential_traction = tangential_traction


class Neumann:
    """Prescribed traction ``F·n = g_N`` (natural when zero)."""

    def __init__(self, traction=(0.0, 0.0)):
        self.traction = traction


class TemperatureDirichlet:
    """Strong temperature data on a marker."""

    def __init__(self, data=0.0):
        self.data = data


def _eval_scalar(data, x, y):
    out = data(x, y) if callable(data) else data
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape)


def _eval_vector(data, x, y):
    out = data(x, y) if callable(data) else data
    if len(out) != 2:
        raise InvalidArgumentError("vector boundary data must have 2 entries")
    return [np.broadcast_to(np.asarray(c, dtype=float), x.shape) for c in out]


# ---------------------------------------------------------------------------
# problem definition


class ProblemDefinition:
    """Mesh, spaces, physics and boundary data of one assembled system.

    Parameters
    ----------
    mesh, space : Mesh, MixedSpace
        The space must contain a 2-component field ``u``; fields ``p`` and
        ``T`` are optional and switch the mass/energy equations on.
    viscosity_model : object with an ``eta`` method, optional
        Builds the default Stokes flux ``2 eta eps(u) - p I``.
    flux_factory : callable ``(T, y) -> flux``, optional
        Overrides the viscosity model with an arbitrary viscous flux;
        ``T``/``y`` are quadrature-point context values.
    c_ip : float
        Interior penalty constant for all weak velocity conditions.
    rayleigh, buoyancy : float, pair
        Momentum source ``Ra T k̂`` (needs a ``T`` field).
    momentum_source : callable ``(x, y) -> (f0, f1)``, optional
    kappa, heat_source : energy coefficients.
    velocity_bcs, temperature_bcs : dict marker -> condition
        Strong conditions are applied in insertion order (later markers win
        shared dofs).
    interior_velocity_bcs : dict marker -> NitscheDirichlet | NitscheSlip
        Conditions on marked interior facets; every registered side is
        assembled as an exterior-style one-sided term with its own normal.
    stokes_cells : bool array over cells, optional
        Restricts momentum/mass assembly to a subdomain (energy is always
        global); dofs outside it must be pinned via ``pinned``.
    pinned : (dofs, values), optional
        Extra strong constraints (e.g. a pressure pin on enclosed flows).
    """

    def __init__(self, mesh, space, viscosity_model=None, *, flux_factory=None,
                 c_ip=20.0, rayleigh=0.0, buoyancy=(0.0, 1.0),
                 momentum_source=None, kappa=1.0, heat_source=0.0,
                 velocity_bcs=None, temperature_bcs=None,
                 interior_velocity_bcs=None, stokes_cells=None, pinned=None,
                 quad_degree=None, facet_quad_degree=None):
        self.mesh = mesh
        self.space = space
        names = [f.name for f in space.fields]
        if "u" not in names or space.field("u").ncomp != 2:
            raise InvalidArgumentError("space needs a 2-component field 'u'")
        if viscosity_model is None and flux_factory is None:
            raise InvalidArgumentError(
                "either viscosity_model or flux_factory is required")
        self.viscosity_model = viscosity_model
        self._flux_factory = flux_factory
        self.c_ip = float(c_ip)
        self.rayleigh = float(rayleigh)
        self.buoyancy = tuple(float(c) for c in buoyancy)
        self.momentum_source = momentum_source
        self.kappa = float(kappa)
        self.heat_source = heat_source
        self.velocity_bcs = dict(velocity_bcs or {})
        self.temperature_bcs = dict(temperature_bcs or {})
        self.interior_velocity_bcs = dict(interior_velocity_bcs or {})
        if stokes_cells is not None:
            stokes_cells = np.asarray(stokes_cells, dtype=bool)
            if stokes_cells.shape != (len(mesh.cells),):
                raise InvalidArgumentError("stokes_cells must be a cell mask")
        self.stokes_cells = stokes_cells
        if pinned is not None:
            pinned = (np.asarray(pinned[0], dtype=np.int64),
                      np.asarray(pinned[1], dtype=float))
        self.pinned = pinned
        deg = max(f.degree for f in space.fields)
        self.quad_degree = quad_degree or 2 * deg + 1
        self.facet_quad_degree = facet_quad_degree or 2 * deg + 2
        self.velocity_degree = space.field("u").degree
        for marker, bc in self.interior_velocity_bcs.items():
            if isinstance(bc, (StrongDirichlet, Neumann)):
                raise InvalidArgumentError(
                    "interior facet conditions must be Nitsche variants")

    def flux_at(self, T=None, y=None, freeze=False):
        """The problem's viscous flux bound to quadrature-point context.

        With ``freeze=True`` the viscosity sees value-stripped strain and
        temperature, so the returned flux is linear in (grad u, p): the
        Picard linearization of the Newton flux.
        """
        if self._flux_factory is not None:
            if freeze:
                raise InvalidArgumentError(
                    "picard linearization needs a viscosity model, "
                    "not a raw flux_factory")
            return self._flux_factory(T, y)
        model = _FrozenEta(self.viscosity_model) if freeze \
            else self.viscosity_model
        return stokes_flux(model, T=T, y=y)

    # -- strong conditions ---------------------------------------------

    def strong_constraints(self):
        """(dofs, values) of all strong conditions, later entries winning."""
        space = self.space
        dofs, vals = [], []
        for marker, bc in self.velocity_bcs.items():
            if not isinstance(bc, StrongDirichlet):
                continue
            sd = self._marker_scalar_dofs("u", marker)
            coords = space.dof_coords("u")[sd]
            data = _eval_vector(bc.values, coords[:, 0], coords[:, 1])
            off = space.offsets["u"]
            for comp in bc.components:
                dofs.append(off + 2 * sd + comp)
                vals.append(data[comp])
        for marker, bc in self.temperature_bcs.items():
            if not isinstance(bc, TemperatureDirichlet):
                continue
            sd = self._marker_scalar_dofs("T", marker)
            coords = space.dof_coords("T")[sd]
            dofs.append(space.offsets["T"] + sd)
            vals.append(_eval_scalar(bc.data, coords[:, 0], coords[:, 1]))
        if self.pinned is not None:
            dofs.append(self.pinned[0])
            vals.append(self.pinned[1])
        if not dofs:
            return (np.empty(0, dtype=np.int64), np.empty(0))
        dofs = np.concatenate(dofs)
        vals = np.concatenate(vals)
        # keep the last assignment per dof
        rev_dofs = dofs[::-1]
        uniq, first = np.unique(rev_dofs, return_index=True)
        return uniq, vals[::-1][first]

    def _marker_scalar_dofs(self, name, marker):
        cells, locs = self.mesh.facets_with_marker(marker)
        gd = self.space.facet_closure_dofs(name, cells, locs, comps=(0,))
        off = self.space.offsets[name]
        f = self.space.field(name)
        return np.unique((gd - off) // f.ncomp)

    def apply_strong_bcs(self, w):
        """Overwrite constrained entries of ``w`` with their data values."""
        dofs, vals = self.strong_constraints()
        w[dofs] = vals
        return w


class _FrozenEta:
    """Viscosity wrapper that drops derivative information from its inputs,
    lagging eta at the current state."""

    def __init__(self, model):
        self.model = model

    def eta(self, e00, e01, e11, T=None, y=None):
        return self.model.eta(value(e00), value(e01), value(e11),
                              T=None if T is None else value(T), y=y)


# ---------------------------------------------------------------------------
# batched field states and local accumulation


class _Tab:
    """Basis tabulation of one field at a set of reference points, plus the
    element-local dof indices of each (node, component) pair."""

    def __init__(self, field, points, lsl):
        self.field = field
        self.phi, self.dphi = elements.tabulate_basis(field.degree, points)
        self.nb = self.phi.shape[1]
        base = lsl.start + field.ncomp * np.arange(self.nb)
        self.local = [base + c for c in range(field.ncomp)]


class _States:
    """Values and gradients of every field at quadrature points of a cell
    batch.  Fields named in ``seed`` become level-1 duals carrying one
    derivative direction per element-local dof, so any expression built from
    them yields its element Jacobian rows for free."""

    def __init__(self, space, w, cells, points, inv_jt, seed):
        self.space = space
        self.nlocal = space.nlocal
        nc, nq = inv_jt.shape[:2]
        self.shape = (nc, nq)
        self.cell_dofs = space.cell_dofs[cells]
        self.tabs = {}
        self.pg = {}
        self.val = {}
        self.grad = {}
        for f in space.fields:
            tab = _Tab(f, points, space.local_slices[f.name])
            self.tabs[f.name] = tab
            pg = physical_gradients(tab.dphi, inv_jt)  # (nc, nq, nb, 2)
            self.pg[f.name] = pg
            block = w[self.cell_dofs[:, space.local_slices[f.name]]]
            vals, grads = [], []
            for c in range(f.ncomp):
                dofs = block[:, c::f.ncomp]  # (nc, nb)
                v = dofs @ tab.phi.T
                g = np.einsum("ca,cqak->cqk", dofs, pg)
                if f.name in seed:
                    dv = np.zeros((self.nlocal, 1, nq))
                    dv[tab.local[c], 0, :] = tab.phi.T
                    dg = np.zeros((self.nlocal, nc, nq, 2))
                    dg[tab.local[c]] = np.moveaxis(pg, 2, 0)
                    v = Dual(v, dv)
                    grads.append([Dual(g[..., 0], dg[..., 0]),
                                  Dual(g[..., 1], dg[..., 1])])
                else:
                    grads.append([g[..., 0], g[..., 1]])
                vals.append(v)
            self.val[f.name] = vals
            self.grad[f.name] = grads


def _is_zero(x):
    return isinstance(x, (int, float)) and x == 0.0


class _Accumulator:
    """Adds weighted integrand x test-function products into element-local
    residual and Jacobian blocks (the Jacobian rows come from the
    integrand's dof-seeded derivative axis)."""

    def __init__(self, states, weight, r_loc, j_loc):
        self.st = states
        self.weight = weight  # (nc, nq) quadrature weights x measure
        self.r_loc = r_loc
        self.j_loc = j_loc

    def phi(self, name, comp, integrand):
        """Accumulate integral of ``integrand * phi_a`` into tests
        ``(a, comp)`` of field ``name``."""
        if _is_zero(integrand):
            return
        tab = self.st.tabs[name]
        idx = tab.local[comp]
        v = np.broadcast_to(strip_level(integrand, 1), self.weight.shape)
        self.r_loc[:, idx] += (v * self.weight) @ tab.phi
        if self.j_loc is None:
            return
        d = dot_at_level(integrand, 1)
        if _is_zero(d):
            return
        d = np.broadcast_to(d, (self.st.nlocal,) + self.weight.shape)
        self.j_loc[:, idx, :] += np.einsum(
            "bcq,qa->cab", d * self.weight, tab.phi, optimize=True)

    def grad(self, name, comp, t0, t1):
        """Accumulate integral of ``t_k * d_k phi_a`` into tests
        ``(a, comp)`` of field ``name``."""
        if _is_zero(t0) and _is_zero(t1):
            return
        tab = self.st.tabs[name]
        pg = self.st.pg[name]
        idx = tab.local[comp]
        shape = self.weight.shape
        vw = np.stack([np.broadcast_to(strip_level(t0, 1), shape),
                       np.broadcast_to(strip_level(t1, 1), shape)],
                      axis=-1) * self.weight[..., None]
        self.r_loc[:, idx] += np.einsum("cqk,cqak->ca", vw, pg)
        if self.j_loc is None:
            return
        d0 = dot_at_level(t0, 1)
        d1 = dot_at_level(t1, 1)
        if _is_zero(d0) and _is_zero(d1):
            return
        shape = (self.st.nlocal,) + shape
        dw = np.stack([np.broadcast_to(d0, shape),
                       np.broadcast_to(d1, shape)],
                      axis=-1) * self.weight[..., None]
        self.j_loc[:, idx, :] += np.einsum("bcqk,cqak->cab", dw, pg,
                                           optimize=True)


def _scatter(rows, r_loc, j_loc, r, coo):
    if not np.all(np.isfinite(r_loc)):
        raise AssemblyError("non-finite residual contribution")
    np.add.at(r, rows.ravel(), r_loc.ravel())
    if j_loc is None:
        return
    if not np.all(np.isfinite(j_loc)):
        raise AssemblyError("non-finite Jacobian contribution")
    i = np.broadcast_to(rows[:, :, None], j_loc.shape)
    j = np.broadcast_to(rows[:, None, :], j_loc.shape)
    coo[0].append(i.ravel().astype(np.int32))
    coo[1].append(j.ravel().astype(np.int32))
    coo[2].append(j_loc.ravel())


# ---------------------------------------------------------------------------
# kernels


def _volume_kernel(problem, w, seed, freeze, terms, r, coo):
    mesh, space = problem.mesh, problem.space
    names = {f.name for f in space.fields}
    do_mom = "momentum" in terms
    do_mass = "mass" in terms and "p" in names
    do_energy = "energy" in terms and "T" in names
    if not (do_mom or do_mass or do_energy):
        return
    pts, wts = triangle_rule(problem.quad_degree)
    ncells = len(mesh.cells)
    for start in range(0, ncells, _CELL_CHUNK):
        cells = np.arange(start, min(start + _CELL_CHUNK, ncells))
        x, inv_jt, det = cell_geometry(mesh, pts, cells)
        wq = det * wts
        st = _States(space, w, cells, pts, inv_jt, seed)
        r_loc = np.zeros((len(cells), space.nlocal))
        j_loc = None if coo is None else \
            np.zeros((len(cells), space.nlocal, space.nlocal))
        if problem.stokes_cells is None:
            w_st = wq
        else:
            w_st = wq * problem.stokes_cells[cells][:, None]
        acc_st = _Accumulator(st, w_st, r_loc, j_loc)
        acc = _Accumulator(st, wq, r_loc, j_loc)
        u = st.val["u"]
        gu = st.grad["u"]
        tq = st.val["T"][0] if "T" in names else None
        if do_mom:
            pq = st.val["p"][0] if "p" in names else 0.0
            fl = problem.flux_at(T=tq, y=x[..., 1], freeze=freeze)
            fv = fl(u, gu, pq)
            f0, f1 = 0.0, 0.0
            if problem.momentum_source is not None:
                f0, f1 = _eval_vector(
                    problem.momentum_source, x[..., 0], x[..., 1])
            if problem.rayleigh != 0.0 and tq is not None:
                if problem.buoyancy[0] != 0.0:
                    f0 = f0 + problem.rayleigh * problem.buoyancy[0] * tq
                if problem.buoyancy[1] != 0.0:
                    f1 = f1 + problem.rayleigh * problem.buoyancy[1] * tq
            for c in (0, 1):
                acc_st.grad("u", c, fv[c][0], fv[c][1])
            acc_st.phi("u", 0, -1.0 * f0)
            acc_st.phi("u", 1, -1.0 * f1)
        if do_mass:
            acc_st.phi("p", 0, gu[0][0] + gu[1][1])
        if do_energy:
            gt = st.grad["T"][0]
            acc.grad("T", 0, problem.kappa * gt[0], problem.kappa * gt[1])
            q = problem.heat_source
            if callable(q):
                q = _eval_scalar(q, x[..., 0], x[..., 1])
            acc.phi("T", 0, u[0] * gt[0] + u[1] * gt[1] - q)
        _scatter(st.cell_dofs, r_loc, j_loc, r, coo)


def _facet_kernel(problem, w, seed, freeze, terms, r, coo, bc_types=None):
    mesh = problem.mesh
    names = {f.name for f in problem.space.fields}
    do_neu = "neumann" in terms
    do_weak = "weak_velocity" in terms
    do_mass = "mass" in terms and "p" in names
    groups = [(marker, bc, False) for marker, bc in problem.velocity_bcs.items()]
    groups += [(marker, bc, True)
               for marker, bc in problem.interior_velocity_bcs.items()]
    for marker, bc, interior in groups:
        if isinstance(bc, StrongDirichlet):
            continue
        if bc_types is not None and not isinstance(bc, bc_types):
            continue
        if isinstance(bc, Neumann):
            if not do_neu:
                continue
        elif not (do_weak or do_mass):
            continue
        if interior:
            cells, locs = mesh.interior_facets_with_marker(marker)
        else:
            cells, locs = mesh.facets_with_marker(marker)
        for le in (0, 1, 2):
            sel = np.nonzero(locs == le)[0]
            if sel.size:
                _facet_batch(problem, w, bc, cells[sel], le, seed, freeze,
                             do_weak, do_mass, r, coo)


def _facet_batch(problem, w, bc, cells, local_edge, seed, freeze,
                 do_weak, do_mass, r, coo):
    mesh, space = problem.mesh, problem.space
    t, wt = edge_rule(problem.facet_quad_degree)
    ref = elements.edge_to_ref(local_edge, t)
    locs = np.full(cells.shape, local_edge)
    xf, nrm, meas = facet_geometry(mesh, cells, locs, t)
    wq = meas * wt
    _, inv_jt, _ = cell_geometry(mesh, ref, cells)
    st = _States(space, w, cells, ref, inv_jt, seed)
    r_loc = np.zeros((len(cells), space.nlocal))
    j_loc = None if coo is None else \
        np.zeros((len(cells), space.nlocal, space.nlocal))
    acc = _Accumulator(st, wq, r_loc, j_loc)
    xq, yq = xf[..., 0], xf[..., 1]
    if isinstance(bc, Neumann):
        g = _eval_vector(bc.traction, xq, yq)
        acc.phi("u", 0, -1.0 * g[0])
        acc.phi("u", 1, -1.0 * g[1])
        _scatter(st.cell_dofs, r_loc, j_loc, r, coo)
        return
    n = [nrm[..., 0], nrm[..., 1]]
    u = st.val["u"]
    gu = st.grad["u"]
    slip = isinstance(bc, NitscheSlip)
    if slip:
        u_gamma = boundary_state("slip", u, _eval_vector(bc.normal_data,
                                                         xq, yq), n)
    else:
        u_gamma = boundary_state("dirichlet", u, _eval_vector(bc.data,
                                                              xq, yq), n)
    # for slip data, u - u_gamma is automatically the normal deviation
    d = [u[0] - u_gamma[0], u[1] - u_gamma[1]]
    if do_weak:
        tq = st.val["T"][0] if "T" in st.val else None
        pq = st.val["p"][0] if "p" in st.val else 0.0
        fl = problem.flux_at(T=tq, y=yq, freeze=freeze)
        fv, hom = flux_and_homogeneity(fl, u_gamma, gu, pq)
        m1 = hyper_product(hom, outer(d, n))
        fn = tensor_dot_vec(fv, n)
        pen = tensor_dot_vec(m1, n)
        if slip:
            fn = normal_projection(n, fn)
            pen = normal_projection(n, pen)
        h = facet_lengths(mesh, cells, locs)
        delta = penalty_coefficient(
            problem.c_ip, problem.velocity_degree, h)[:, None]
        for c in (0, 1):
            acc.phi("u", c, -1.0 * fn[c])          # consistency
            acc.grad("u", c, -1.0 * m1[c][0], -1.0 * m1[c][1])  # symmetry
            acc.phi("u", c, delta * pen[c])        # penalty
        if slip and bc.tangential_traction is not None:
            g = tangential_rejection(
                n, _eval_vector(bc.tangential_traction, xq, yq))
            acc.phi("u", 0, -1.0 * g[0])
            acc.phi("u", 1, -1.0 * g[1])
    if do_mass:
        acc.phi("p", 0, -1.0 * (d[0] * n[0] + d[1] * n[1]))
    _scatter(st.cell_dofs, r_loc, j_loc, r, coo)


# ---------------------------------------------------------------------------
# public assembly entry points


def _run(problem, w, seed, freeze, terms, want_matrix, bc_types=None):
    w = np.asarray(w, dtype=float)
    r = np.zeros(problem.space.ndofs)
    coo = ([], [], []) if want_matrix else None
    _volume_kernel(problem, w, seed, freeze, terms, r, coo)
    _facet_kernel(problem, w, seed, freeze, terms, r, coo, bc_types)
    return r, coo


def _constraints(problem, w, active):
    dofs, vals = problem.strong_constraints()
    inactive = [f.name for f in problem.space.fields if f.name not in active]
    if inactive:
        extra = np.concatenate([
            np.arange(problem.space.field_slice(n).start,
                      problem.space.field_slice(n).stop)
            for n in inactive])
        # inactive fields are held at their current values (appended last so
        # they win over any strong data on the same dofs)
        dofs = np.concatenate([dofs, extra])
        vals = np.concatenate([vals, w[extra]])
        rev = dofs[::-1]
        uniq, first = np.unique(rev, return_index=True)
        dofs, vals = uniq, vals[::-1][first]
    return dofs, vals


def assemble_system(problem, w, linearize="newton", active=None):
    """Residual vector and Jacobian matrix at state ``w``.

    ``linearize="picard"`` lags the viscosity at the current state;
    ``active`` restricts the unknowns (other fields' dofs are held fixed
    by identity rows), which is how alternating solvers freeze fields.
    Strong constraints are eliminated symmetrically: constrained rows become
    ``w_k - data_k = 0`` identity rows and constrained columns are dropped,
    which is exact once ``w`` satisfies the constraints.

    Returns ``(r, A)`` with ``A`` in CSR format.
    """
    if linearize not in ("newton", "picard"):
        raise InvalidArgumentError(f"unknown linearization: {linearize!r}")
    if active is None:
        active = tuple(f.name for f in problem.space.fields)
    w = np.asarray(w, dtype=float)
    r, coo = _run(problem, w, tuple(active), linearize == "picard",
                  _ALL_TERMS, True)
    dofs, vals = _constraints(problem, w, active)
    ndofs = problem.space.ndofs
    i = np.concatenate(coo[0]) if coo[0] else np.empty(0, np.int32)
    j = np.concatenate(coo[1]) if coo[1] else np.empty(0, np.int32)
    v = np.concatenate(coo[2]) if coo[2] else np.empty(0)
    if dofs.size:
        pin = np.zeros(ndofs, dtype=bool)
        pin[dofs] = True
        r[dofs] = w[dofs] - vals
        keep = ~(pin[i] | pin[j])
        i, j, v = i[keep], j[keep], v[keep]
        i = np.concatenate([i, dofs.astype(np.int32)])
        j = np.concatenate([j, dofs.astype(np.int32)])
        v = np.concatenate([v, np.ones(dofs.size)])
    a = sp.csr_matrix((v, (i, j)), shape=(ndofs, ndofs))
    return r, a


def assemble_residual(problem, w, active=None):
    """Residual vector at ``w`` including strong-constraint rows."""
    if active is None:
        active = tuple(f.name for f in problem.space.fields)
    w = np.asarray(w, dtype=float)
    r, _ = _run(problem, w, (), False, _ALL_TERMS, False)
    dofs, vals = _constraints(problem, w, active)
    if dofs.size:
        r[dofs] = w[dofs] - vals
    return r


def volume_residual(problem, w):
    """Momentum volume terms ``(F, grad v) - (f, v)`` only (no constraint
    rows), mainly for verification against known element matrices."""
    return _run(problem, w, (), False, {"momentum"}, False)[0]


def mass_residual(problem, w):
    """Continuity terms ``(div u, q)`` minus the weak-boundary correction
    ``((u - u_gamma) . n, q)``."""
    return _run(problem, w, (), False, {"mass"}, False)[0]


def energy_residual(problem, w):
    """Energy terms ``(kappa grad T, grad s) + (u . grad T - Q, s)``."""
    return _run(problem, w, (), False, {"energy"}, False)[0]


def neumann_residual(problem, w):
    """Traction boundary terms ``-(g_N, v)``."""
    return _run(problem, w, (), False, {"neumann"}, False)[0]


def nitsche_dirichlet_residual(problem, w):
    """Weak Dirichlet boundary terms (consistency, symmetry, penalty)."""
    return _run(problem, w, (), False, {"weak_velocity"}, False,
                bc_types=NitscheDirichlet)[0]


def nitsche_slip_residual(problem, w):
    """Weak free/prescribed-slip boundary terms."""
    return _run(problem, w, (), False, {"weak_velocity"}, False,
                bc_types=NitscheSlip)[0]
