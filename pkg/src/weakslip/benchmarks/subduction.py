"""Kinematic subduction-zone thermal structure benchmark.

A slab descends at unit speed under a rigid plate, dragging a viscous
corner flow in the mantle wedge; the steady energy balance between slab
advection and conductive heating from the wedge sets the temperature along
the interface.  Momentum is solved in the slab and wedge only (the plate
is pinned), driven entirely by boundary data: prescribed inflow on the
left edge, the downdip tangent on the interface above the plate base, and
on the deeper interface either prescribed tangential velocity or free
slip, both imposed weakly from the two adjacent sides.  The energy
equation is global, so the plate conducts while slab and wedge advect.

Lengths are kilometres, velocities multiples of the 5 cm/yr convergence
speed, temperatures Kelvin; the diffusivity is nondimensionalized with the
same scales.  Cases: constant viscosity (1c), diffusion creep (2a) and
dislocation creep (2b), the creep laws evaluated in Pa s and rescaled by
1e21.
"""

import numpy as np
from scipy.special import erf

from ..elements import edge_to_ref, tabulate_basis
from ..errors import InvalidArgumentError
from ..forms import (NitscheDirichlet, NitscheSlip, ProblemDefinition,
                     StrongDirichlet, TemperatureDirichlet)
from ..functionals import compute_functionals
from ..mesh import facet_geometry
from ..nonlinear import solve_problem
from ..quadrature import edge_rule
from ..spaces import FeFunction, MixedSpace, locate_points
from ..viscosity import Constant, DiffusionCreep, DislocationCreep
from .subduction_mesh import (REGION_PLATE, SubductionGeometry,
                              generate_subduction_mesh, interface_sides)

T_SURFACE = 273.0
T_MANTLE = 1573.0

YEAR = 365.0 * 24.0 * 3600.0            # s
SPEED_SCALE = 0.05 / YEAR               # 5 cm/yr in m/s
KAPPA_M2S = 0.7272e-6                   # thermal diffusivity, m^2/s
KAPPA_ND = KAPPA_M2S / (1e3 * SPEED_SCALE)   # km / (5 cm/yr) units
AGE_50MYR = 50.0e6 * YEAR

CASES = {"1c": Constant, "2a": DiffusionCreep, "2b": DislocationCreep}


def inflow_temperature(y):
    """Half-space cooling profile of the incoming 50 Myr plate (y in km)."""
    depth_m = -1e3 * np.asarray(y, dtype=float)
    arg = depth_m / (2.0 * np.sqrt(KAPPA_M2S * AGE_50MYR))
    return T_SURFACE + (T_MANTLE - T_SURFACE) * erf(arg)


def overriding_temperature(y):
    """Linear geotherm through the plate, mantle temperature below it."""
    y = np.asarray(y, dtype=float)
    return np.where(y >= -50.0, T_SURFACE - 26.0 * y, T_MANTLE)


def build_problem(mesh, geom, case="1c", slab_bc="velocity", c_ip=20.0):
    """Problem and initial state on a conforming subduction mesh."""
    if case not in CASES:
        raise InvalidArgumentError(f"unknown subduction case {case!r}")
    if slab_bc not in ("velocity", "freeslip"):
        raise InvalidArgumentError(f"unknown slab condition {slab_bc!r}")
    space = MixedSpace(mesh, [("u", 2, 2), ("p", 0, 1), ("T", 1, 1)])

    def tangent(x, y):
        tau = geom.downdip_tangent(np.asarray(x, dtype=float))
        return tau[..., 0], tau[..., 1]

    if geom.slab_shape == "straight":
        u_in = (np.cos(geom.alpha), -np.sin(geom.alpha))
    else:
        u_in = (1.0, 0.0)       # -n: the curve enters horizontally

    if slab_bc == "velocity":
        interface_bc = NitscheDirichlet(tangent)
    else:
        interface_bc = NitscheSlip()

    # Strong velocity data, later entries overwriting earlier ones on
    # shared dofs: the whole plate is pinned, the interface above the
    # plate base moves with the slab, and the plate base (including the
    # corner node, deliberately last) is welded to the plate.
    off_u = space.offsets["u"]
    plate_cells = np.flatnonzero(mesh.region_markers == REGION_PLATE)
    dofs = [np.unique(space.cell_dofs[plate_cells][
        :, space.local_slices["u"]])]
    vals = [np.zeros(dofs[0].size)]
    dofs.append(np.unique(space.cell_dofs[plate_cells][
        :, space.local_slices["p"]]))
    vals.append(np.zeros(plate_cells.size))

    ci, li = interface_sides(mesh, geom, below_plate=False)
    gd = space.facet_closure_dofs("u", ci, li, comps=(0,))
    upper = np.unique((gd - off_u) // 2)
    ux, uy = tangent(space.dof_coords("u")[upper, 0], None)
    dofs += [off_u + 2 * upper, off_u + 2 * upper + 1]
    vals += [ux, uy]

    xy = space.dof_coords("u")
    tol = 1e-6 * geom.Z
    base = np.flatnonzero((np.abs(xy[:, 1] + geom.Z_plate) < tol)
                          & (xy[:, 0] > geom.x_corner - tol))
    dofs += [off_u + 2 * base, off_u + 2 * base + 1]
    vals += [np.zeros(base.size), np.zeros(base.size)]

    problem = ProblemDefinition(
        mesh, space, CASES[case](),
        c_ip=c_ip,
        kappa=KAPPA_ND,
        velocity_bcs={"inlet": StrongDirichlet(u_in)},
        interior_velocity_bcs={"interface": interface_bc},
        temperature_bcs={
            "top": TemperatureDirichlet(T_SURFACE),
            "inlet": TemperatureDirichlet(lambda x, y: inflow_temperature(y)),
            "right_plate": TemperatureDirichlet(
                lambda x, y: overriding_temperature(y)),
            "right_wedge": TemperatureDirichlet(T_MANTLE),
        },
        stokes_cells=mesh.region_markers != REGION_PLATE,
        pinned=(np.concatenate(dofs), np.concatenate(vals)),
    )
    w0 = FeFunction(space)
    w0.interpolate("T", lambda p: overriding_temperature(p[:, 1]))
    return problem, w0.vec


def temperature_at(problem, w, points):
    """Pointwise temperature probe (continuous across all regions)."""
    cells, ref = locate_points(problem.mesh, np.asarray(points, dtype=float))
    space = problem.space
    phi, _ = tabulate_basis(space.field("T").degree, ref)
    block = w[space.cell_dofs[cells][:, space.local_slices["T"]]]
    return np.einsum("pb,pb->p", block, phi)


def slip_penetration(problem, w):
    """Largest ``|u . n|`` over interface quadrature points."""
    mesh, space = problem.mesh, problem.space
    cells, locs = mesh.interior_facets_with_marker("interface")
    t, _ = edge_rule(problem.facet_quad_degree)
    worst = 0.0
    for le in (0, 1, 2):
        sel = np.nonzero(locs == le)[0]
        if not sel.size:
            continue
        ref = edge_to_ref(le, t)
        _, nrm, _ = facet_geometry(mesh, cells[sel], locs[sel], t)
        phi, _ = tabulate_basis(space.field("u").degree, ref)
        block = w[space.cell_dofs[cells[sel]][:, space.local_slices["u"]]]
        uq = [block[:, c::2] @ phi.T for c in (0, 1)]
        worst = max(worst, float(np.abs(
            uq[0] * nrm[..., 0] + uq[1] * nrm[..., 1]).max()))
    return worst


def probe_report(problem, w, geom):
    """Interface probe and the RMS norms of the benchmark's probe grids.

    The grid is ``xi_ij = (6(i-1), -6(j-1))`` km; all temperatures are
    reported relative to the surface.  The slab norm runs down the grid
    diagonal (36 points), the wedge norm over the triangle i = 10..21,
    j = 10..i (78 points).  Curved geometry adds the interface probe at
    60 km depth.
    """
    out = {}
    out["t_11_11"] = float(
        temperature_at(problem, w, [(60.0, -60.0)])[0]) - T_SURFACE
    diag = [(6.0 * i, -6.0 * i) for i in range(36)]
    out["slab_norm"] = float(np.sqrt(np.mean(
        (temperature_at(problem, w, diag) - T_SURFACE) ** 2)))
    tri = [(6.0 * (i - 1), -6.0 * (j - 1))
           for i in range(10, 22) for j in range(10, i + 1)]
    out["wedge_norm"] = float(np.sqrt(np.mean(
        (temperature_at(problem, w, tri) - T_SURFACE) ** 2)))
    if geom.slab_shape == "curved":
        x_slab = geom.Z * (60.0 / geom.Z) ** (1.0 / geom.n_slab)
        out["t_slab_60"] = float(
            temperature_at(problem, w, [(x_slab, -60.0)])[0]) - T_SURFACE
    return out


def run_subduction(case="1c", slab_bc="velocity", slab_shape="straight",
                   h_coarse=35.0, h_slab=0.23, grading=0.105, c_ip=20.0,
                   mesh=None, geom=None, picard_iters=None, **newton_kw):
    """Solve one subduction case and collect probes and functionals.

    A prebuilt (possibly refined) conforming mesh can be passed in place
    of the sizing parameters.  Returns ``(problem, result, row)``.
    """
    if geom is None:
        geom = SubductionGeometry(slab_shape=slab_shape)
    if mesh is None:
        mesh = generate_subduction_mesh(geom, h_coarse=h_coarse,
                                        h_slab=h_slab, grading=grading)
    problem, w0 = build_problem(mesh, geom, case=case, slab_bc=slab_bc,
                                c_ip=c_ip)
    if picard_iters is None:
        # One sweep closes the linear one-way coupling of 1c; the creep
        # laws need lagged-viscosity cycling before Newton contracts.
        picard_iters = 2 if case == "1c" else 12
    kw = dict(abs_tol=1e-8, rel_tol=1e-12, max_iter=40, backtrack=True)
    kw.update(newton_kw)
    result = solve_problem(problem, w0, picard_iters=picard_iters, **kw)
    w = result.w

    row = {"family": "subduction", "case": case, "slab_bc": slab_bc,
           "slab_shape": geom.slab_shape, "h_coarse": h_coarse,
           "h_slab": h_slab, "ndofs": problem.space.ndofs,
           "ncells": len(mesh.cells),
           "n_newton": result.iterations,
           "residual": result.residual_norms[-1]}
    row.update(probe_report(problem, w, geom))
    if slab_bc == "freeslip":
        row["penetration"] = slip_penetration(problem, w)
    rep = compute_functionals(problem, w, top_marker="top",
                              bottom_marker="bottom_outflow")
    row.update(rep.as_dict())
    return problem, result, row
