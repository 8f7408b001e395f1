"""Manufactured-solution convergence studies.

Two exact Stokes solutions with the shear-thinning rheology
``eta = (1 + sqrt(eps : eps))**-1`` drive convergence studies, first on
the square ``(-1, 1)^2`` and then on ellipse domains meshed with curved
(quadratic) boundary facets.  All boundary conditions are imposed as
slip data: the exact normal velocity together with the exact tangential
traction, so the whole boundary exercises the weak slip machinery.

On the unit disc the discrete problem retains an approximate
rigid-rotation null mode (the Babuska paradox for slip conditions on
smooth domains) and the velocity error stagnates under refinement.
Stretching the ellipse by ``eps_y > 0`` breaks the rotational symmetry
and restores optimal convergence.
"""

import numpy as np

from .. import dual, elements, quadrature
from ..errors import InvalidArgumentError
from ..flux import coordinate_state, manufactured_source
from ..forms import NitscheSlip, ProblemDefinition
from ..mesh import generate_ellipse_mesh, generate_rect_mesh
from ..nonlinear import solve_problem
from ..spaces import FeFunction, MixedSpace, cell_geometry, physical_gradients
from ..viscosity import ShearThinning, stokes_flux


def exact_solution(case):
    """Exact velocity and pressure callables for case 1 or 2.

    Both velocities are divergence free with ``p = 0``; case 2 carries a
    weak derivative singularity of the forcing at the origin.  The
    callables accept dual numbers so they can be differentiated to build
    manufactured boundary data and sources.
    """
    if case == 1:
        def velocity(x, y):
            return (2.0 * y * (1.0 - x * x), -2.0 * x * (1.0 - y * y))
    elif case == 2:
        def velocity(x, y):
            r = dual.sqrt(x * x + y * y)
            return (-y * r, x * r)
    else:
        raise InvalidArgumentError(f"unknown manufactured case {case!r}")

    def pressure(x, y):
        return 0.0 * x

    return velocity, pressure


def _traction(flux, velocity, pressure, normal):
    """Exact boundary traction ``F(u) . n`` with ``n = normal(x, y)``."""

    def g(x, y):
        u, gu, p = coordinate_state(velocity, pressure, x, y)
        fv = flux(u, gu, p)
        nx, ny = normal(x, y)
        return (fv[0][0] * nx + fv[0][1] * ny,
                fv[1][0] * nx + fv[1][1] * ny)

    return g


def initial_guess(space):
    """The start state ``u = (y, x)``, ``p = 0``.

    Pure shear with ``eps : eps = 2`` everywhere, so the shear-thinning
    viscosity is differentiable at every quadrature point; starting from
    zero velocity is a singular state.
    """
    w = FeFunction(space)
    w.interpolate("u", lambda xy: np.column_stack([xy[:, 1], xy[:, 0]]))
    return w.vec


def errornorms(space, w, velocity, pressure=None, quad_degree=10):
    """L2/H1(semi) velocity errors and the mean-adjusted L2 pressure error.

    Pressure is compared after removing the mean of both the discrete
    and exact fields, since the studies pin a single pressure dof rather
    than enforcing a zero mean.
    """
    mesh = space.mesh
    pts, wts = quadrature.triangle_rule(quad_degree)
    x, inv_jt, det = cell_geometry(mesh, pts)
    meas = wts[None, :] * det
    area = float(np.sum(meas))

    fu = space.field("u")
    phi, dphi = elements.tabulate_basis(fu.degree, pts)
    coeff = FeFunction(space, w).field_values("u")[
        space._scalar_cell_dofs["u"]]               # (nc, nb, 2)
    uh = np.einsum("qa,caj->cqj", phi, coeff)
    grad = physical_gradients(dphi, inv_jt)          # (nc, nq, nb, 2)
    guh = np.einsum("cqal,caj->cqjl", grad, coeff)

    ue, gue, pe = coordinate_state(velocity, pressure or (lambda x, y: 0.0),
                                   x[..., 0], x[..., 1])
    du = [uh[..., j] - ue[j] for j in range(2)]
    err_l2 = np.sqrt(sum(np.sum(meas * d ** 2) for d in du))
    dg = [guh[..., j, l] - gue[j][l] for j in range(2) for l in range(2)]
    err_h1 = np.sqrt(sum(np.sum(meas * d ** 2) for d in dg))

    out = {"u_l2": float(err_l2), "u_h1": float(err_h1)}
    if "p" in [f.name for f in space.fields]:
        fp = space.field("p")
        phi_p, _ = elements.tabulate_basis(fp.degree, pts)
        pc = FeFunction(space, w).field_values("p")[
            space._scalar_cell_dofs["p"], 0]
        ph = np.einsum("qa,ca->cq", phi_p, pc)
        dp = (ph - np.sum(meas * ph) / area) - (pe - np.sum(meas * pe) / area)
        out["p_l2"] = float(np.sqrt(np.sum(meas * dp ** 2)))
    return out


def _solve_manufactured(mesh, case, c_ip, newton_tol=1e-10):
    """Set up and solve one manufactured problem on ``mesh``.

    Slip data (exact normal velocity, exact tangential traction) is
    attached to every boundary marker; the marker's outward normal is
    evaluated analytically from the domain shape.
    """
    space = MixedSpace(mesh, [("u", 2, 2), ("p", 1, 1)])
    velocity, pressure = exact_solution(case)
    model = ShearThinning()
    flux = stokes_flux(model)

    def source(x, y):
        return manufactured_source(flux, velocity, pressure, x, y)

    wall_normals = {
        "left": lambda x, y: (-np.ones_like(x), np.zeros_like(x)),
        "right": lambda x, y: (np.ones_like(x), np.zeros_like(x)),
        "bottom": lambda x, y: (np.zeros_like(x), -np.ones_like(x)),
        "top": lambda x, y: (np.zeros_like(x), np.ones_like(x)),
    }
    bcs = {}
    for marker in mesh.marker_ids:
        if marker == "boundary":
            # Ellipse x^2 + y^2/sy^2 = 1: the analytic outward normal is
            # the normalised gradient of the level-set function.
            sy = getattr(mesh, "ellipse_sy", 1.0)

            def normal(x, y, sy=sy):
                nx, ny = x, y / sy ** 2
                s = np.sqrt(nx ** 2 + ny ** 2)
                return nx / s, ny / s
        else:
            normal = wall_normals[marker]
        bcs[marker] = NitscheSlip(
            normal_data=lambda x, y: velocity(x, y),
            tangential_traction=_traction(flux, velocity, pressure, normal))

    problem = ProblemDefinition(
        mesh, space, model, c_ip=c_ip, momentum_source=source,
        velocity_bcs=bcs,
        pinned=([space.global_dof("p", 0)], [0.0]))
    # Full Newton diverges from the pure-shear start on this rheology; a
    # few lagged-viscosity sweeps bring it into the quadratic basin.
    result = solve_problem(problem, initial_guess(space), picard_iters=4,
                           abs_tol=newton_tol, max_iter=30, backtrack=True)
    return space, result, velocity, pressure


def _rates(h, errs):
    """Per-pair observed orders plus a least-squares slope."""
    h, errs = np.asarray(h, float), np.asarray(errs, float)
    pair = np.log(errs[:-1] / errs[1:]) / np.log(h[:-1] / h[1:])
    slope = np.polyfit(np.log(h), np.log(errs), 1)[0]
    return pair.tolist(), float(slope)


def run_mms(case=1, resolutions=(8, 16, 32, 64), c_ip=20.0):
    """Convergence study on the square ``(-1, 1)^2``.

    Returns a dict with per-resolution errors, observed per-pair rates,
    least-squares slopes, and CSV-ready rows.
    """
    rows, errs = [], {"u_l2": [], "u_h1": [], "p_l2": []}
    hs = []
    for n in resolutions:
        mesh = generate_rect_mesh(n, n, lx=2.0, ly=2.0, origin=(-1.0, -1.0))
        space, result, velocity, pressure = _solve_manufactured(
            mesh, case, c_ip)
        e = errornorms(space, result.w, velocity, pressure)
        hs.append(2.0 / n)
        for k in errs:
            errs[k].append(e[k])
        rows.append({"family": "mms", "case": case, "N": n, "h": 2.0 / n,
                     "ndofs": space.ndofs, "n_newton": result.iterations,
                     "residual": result.residual_norms[-1], **e})
    slopes, rates = {}, {}
    for k in errs:
        rates[k], slopes[k] = _rates(hs, errs[k])
    for i, row in enumerate(rows):
        for k in errs:
            row[f"rate_{k}"] = rates[k][i - 1] if i else float("nan")
    return {"case": case, "resolutions": list(resolutions), "h": hs,
            "errors": errs, "rates": rates, "slopes": slopes, "rows": rows}


def run_babuska(case=1, eps_values=(0.0, 0.1), resolutions=(8, 16, 32, 64),
                c_ip=20.0):
    """Repeat the manufactured study on ellipses with quadratic facets.

    ``eps_values`` lists the semi-axis perturbations; ``eps_y = 0`` is
    the unit disc.  Reports velocity L2 errors per (eps_y, N) and, per
    eps_y, the pairwise rates, the least-squares slope and the
    finest-pair error ratio (a stagnation indicator: ratios near 1 mean
    no convergence).
    """
    tables = {}
    rows = []
    for eps in eps_values:
        hs, errs = [], []
        for n in resolutions:
            mesh = generate_ellipse_mesh(n, eps_y=eps, degree=2)
            mesh.ellipse_sy = 1.0 + eps
            space, result, velocity, pressure = _solve_manufactured(
                mesh, case, c_ip)
            e = errornorms(space, result.w, velocity, pressure)
            hs.append(1.0 / n)
            errs.append(e["u_l2"])
            rows.append({"family": "babuska", "case": case, "eps_y": eps,
                         "N": n, "h": 1.0 / n, "ndofs": space.ndofs,
                         "n_newton": result.iterations,
                         "residual": result.residual_norms[-1],
                         "u_l2": e["u_l2"], "u_h1": e["u_h1"],
                         "p_l2": e["p_l2"]})
        pair, slope = _rates(hs, errs)
        tables[eps] = {"h": hs, "u_l2": errs, "rates": pair, "slope": slope,
                       "finest_ratio": errs[-1] / errs[-2],
                       "finest_rate": pair[-1]}
    return {"case": case, "resolutions": list(resolutions),
            "eps_values": list(eps_values), "tables": tables, "rows": rows}
