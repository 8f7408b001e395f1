"""Steady mantle-convection cells in a rectangular box.

Two benchmark families share one driver: isoviscous / temperature- and
depth-dependent cells at Ra up to 1e6, and visco-plastic cells at
Ra = 1e2 with a harmonic yield-stress composite viscosity.  Free slip is
applied on the whole boundary either weakly (Nitsche) or strongly
(normal-component elimination on the axis-aligned walls), the base is
held at T = 1, the lid at T = 0, and the sides are insulated.

The conduction profile is a trivial steady state, so runs start from a
perturbed profile ``T0 = (1 - y/H) + 0.1 cos(pi x/L) sin(pi y/H)`` and
globalize with fixed-point sweeps before Newton.
"""

import numpy as np

from ..errors import InvalidArgumentError
from ..forms import (NitscheSlip, ProblemDefinition, StrongDirichlet,
                     TemperatureDirichlet)
from ..functionals import compute_functionals
from ..mesh import generate_rect_mesh
from ..nonlinear import solve_problem
from ..spaces import FeFunction, MixedSpace
from ..viscosity import Constant, TemperatureDepthExponential, YieldComposite

#: Rayleigh number, viscosity contrasts and cell length per case.  A
#: contrast of 0 switches the corresponding factor off; case 5 runs in a
#: 2.5 x 1 box meshed with m = (5/2) n squares.
BLANKENBACH_CASES = {
    1: dict(ra=1e4, delta_t=0.0, delta_z=0.0, lx=1.0),
    2: dict(ra=1e5, delta_t=0.0, delta_z=0.0, lx=1.0),
    3: dict(ra=1e6, delta_t=0.0, delta_z=0.0, lx=1.0),
    4: dict(ra=1e4, delta_t=1e3, delta_z=0.0, lx=1.0),
    5: dict(ra=1e4, delta_t=16384.0, delta_z=64.0, lx=2.5),
}

#: Linear part exp(-ln(dT) T + ln(dz)(1-y)); cases 2 and 4 add the
#: plastic branch eta* + sigma_Y / sqrt(eps:eps) harmonically.
TOSI_CASES = {
    1: dict(ra=1e2, delta_t=1e5, delta_z=1.0, yielding=False),
    2: dict(ra=1e2, delta_t=1e5, delta_z=1.0, yielding=True),
    3: dict(ra=1e2, delta_t=1e5, delta_z=10.0, yielding=False),
    4: dict(ra=1e2, delta_t=1e5, delta_z=10.0, yielding=True),
}

ETA_STAR = 1e-3
SIGMA_Y = 1.0


def convection_problem(model, ra, m, n=None, lx=1.0, bc="weak", c_ip=20.0,
                       temperature_degree=2):
    """Assemble the Boussinesq cell problem on an m x n grid.

    ``bc`` chooses weak (Nitsche) or strong (eliminated normal
    component) free slip.  Returns the problem and the perturbed-profile
    start vector.
    """
    if bc not in ("weak", "strong"):
        raise InvalidArgumentError(f"bc must be 'weak' or 'strong', got {bc!r}")
    n = n if n is not None else m
    mesh = generate_rect_mesh(m, n, lx=lx, ly=1.0)
    space = MixedSpace(mesh, [("u", 2, 2), ("p", 1, 1),
                              ("T", temperature_degree, 1)])
    if bc == "weak":
        velocity_bcs = {mk: NitscheSlip() for mk in
                        ("left", "right", "bottom", "top")}
    else:
        velocity_bcs = {
            "left": StrongDirichlet(components=(0,)),
            "right": StrongDirichlet(components=(0,)),
            "bottom": StrongDirichlet(components=(1,)),
            "top": StrongDirichlet(components=(1,)),
        }
    problem = ProblemDefinition(
        mesh, space, model, c_ip=c_ip, rayleigh=ra,
        velocity_bcs=velocity_bcs,
        temperature_bcs={"bottom": TemperatureDirichlet(1.0),
                         "top": TemperatureDirichlet(0.0)},
        pinned=([space.global_dof("p", 0)], [0.0]))

    w0 = FeFunction(space)
    w0.interpolate("T", lambda xy: (1.0 - xy[:, 1])
                   + 0.1 * np.cos(np.pi * xy[:, 0] / lx)
                   * np.sin(np.pi * xy[:, 1]))
    return problem, w0.vec


def _run_cell(model, ra, m, n, lx, bc, c_ip, picard_iters, newton_kw):
    problem, w0 = convection_problem(model, ra, m, n=n, lx=lx, bc=bc,
                                     c_ip=c_ip)
    kw = dict(abs_tol=1e-10, max_iter=40, backtrack=True)
    kw.update(newton_kw)
    result = solve_problem(problem, w0, picard_iters=picard_iters, **kw)
    report = compute_functionals(problem, result.w)
    row = {"m": m, "n": n, "bc": bc, "ra": ra,
           "ndofs": problem.space.ndofs,
           "n_newton": result.iterations,
           "residual": result.residual_norms[-1]}
    row.update(report.as_dict())
    return problem, result, row


def run_blankenbach(case=1, m=64, bc="weak", c_ip=20.0, picard_iters=10,
                    **newton_kw):
    """Solve one Blankenbach cell and return its functional row."""
    try:
        params = BLANKENBACH_CASES[case]
    except KeyError:
        raise InvalidArgumentError(f"unknown Blankenbach case {case!r}") \
            from None
    if params["delta_t"] > 0.0:
        model = TemperatureDepthExponential(params["delta_t"],
                                            params["delta_z"])
    else:
        model = Constant(1.0)
    n = m
    if params["lx"] != 1.0:
        # Wide cell: keep squares square, m = (5/2) n.
        if (2 * m) % 5:
            raise InvalidArgumentError(
                "case 5 resolution must be a multiple of 5")
        n = (2 * m) // 5
    problem, result, row = _run_cell(model, params["ra"], m, n, params["lx"],
                                     bc, c_ip, picard_iters, newton_kw)
    row.update({"family": "blankenbach", "case": case})
    return problem, result, row


def run_tosi(case=1, m=64, bc="weak", c_ip=20.0, picard_iters=10,
             **newton_kw):
    """Solve one visco-plastic cell and return its functional row."""
    try:
        params = TOSI_CASES[case]
    except KeyError:
        raise InvalidArgumentError(f"unknown Tosi case {case!r}") from None
    if params["yielding"]:
        model = YieldComposite(params["delta_t"], params["delta_z"],
                               ETA_STAR, SIGMA_Y)
    else:
        model = TemperatureDepthExponential(params["delta_t"],
                                            params["delta_z"])
    problem, result, row = _run_cell(model, params["ra"], m, m, 1.0,
                                     bc, c_ip, picard_iters, newton_kw)
    row.update({"family": "tosi", "case": case})
    return problem, result, row
