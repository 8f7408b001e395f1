import numpy as np
import pytest
from numpy.testing import assert_allclose

from weakslip.forms import NitscheSlip, ProblemDefinition, TemperatureDirichlet
from weakslip.functionals import FunctionalReport, compute_functionals
from weakslip.mesh import generate_rect_mesh
from weakslip.spaces import Field, MixedSpace
from weakslip.viscosity import Constant


def make_problem(n=4, lx=1.0, ly=1.0):
    mesh = generate_rect_mesh(n, n, lx=lx, ly=ly)
    space = MixedSpace(mesh, [Field("u", 2, ncomp=2), Field("p", 1),
                              Field("T", 2)])
    prob = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={m: NitscheSlip() for m in (1, 2, 3, 4)},
        temperature_bcs={3: TemperatureDirichlet(1.0),
                         4: TemperatureDirichlet(0.0)})
    return prob


def set_fields(space, velocity=None, temperature=None, pressure=None):
    w = space.zeros()
    if velocity is not None:
        xu = space.dof_coords("u")
        u0, u1 = velocity(xu[:, 0], xu[:, 1])
        sl = space.field_slice("u")
        w[sl.start:sl.stop:2] = u0
        w[sl.start + 1:sl.stop:2] = u1
    if temperature is not None:
        xt = space.dof_coords("T")
        w[space.field_slice("T")] = temperature(xt[:, 0], xt[:, 1])
    if pressure is not None:
        xp = space.dof_coords("p")
        w[space.field_slice("p")] = pressure(xp[:, 0], xp[:, 1])
    return w


def test_conduction_profile_gives_unit_nusselt():
    prob = make_problem()
    w = set_fields(prob.space, temperature=lambda x, y: 1.0 - y)
    rep = compute_functionals(prob, w)
    assert isinstance(rep, FunctionalReport)
    assert rep.nu_top == pytest.approx(1.0, abs=1e-12)
    assert rep.nu_bottom == pytest.approx(1.0, abs=1e-12)
    assert rep.mean_temperature == pytest.approx(0.5, abs=1e-12)
    assert rep.u_rms == 0.0
    assert rep.mean_dissipation == pytest.approx(0.0, abs=1e-14)
    assert rep.mean_work == pytest.approx(0.0, abs=1e-14)
    # dT/dn is -1 on top (n = +y), +1 on bottom (n = -y)
    assert_allclose(rep.corner_flux, (1.0, 1.0, -1.0, -1.0), atol=1e-12)


def test_uniform_velocity_rms():
    prob = make_problem()
    w = set_fields(prob.space, velocity=lambda x, y: (-3.0 + 0 * x, 0 * x))
    rep = compute_functionals(prob, w)
    assert rep.u_rms == pytest.approx(3.0, abs=1e-12)
    assert rep.u_rms_surface == pytest.approx(3.0, abs=1e-12)


def test_shear_flow_dissipation():
    # u = (y, 0), eta = 1: eps:eps = 1/2, dissipation 2 eta eps:eps = 1
    prob = make_problem()
    w = set_fields(prob.space, velocity=lambda x, y: (y, 0 * x))
    rep = compute_functionals(prob, w)
    assert rep.mean_dissipation == pytest.approx(1.0, abs=1e-12)


def test_dissipation_ignores_pressure():
    prob = make_problem()
    w = set_fields(prob.space, velocity=lambda x, y: (y, 0 * x),
                   pressure=lambda x, y: 5.0 + x)
    rep = compute_functionals(prob, w)
    assert rep.mean_dissipation == pytest.approx(1.0, abs=1e-12)


def test_mean_work_pairs_temperature_and_vertical_velocity():
    prob = make_problem()
    w = set_fields(prob.space, velocity=lambda x, y: (0 * x, x),
                   temperature=lambda x, y: 1.0 - y)
    rep = compute_functionals(prob, w)
    assert rep.mean_work == pytest.approx(0.25, abs=1e-12)


def test_corner_fluxes_one_sided():
    prob = make_problem()
    w = set_fields(prob.space, temperature=lambda x, y: x * y)
    rep = compute_functionals(prob, w)
    # bottom corners use n = (0,-1): -x; top corners n = (0,1): +x
    assert_allclose(rep.corner_flux, (0.0, -1.0, 0.0, 1.0), atol=1e-12)


def test_wide_box_geometry_is_respected():
    prob = make_problem(lx=2.5)
    w = set_fields(prob.space, temperature=lambda x, y: 1.0 - y)
    rep = compute_functionals(prob, w)
    # flux integral 2.5, basal integral 2.5
    assert rep.nu_top == pytest.approx(1.0, abs=1e-12)
    assert rep.mean_temperature == pytest.approx(0.5, abs=1e-12)
