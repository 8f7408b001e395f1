import numpy as np
import pytest
import scipy.sparse.linalg as spla
from numpy.testing import assert_allclose

from weakslip.forms import (
    Neumann,
    NitscheDirichlet,
    NitscheSlip,
    ProblemDefinition,
    StrongDirichlet,
    TemperatureDirichlet,
    assemble_residual,
    assemble_system,
    energy_residual,
    mass_residual,
    neumann_residual,
    nitsche_dirichlet_residual,
    nitsche_slip_residual,
    volume_residual,
)
from weakslip.mesh import Mesh, generate_rect_mesh
from weakslip.spaces import Field, MixedSpace
from weakslip.viscosity import Constant, ShearThinning


def poisson_factory(T, y):
    """Vector Laplacian flux F = grad u (ignores pressure)."""

    def flux(u, grad_u, p):
        return [[grad_u[0][0], grad_u[0][1]], [grad_u[1][0], grad_u[1][1]]]

    return flux


def unit_triangle_mesh():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    cells = np.array([[0, 1, 2]])
    return Mesh(verts, cells)


def stokes_space(mesh, p_degree=1, with_t=None):
    fields = [Field("u", 2, ncomp=2), Field("p", p_degree)]
    if with_t is not None:
        fields.append(Field("T", with_t))
    return MixedSpace(mesh, fields)


def shear_solution(x, y):
    return np.asarray(y, float) + 0.0 * x, np.asarray(x, float) + 0.0 * y


def test_volume_matches_p1_stiffness_matrix():
    # on the unit triangle the scalar P1 stiffness matrix is known in
    # closed form; the vector Laplacian repeats it per component
    mesh = unit_triangle_mesh()
    space = MixedSpace(mesh, [Field("u", 1, ncomp=2)])
    prob = ProblemDefinition(mesh, space, flux_factory=poisson_factory)
    k_ref = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    a = np.zeros((6, 6))
    for j in range(6):
        e = np.zeros(6)
        e[j] = 1.0
        a[:, j] = volume_residual(prob, e)
    assert_allclose(a[0::2, 0::2], k_ref, atol=1e-14)
    assert_allclose(a[1::2, 1::2], k_ref, atol=1e-14)
    assert_allclose(a[0::2, 1::2], 0.0, atol=1e-14)


def test_neumann_total_force():
    # sum over one velocity component of -(g, v) is -g |edge| by
    # partition of unity
    mesh = generate_rect_mesh(2, 2)
    space = stokes_space(mesh)
    prob = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={2: Neumann((3.0, -1.0))})
    r = neumann_residual(prob, space.zeros())
    ru = r[space.field_slice("u")]
    assert ru[0::2].sum() == pytest.approx(-3.0, abs=1e-13)
    assert ru[1::2].sum() == pytest.approx(1.0, abs=1e-13)


def exact_interpolant(space, velocity, pressure=None):
    w = space.zeros()
    xu = space.dof_coords("u")
    u0, u1 = velocity(xu[:, 0], xu[:, 1])
    sl = space.field_slice("u")
    w[sl.start:sl.stop:2] = u0
    w[sl.start + 1:sl.stop:2] = u1
    if pressure is not None and "p" in space.offsets:
        xp = space.dof_coords("p")
        sp_ = space.field_slice("p")
        w[sp_] = pressure(xp[:, 0], xp[:, 1])
    return w


def test_residual_vanishes_at_exact_linear_stokes_solution():
    # u = (y, x), p = 0 is an exact homogeneous Stokes solution; with
    # matching Dirichlet data every assembled term must cancel
    mesh = generate_rect_mesh(3, 3)
    space = stokes_space(mesh)
    prob = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={m: NitscheDirichlet(shear_solution)
                      for m in (1, 2, 3, 4)},
        pinned=([space.field_slice("p").start], [0.0]))
    w = exact_interpolant(space, shear_solution)
    r = assemble_residual(prob, w)
    assert np.max(np.abs(r)) < 1e-12


def test_residual_vanishes_with_slip_and_traction_data():
    # same exact solution, bottom edge swapped to a slip condition with
    # the exact tangential traction (F n = (-2, 0) there)
    mesh = generate_rect_mesh(3, 3)
    space = stokes_space(mesh)
    prob = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={
            1: NitscheDirichlet(shear_solution),
            2: NitscheDirichlet(shear_solution),
            4: NitscheDirichlet(shear_solution),
            3: NitscheSlip(normal_data=shear_solution,
                           tangential_traction=(-2.0, 0.0)),
        },
        pinned=([space.field_slice("p").start], [0.0]))
    w = exact_interpolant(space, shear_solution)
    r = assemble_residual(prob, w)
    assert np.max(np.abs(r)) < 1e-12


def test_boundary_terms_penalty_free_when_data_is_met():
    # once u equals the boundary data the residual cannot depend on the
    # penalty constant
    mesh = generate_rect_mesh(2, 2)
    space = stokes_space(mesh)
    w = exact_interpolant(space, shear_solution)

    def prob(c_ip, bc):
        return ProblemDefinition(mesh, space, Constant(1.0),
                                 velocity_bcs={3: bc}, c_ip=c_ip)

    # the penalty scales machine-epsilon deviations by c_ip l^2 / h,
    # hence the ~1e-11 noise floor
    bc_d = NitscheDirichlet(shear_solution)
    r20 = nitsche_dirichlet_residual(prob(20.0, bc_d), w)
    r2k = nitsche_dirichlet_residual(prob(2000.0, bc_d), w)
    assert np.max(np.abs(r20)) > 1e-3  # consistency part is alive
    assert_allclose(r20, r2k, atol=1e-11)

    bc_s = NitscheSlip(normal_data=shear_solution)
    r20 = nitsche_slip_residual(prob(20.0, bc_s), w)
    r2k = nitsche_slip_residual(prob(2000.0, bc_s), w)
    assert_allclose(r20, r2k, atol=1e-11)


def test_residual_linear_in_state_for_constant_viscosity():
    mesh = generate_rect_mesh(2, 3)
    space = stokes_space(mesh)
    prob = ProblemDefinition(
        mesh, space, Constant(2.0),
        velocity_bcs={1: NitscheDirichlet((0.0, 0.0)),
                      3: NitscheSlip()})
    rng = np.random.default_rng(3)
    w = rng.normal(size=space.ndofs)
    r1 = assemble_residual(prob, w)
    r2 = assemble_residual(prob, 2.5 * w)
    assert_allclose(r2, 2.5 * r1, rtol=1e-12, atol=1e-13)


def test_momentum_block_symmetry_isoviscous():
    mesh = generate_rect_mesh(4, 4)
    space = stokes_space(mesh)
    prob = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={m: NitscheDirichlet((0.0, 0.0)) for m in (1, 2, 3, 4)})
    rng = np.random.default_rng(8)
    w = rng.normal(size=space.ndofs)
    _, a = assemble_system(prob, w)
    sl = space.field_slice("u")
    auu = a[sl, sl]
    assert abs(auu - auu.T).max() < 1e-10


def test_pressure_velocity_blocks_are_skew_adjoint():
    # the continuity correction is the adjoint of the pressure trace in
    # the consistency term: J_up = -J_pu^T, for slip and dirichlet alike
    mesh = generate_rect_mesh(3, 2)
    space = stokes_space(mesh)
    prob = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={1: NitscheDirichlet((1.0, 0.0)),
                      2: NitscheSlip(),
                      3: NitscheDirichlet((0.0, 0.0)),
                      4: NitscheSlip(normal_data=(0.0, 0.5))})
    rng = np.random.default_rng(21)
    w = rng.normal(size=space.ndofs)
    _, a = assemble_system(prob, w)
    su, sp_ = space.field_slice("u"), space.field_slice("p")
    assert abs(a[su, sp_] + a[sp_, su].T).max() < 1e-11


def random_state(space, seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    return scale * rng.normal(size=space.ndofs)


def mixed_bc_problem(mesh, space, model, **kw):
    return ProblemDefinition(
        mesh, space, model,
        velocity_bcs={
            1: NitscheDirichlet((0.2, -0.1)),
            2: Neumann((0.5, 0.0)),
            3: NitscheSlip(normal_data=(0.0, 0.1),
                           tangential_traction=(0.3, 0.0)),
            4: StrongDirichlet((0.0, 0.0)),
        },
        temperature_bcs={3: TemperatureDirichlet(1.0),
                         4: TemperatureDirichlet(0.0)},
        rayleigh=10.0, kappa=0.7, heat_source=0.4, **kw)


def test_jacobian_matches_directional_differences():
    mesh = generate_rect_mesh(2, 2)
    space = stokes_space(mesh, with_t=2)
    prob = mixed_bc_problem(mesh, space, ShearThinning())
    w = random_state(space, seed=5)
    prob.apply_strong_bcs(w)
    r0, a = assemble_system(prob, w)
    assert_allclose(assemble_residual(prob, w), r0, atol=1e-13)
    rng = np.random.default_rng(6)
    pinned = prob.strong_constraints()[0]
    h = 1e-7
    for _ in range(5):
        # directions live in the unconstrained subspace: eliminated
        # columns are dropped from the matrix on purpose
        v = rng.normal(size=space.ndofs)
        v[pinned] = 0.0
        v /= np.linalg.norm(v)
        rp = assemble_residual(prob, w + h * v)
        rm = assemble_residual(prob, w - h * v)
        fd = (rp - rm) / (2 * h)
        assert_allclose(a @ v, fd, rtol=2e-6, atol=1e-6)


def test_picard_jacobian_freezes_viscosity():
    # with eta lagged the Stokes rows must be linear in (u, p): the
    # Jacobian equals the one assembled at a rescaled state
    mesh = generate_rect_mesh(2, 2)
    space = stokes_space(mesh)
    prob = ProblemDefinition(
        mesh, space, ShearThinning(),
        velocity_bcs={m: NitscheDirichlet((0.0, 0.0)) for m in (1, 2, 3, 4)})
    w = random_state(space, seed=11)
    r, a = assemble_system(prob, w, linearize="picard")
    # picard residual/jacobian obey r(w) = A w - b with A, b frozen at w:
    # check against an independent evaluation of A w2 - b at another state
    w2 = random_state(space, seed=12)
    # b = A w - r
    b = a @ w - r
    # the same frozen operator applied by hand through the residual of a
    # constant-viscosity problem is unavailable; instead verify the
    # defining property J dw = r(w + dw) - r(w) for the frozen system
    # restricted to linear terms: use a problem with Constant eta where
    # picard and newton coincide
    prob_c = ProblemDefinition(
        mesh, space, Constant(1.3),
        velocity_bcs={m: NitscheDirichlet((0.0, 0.0)) for m in (1, 2, 3, 4)})
    rn, an = assemble_system(prob_c, w, linearize="newton")
    rp, ap = assemble_system(prob_c, w, linearize="picard")
    assert_allclose(rn, rp, atol=1e-13)
    assert abs(an - ap).max() < 1e-13
    # and for the shear-thinning problem the picard matrix is symmetric
    # on the momentum block (no strain-derivative term)
    sl = space.field_slice("u")
    auu = a[sl, sl]
    assert abs(auu - auu.T).max() < 1e-10
    del b, w2


def test_strong_rows_are_identity_and_columns_cleared():
    mesh = generate_rect_mesh(2, 2)
    space = stokes_space(mesh, with_t=1)
    prob = mixed_bc_problem(mesh, space, Constant(1.0))
    w = random_state(space, seed=2)
    r, a = assemble_system(prob, w)
    dofs, vals = prob.strong_constraints()
    assert dofs.size > 0
    assert_allclose(r[dofs], w[dofs] - vals)
    a = a.tocsc()
    for k in dofs:
        row = a[k, :].toarray().ravel()
        col = a[:, [k]].toarray().ravel()
        assert row[k] == 1.0 and col[k] == 1.0
        row[k] = col[k] = 0.0
        assert np.all(row == 0.0) and np.all(col == 0.0)


def test_inactive_fields_are_held_fixed():
    mesh = generate_rect_mesh(2, 2)
    space = stokes_space(mesh, with_t=1)
    prob = mixed_bc_problem(mesh, space, Constant(1.0))
    w = random_state(space, seed=9)
    prob.apply_strong_bcs(w)
    r, a = assemble_system(prob, w, active=("T",))
    su = space.field_slice("u")
    assert_allclose(r[su], 0.0, atol=1e-15)
    dw = spla.spsolve(a.tocsc(), -r)
    assert_allclose(dw[su], 0.0, atol=1e-12)
    assert_allclose(dw[space.field_slice("p")], 0.0, atol=1e-12)


def test_energy_conduction_exact_for_linear_temperature():
    mesh = generate_rect_mesh(3, 3)
    space = stokes_space(mesh, with_t=1)
    prob = ProblemDefinition(mesh, space, Constant(1.0), kappa=2.5)
    w = space.zeros()
    xt = space.dof_coords("T")
    w[space.field_slice("T")] = 0.3 + 0.7 * xt[:, 0] - 1.1 * xt[:, 1]
    r = energy_residual(prob, w)
    rt = r[space.field_slice("T")]
    interior = np.setdiff1d(
        np.arange(rt.size),
        space.boundary_dofs("T", (1, 2, 3, 4)) - space.offsets["T"])
    assert np.max(np.abs(rt[interior])) < 1e-13


def test_mass_residual_measures_divergence_and_boundary_flux():
    # for u = (x, y), div u = 2: volume part integrates 2 against each
    # pressure test function; the weak-boundary correction subtracts the
    # normal deviation from the data
    mesh = generate_rect_mesh(2, 2)
    space = stokes_space(mesh, p_degree=0)
    prob = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={m: NitscheDirichlet(lambda x, y: (x, y))
                      for m in (1, 2, 3, 4)})
    w = exact_interpolant(space, lambda x, y: (x, y))
    r = mass_residual(prob, w)
    rp = r[space.field_slice("p")]
    # P0 tests: each cell integrates div u = 2 over its area 1/8, and the
    # boundary correction vanishes because the data is met exactly
    assert_allclose(rp, 0.25, atol=1e-14)


def test_interior_facet_condition_is_consistent():
    # registering an interior line as a weak interface (both sides) must
    # keep exact solutions exact
    mesh = generate_rect_mesh(2, 2)
    cells, locs = [], []
    for c, cell in enumerate(mesh.cells):
        for le, (a_, b_) in enumerate(((1, 2), (2, 0), (0, 1))):
            xa, xb = mesh.vertices[cell[a_]], mesh.vertices[cell[b_]]
            if abs(xa[0] - 0.5) < 1e-12 and abs(xb[0] - 0.5) < 1e-12:
                cells.append(c)
                locs.append(le)
    assert len(cells) == 4  # two geometric facets, two sides each
    mesh.set_interior_facets(cells, locs, [77] * len(cells))
    space = stokes_space(mesh)
    prob = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={m: NitscheDirichlet(shear_solution)
                      for m in (1, 2, 3, 4)},
        interior_velocity_bcs={77: NitscheDirichlet(shear_solution)},
        pinned=([space.field_slice("p").start], [0.0]))
    w = exact_interpolant(space, shear_solution)
    r = assemble_residual(prob, w)
    assert np.max(np.abs(r)) < 1e-12
    # and the interface terms participate in the jacobian
    prob2 = ProblemDefinition(
        mesh, space, Constant(1.0),
        velocity_bcs={m: NitscheDirichlet(shear_solution)
                      for m in (1, 2, 3, 4)},
        pinned=([space.field_slice("p").start], [0.0]))
    _, a1 = assemble_system(prob, random_state(space, 4))
    _, a2 = assemble_system(prob2, random_state(space, 4))
    assert abs(a1 - a2).max() > 1e-8


def test_nitsche_dirichlet_solve_reproduces_quadratic_exactly():
    # vector Laplacian with quadratic exact solution: P2 elements plus a
    # consistent weak boundary give the interpolant, not just O(h) error
    def exact(x, y):
        return x * x + y * y, x * y

    mesh = generate_rect_mesh(3, 3)
    space = MixedSpace(mesh, [Field("u", 2, ncomp=2)])
    prob = ProblemDefinition(
        mesh, space, flux_factory=poisson_factory,
        momentum_source=lambda x, y: (-4.0 + 0.0 * x, 0.0 * x),
        velocity_bcs={m: NitscheDirichlet(exact) for m in (1, 2, 3, 4)})
    w = space.zeros()
    r, a = assemble_system(prob, w)
    w = spla.spsolve(a.tocsc(), -r)
    assert_allclose(w, exact_interpolant(space, exact), atol=1e-10)


def test_slip_on_axis_aligned_wall_pins_normal_component_only():
    # weak slip on the bottom wall of a lid-driven cavity: the normal
    # velocity is small (weakly zero) and shrinks under refinement while
    # the tangential velocity stays free
    def solve(n):
        mesh = generate_rect_mesh(n, n)
        space = stokes_space(mesh)
        prob = ProblemDefinition(
            mesh, space, Constant(1.0),
            velocity_bcs={
                4: StrongDirichlet((1.0, 0.0)),
                1: NitscheDirichlet((0.0, 0.0)),
                2: NitscheDirichlet((0.0, 0.0)),
                3: NitscheSlip(),
            },
            pinned=([space.field_slice("p").start], [0.0]))
        w = space.zeros()
        prob.apply_strong_bcs(w)
        r, a = assemble_system(prob, w)
        w = w + spla.spsolve(a.tocsc(), -r)
        normal = np.max(np.abs(w[space.boundary_dofs("u", (3,), comps=(1,))]))
        tang = np.max(np.abs(w[space.boundary_dofs("u", (3,), comps=(0,))]))
        return normal, tang

    n3, t3 = solve(3)
    n6, _ = solve(6)
    assert n3 < 5e-3
    assert n6 < n3
    assert t3 > 1e-3


def test_rejects_bad_arguments():
    mesh = generate_rect_mesh(2, 2)
    space = stokes_space(mesh)
    from weakslip.errors import InvalidArgumentError

    with pytest.raises(InvalidArgumentError):
        ProblemDefinition(mesh, space)
    with pytest.raises(InvalidArgumentError):
        ProblemDefinition(mesh, space, Constant(1.0),
                          interior_velocity_bcs={5: Neumann((0, 0))})
    prob = ProblemDefinition(mesh, space, Constant(1.0))
    with pytest.raises(InvalidArgumentError):
        assemble_system(prob, space.zeros(), linearize="broyden")
    with pytest.raises(InvalidArgumentError):
        MixedSpace(mesh, [Field("p", 1)]) and None
        ProblemDefinition(mesh, MixedSpace(mesh, [Field("p", 1)]),
                          Constant(1.0))
