import numpy as np
import pytest
from numpy.testing import assert_allclose

from weakslip.dual import Dual, value
from weakslip.errors import SingularStateError
from weakslip.flux import homogeneity_tensor, isoviscous_homogeneity
from weakslip import viscosity
from weakslip.viscosity import (
    Constant,
    DiffusionCreep,
    DislocationCreep,
    ShearThinning,
    TemperatureDepthExponential,
    YieldComposite,
    stokes_flux,
)


def eta_of_gradient(model, grad, T=None, y=None):
    e00, e11 = grad[0][0], grad[1][1]
    e01 = 0.5 * (grad[0][1] + grad[1][0])
    return model.eta(e00, e01, e11, T=T, y=y)


def central_fd_tensor(model, grad, T=None, y=None, h=1e-7):
    """Finite-difference d(2 eta eps - pI)/d(grad) with p = 0."""
    grad = np.asarray(grad, float)

    def flux_at(g):
        return np.array(stokes_flux(model, T=T, y=y)(
            [0.0, 0.0], [[g[0, 0], g[0, 1]], [g[1, 0], g[1, 1]]], 0.0))

    out = np.empty((2, 2, 2, 2))
    for j in range(2):
        for l in range(2):
            gp, gm = grad.copy(), grad.copy()
            gp[j, l] += h
            gm[j, l] -= h
            d = (flux_at(gp) - flux_at(gm)) / (2 * h)
            out[:, :, j, l] = d
    return out


def ad_tensor(model, grad, T=None, y=None):
    g = homogeneity_tensor(stokes_flux(model, T=T, y=y), [0.0, 0.0],
                           [list(r) for r in np.asarray(grad, float)], 0.0)
    return np.array([[[[g[i][k][j][l] for l in range(2)] for j in range(2)]
                      for k in range(2)] for i in range(2)])


def test_constant_matches_isoviscous_closed_form():
    grad = [[0.3, -0.2], [0.5, 0.1]]
    got = ad_tensor(Constant(2.5), grad)
    ref = np.array(isoviscous_homogeneity(2.5))
    assert_allclose(got, ref, atol=1e-14)


def test_shear_thinning_value():
    # eps = [[0.3, 0.15], [0.15, 0.1]] -> eps:eps = 0.145
    model = ShearThinning()
    eta = model.eta(0.3, 0.15, 0.1)
    assert eta == pytest.approx(1.0 / (1.0 + np.sqrt(0.145)))


def test_shear_thinning_singular_at_zero_strain():
    with pytest.raises(SingularStateError):
        ShearThinning().eta(0.0, 0.0, 0.0)


def test_shear_thinning_singular_detected_in_batch():
    e = np.array([0.5, 0.0, 1.0])
    with pytest.raises(SingularStateError):
        ShearThinning().eta(e, e, e)


@pytest.mark.parametrize("grad", [
    [[0.3, -0.2], [0.5, 0.1]],
    [[1.0, 0.0], [0.0, -1.0]],
    [[0.01, 2.0], [-1.5, 0.02]],
])
def test_shear_thinning_homogeneity_vs_fd(grad):
    model = ShearThinning()
    assert_allclose(ad_tensor(model, grad), central_fd_tensor(model, grad),
                    rtol=1e-6, atol=1e-8)


def test_temperature_depth_contrasts():
    model = TemperatureDepthExponential(delta_t=1e3, delta_z=10.0)
    # top of the layer, T = 0: both factors are 1
    assert eta_of_gradient(model, np.eye(2), T=0.0, y=1.0) == pytest.approx(1)
    # full temperature contrast at the top: eta drops by delta_t
    assert eta_of_gradient(model, np.eye(2), T=1.0, y=1.0) == \
        pytest.approx(1e-3)
    # cold bottom: eta grows by delta_z
    assert eta_of_gradient(model, np.eye(2), T=0.0, y=0.0) == \
        pytest.approx(10.0)


def test_temperature_depth_omitted_factors():
    model = TemperatureDepthExponential()
    assert eta_of_gradient(model, np.zeros((2, 2)), T=0.7, y=0.3) == 1.0
    # contrast of exactly 1 is the same as omitting the factor
    model1 = TemperatureDepthExponential(delta_t=1e5, delta_z=1.0)
    model0 = TemperatureDepthExponential(delta_t=1e5, delta_z=0.0)
    assert eta_of_gradient(model1, np.eye(2), T=0.4, y=0.2) == \
        pytest.approx(eta_of_gradient(model0, np.eye(2), T=0.4, y=0.2))


def test_temperature_dual_propagates():
    model = TemperatureDepthExponential(delta_t=np.e, delta_z=0.0)
    T = Dual(0.5, 1.0)
    eta = model.eta(0.0, 0.0, 0.0, T=T, y=0.0)
    # eta = exp(-T): derivative is -eta
    assert value(eta) == pytest.approx(np.exp(-0.5))
    assert eta.dot == pytest.approx(-np.exp(-0.5))


def test_yield_composite_zero_strain_limit():
    model = YieldComposite(delta_t=1e5, delta_z=1.0, eta_star=1e-3,
                           sigma_y=1.0)
    lin = model.linear.eta(0, 0, 0, T=0.3, y=0.5)
    eta0 = model.eta(0.0, 0.0, 0.0, T=0.3, y=0.5)
    assert eta0 == pytest.approx(2.0 * lin, rel=1e-9)


def test_yield_composite_plastic_branch_dominates_at_high_strain():
    model = YieldComposite(delta_t=1.0, delta_z=0.0, eta_star=1e-3,
                           sigma_y=1.0)
    # eta_lin = 1; at huge strain eta_plast -> eta_star, so the harmonic
    # mean tends to 2/(1 + 1/eta_star) ~ 2e-3.
    big = 1e8
    eta = model.eta(big, 0.0, 0.0, T=0.0, y=0.0)
    assert eta == pytest.approx(2.0 / (1.0 + 1.0 / (1e-3 + 1.0 / big)),
                                rel=1e-6)


def test_yield_composite_matches_unregularized_formula():
    model = YieldComposite(delta_t=1e5, delta_z=10.0, eta_star=1e-3,
                           sigma_y=1.0)
    e00, e01, e11 = 0.4, -0.3, 0.1
    s = e00 ** 2 + e11 ** 2 + 2 * e01 ** 2
    lin = np.exp(-np.log(1e5) * 0.6 + np.log(10.0) * (1 - 0.25))
    plast = 1e-3 + 1.0 / np.sqrt(s)
    ref = 2.0 / (1.0 / lin + 1.0 / plast)
    assert model.eta(e00, e01, e11, T=0.6, y=0.25) == pytest.approx(ref)


def test_yield_composite_homogeneity_vs_fd():
    model = YieldComposite(delta_t=1e5, delta_z=10.0, eta_star=1e-3,
                           sigma_y=1.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        grad = rng.normal(size=(2, 2))
        T = rng.uniform(0.0, 1.0)
        y = rng.uniform(0.0, 1.0)
        assert_allclose(ad_tensor(model, grad, T=T, y=y),
                        central_fd_tensor(model, grad, T=T, y=y),
                        rtol=2e-6, atol=1e-8)


def test_diffusion_creep_values():
    model = DiffusionCreep()
    # hot mantle: the Arrhenius branch is far below the cap
    eta_hot = model.eta(0, 0, 0, T=1573.0)
    arrhenius = 1.32043e9 * np.exp(335e3 / (8.3145 * 1573.0))
    ref = 1.0 / (1e-26 + 1.0 / arrhenius)
    assert eta_hot * 1e21 == pytest.approx(ref, rel=1e-9)
    # cap correction is tiny but present
    assert eta_hot * 1e21 < arrhenius
    # cold lithosphere: capped at eta_max
    eta_cold = model.eta(0, 0, 0, T=273.0)
    assert eta_cold * 1e21 == pytest.approx(1e26, rel=1e-3)


def test_diffusion_creep_monotone_in_temperature():
    model = DiffusionCreep()
    temps = np.linspace(400.0, 1600.0, 7)
    etas = np.array([model.eta(0, 0, 0, T=t) for t in temps])
    assert np.all(np.diff(etas) < 0)


def test_dislocation_creep_reference_value():
    model = DislocationCreep()
    # one strain-rate unit: eps:eps/2 = 1 -> eps_II = scale
    e = np.sqrt(2.0) / np.sqrt(2.0)  # e00 = 1, rest 0 gives eps:eps = 1
    eps_ii = model.strain_rate_scale * np.sqrt(0.5)
    ref = 29868.6 * np.exp(540e3 / (3.5 * 8.3145 * 1573.0)) * \
        eps_ii ** ((1 - 3.5) / 3.5)
    ref = 1.0 / (1e-26 + 1.0 / ref)
    got = model.eta(e, 0.0, 0.0, T=1573.0)
    assert got * 1e21 == pytest.approx(ref, rel=1e-6)


def test_dislocation_creep_capped_at_zero_strain():
    model = DislocationCreep()
    eta = model.eta(0.0, 0.0, 0.0, T=800.0)
    assert eta * 1e21 == pytest.approx(1e26, rel=1e-6)


def test_dislocation_creep_homogeneity_vs_fd():
    model = DislocationCreep()
    rng = np.random.default_rng(5)
    for T in (1200.0, 1500.0):
        grad = rng.normal(size=(2, 2))
        # relative scale of entries is ~1e21..1e26; compare relatively
        ad = ad_tensor(model, grad, T=T)
        fd = central_fd_tensor(model, grad, T=T, h=1e-6)
        assert_allclose(ad, fd, rtol=5e-5, atol=1e-10 * np.abs(fd).max())


def test_benchmark_strain_rate_constant():
    assert viscosity.BENCHMARK_STRAIN_RATE == \
        pytest.approx(1.58548e-12, rel=1e-5)


def test_stokes_flux_shape_and_pressure():
    flux = stokes_flux(Constant(3.0))
    F = flux([0.0, 0.0], [[1.0, 2.0], [3.0, 4.0]], 10.0)
    assert_allclose(F, [[2 * 3 * 1 - 10, 3 * 5.0], [3 * 5.0, 2 * 3 * 4 - 10]])
