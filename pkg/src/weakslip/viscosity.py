"""Viscosity models and the Stokes fluxes they induce.

Each model maps the symmetric-gradient entries (and, where relevant, a
temperature and a depth coordinate) to a viscosity.  All arithmetic is
dual-aware, so the same code path serves residual evaluation, Newton
linearization and homogeneity-tensor computation.

Convection-benchmark models work in nondimensional units on a unit-height
layer.  The creep models work with temperature in kelvin and return the
viscosity nondimensionalized by ``eta_scale``; strain rates are converted
to 1/s through ``strain_rate_scale`` (benchmark scales: lengths in km,
speeds in units of 5 cm/yr).
"""

import math

import numpy as np

from .dual import exp, log, sqrt, value
from .errors import SingularStateError

GAS_CONSTANT = 8.3145
SECONDS_PER_YEAR = 365.0 * 24.0 * 60.0 ** 2

#: ``(5 cm/yr) / (1 km)`` in 1/s: strain-rate unit of the subduction cases.
BENCHMARK_STRAIN_RATE = 0.05 / SECONDS_PER_YEAR / 1000.0

# Keeps sqrt differentiable when the strain invariant can vanish; small
# enough that any physical strain rate dominates it.
_STRAIN_FLOOR = 1e-30


def _strain_invariant(e00, e01, e11):
    """``eps : eps`` from the independent entries of the symmetric part."""
    return e00 * e00 + e11 * e11 + 2.0 * (e01 * e01)


class Constant:
    """Uniform viscosity."""

    def __init__(self, eta0=1.0):
        self.eta0 = float(eta0)

    def eta(self, e00, e01, e11, T=None, y=None):
        return self.eta0


class ShearThinning:
    """``eta = (1 + sqrt(eps : eps))**-1``.

    The derivative is singular where the strain rate vanishes, so
    evaluation at such a state raises :class:`SingularStateError`; solvers
    must start from a guess with nonzero strain everywhere.
    """

    def eta(self, e00, e01, e11, T=None, y=None):
        s = _strain_invariant(e00, e01, e11)
        if np.any(value(s) == 0.0):
            raise SingularStateError(
                "shear-thinning viscosity differentiated at eps(u) = 0")
        return 1.0 / (1.0 + sqrt(s))


class TemperatureDepthExponential:
    """``eta = exp(-ln(delta_T) T + ln(delta_z) z)`` with depth ``z = H - y``.

    A contrast of 0 (or 1) omits the corresponding factor.
    """

    def __init__(self, delta_t=0.0, delta_z=0.0, height=1.0):
        self.delta_t = float(delta_t)
        self.delta_z = float(delta_z)
        self.height = float(height)

    def eta(self, e00, e01, e11, T=None, y=None):
        arg = 0.0
        if self.delta_t > 0.0:
            arg = arg - math.log(self.delta_t) * T
        if self.delta_z > 0.0:
            arg = arg + math.log(self.delta_z) * (self.height - y)
        if isinstance(arg, float):
            return math.exp(arg)
        return exp(arg)


class YieldComposite:
    """Harmonic combination of a linear part and a plastic branch,
    ``eta = 2 (eta_lin**-1 + eta_plast**-1)**-1`` with
    ``eta_plast = eta_star + sigma_y / sqrt(eps : eps)``.

    The plastic reciprocal is evaluated as ``r / (eta_star r + sigma_y)``
    with ``r = sqrt(eps : eps)``, which is bounded and differentiable at
    zero strain (where the composite tends to ``2 eta_lin``).
    """

    def __init__(self, delta_t, delta_z, eta_star, sigma_y, height=1.0):
        self.linear = TemperatureDepthExponential(delta_t, delta_z, height)
        self.eta_star = float(eta_star)
        self.sigma_y = float(sigma_y)

    def eta(self, e00, e01, e11, T=None, y=None):
        lin = self.linear.eta(e00, e01, e11, T=T, y=y)
        r = sqrt(_strain_invariant(e00, e01, e11) + _STRAIN_FLOOR)
        inv_plast = r / (self.eta_star * r + self.sigma_y)
        return 2.0 / (1.0 / lin + inv_plast)


class DiffusionCreep:
    """Arrhenius diffusion creep, ``A exp(E / (R T))``, capped by a maximum
    viscosity and returned in units of ``eta_scale``."""

    def __init__(self, A=1.32043e9, E=335e3, eta_max=1e26, eta_scale=1e21):
        self.A = float(A)
        self.E = float(E)
        self.eta_max = float(eta_max)
        self.eta_scale = float(eta_scale)

    def eta(self, e00, e01, e11, T=None, y=None):
        inv_creep = exp(-self.E / (GAS_CONSTANT * T)) / self.A
        return (1.0 / (1.0 / self.eta_max + inv_creep)) / self.eta_scale


class DislocationCreep:
    """Power-law dislocation creep,
    ``A exp(E / (n R T)) eps_II**((1 - n)/n)`` with
    ``eps_II = sqrt(eps : eps / 2)`` in 1/s, capped by ``eta_max`` and
    returned in units of ``eta_scale``."""

    def __init__(self, A=29868.6, E=540e3, n_exp=3.5, eta_max=1e26,
                 eta_scale=1e21, strain_rate_scale=BENCHMARK_STRAIN_RATE):
        self.A = float(A)
        self.E = float(E)
        self.n_exp = float(n_exp)
        self.eta_max = float(eta_max)
        self.eta_scale = float(eta_scale)
        self.strain_rate_scale = float(strain_rate_scale)

    def eta(self, e00, e01, e11, T=None, y=None):
        s = 0.5 * _strain_invariant(e00, e01, e11) + _STRAIN_FLOOR
        eps_ii = self.strain_rate_scale * sqrt(s)
        expo = (1.0 - self.n_exp) / self.n_exp
        creep = (self.A * exp(self.E / (self.n_exp * GAS_CONSTANT * T))
                 * eps_ii ** expo)
        return (1.0 / (1.0 / self.eta_max + 1.0 / creep)) / self.eta_scale


def stokes_flux(model, T=None, y=None):
    """Bind field context into ``F = 2 eta eps(u) - p I``.

    ``T`` and ``y`` are values at the evaluation points (arrays or duals);
    the returned callable has the ``flux(u, grad_u, p)`` signature used by
    the assembly kernels and the homogeneity computation.
    """

    def flux(u, grad_u, p):
        e00 = grad_u[0][0]
        e11 = grad_u[1][1]
        e01 = 0.5 * (grad_u[0][1] + grad_u[1][0])
        eta = model.eta(e00, e01, e11, T=T, y=y)
        off = 2.0 * eta * e01
        return [[2.0 * eta * e00 - p, off], [off, 2.0 * eta * e11 - p]]

    return flux
