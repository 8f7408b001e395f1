"""Viscous-flux algebra for weak boundary terms.

A viscous flux is a callable ``flux(u, grad_u, p) -> F`` taking the
velocity components ``u = [u0, u1]``, the gradient ``grad_u[j][l] =
d u_j / d x_l`` as a 2x2 nested list, and the pressure, all of which may
be scalars, batched numpy arrays or :class:`~weakslip.dual.Dual` values.
It returns the 2x2 flux tensor ``F[i][k]`` such that the momentum balance
is ``-div F = f`` (row-wise divergence).

The homogeneity tensor ``G[i][k][j][l] = dF[i][k] / d(grad_u)[j][l]`` is
obtained by seeding one forward-mode direction per gradient entry, so any
differentiable flux gets consistent Nitsche boundary terms without
hand-derived linearizations.
"""

import numpy as np

from .dual import Dual, dot_at_level, level_of, lift, strip_level, value
from .errors import InvalidArgumentError


def _check_unit_normal(n):
    mag = value(n[0]) ** 2 + value(n[1]) ** 2
    if np.max(np.abs(mag - 1.0)) > 1e-10:
        raise InvalidArgumentError("normal vector is not unit length")


def normal_projection(n, v):
    """``(n ⊗ n) v``: the component of ``v`` along the unit normal."""
    _check_unit_normal(n)
    w = n[0] * v[0] + n[1] * v[1]
    return [w * n[0], w * n[1]]


def tangential_rejection(n, v):
    """``v - (n ⊗ n) v``: the tangential part of ``v``."""
    pn = normal_projection(n, v)
    return [v[0] - pn[0], v[1] - pn[1]]


def penalty_coefficient(c_ip, ell, h):
    """Interior-penalty scaling ``c_ip * ell**2 / h``.

    ``ell`` is the polynomial degree of the constrained field and ``h``
    the facet arc length.
    """
    if c_ip <= 0:
        raise InvalidArgumentError("penalty constant must be positive")
    if ell < 1:
        raise InvalidArgumentError("polynomial degree must be at least 1")
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise InvalidArgumentError("facet size must be positive")
    return c_ip * float(ell) ** 2 / h


def boundary_state(kind, u, data, n):
    """Exterior state ``u_Gamma`` seen through a weak boundary condition.

    Parameters
    ----------
    kind : {"dirichlet", "slip"}
        Dirichlet replaces the full velocity by ``data``; slip keeps the
        tangential trace of ``u`` and replaces the normal part by the
        normal part of ``data``.
    u, data : length-2 sequences
        Interior trace and boundary data components.
    n : length-2 sequence
        Unit outward normal.
    """
    if kind == "dirichlet":
        return [data[0], data[1]]
    if kind == "slip":
        tang = tangential_rejection(n, u)
        norm = normal_projection(n, data)
        return [tang[0] + norm[0], tang[1] + norm[1]]
    raise InvalidArgumentError(f"unknown boundary state kind {kind!r}")


def flux_and_homogeneity(flux, u, grad_u, p):
    """Evaluate a flux and its gradient sensitivity in one sweep.

    Returns
    -------
    F : 2x2 nested list
        Flux values at ``(u, grad_u, p)``.
    G : 2x2x2x2 nested list
        ``G[i][k][j][l] = dF[i][k] / d(grad_u)[j][l]``.
    """
    base_level = max(max(level_of(g) for row in grad_u for g in row),
                     level_of(u[0]), level_of(u[1]), level_of(p))
    seed_level = base_level + 1
    u = [lift(c, base_level) for c in u]
    p = lift(p, base_level)
    grad_u = [[lift(g, base_level) for g in row] for row in grad_u]
    G = [[[[None, None], [None, None]] for _ in range(2)] for _ in range(2)]
    F = None
    for j in range(2):
        for l in range(2):
            g = [list(row) for row in grad_u]
            g[j][l] = Dual(g[j][l], 1.0)
            out = flux(u, g, p)
            for i in range(2):
                for k in range(2):
                    G[i][k][j][l] = dot_at_level(out[i][k], seed_level)
            if F is None:
                F = [[strip_level(out[i][k], seed_level) for k in range(2)]
                     for i in range(2)]
    return F, G


def homogeneity_tensor(flux, u, grad_u, p):
    """``G[i][k][j][l] = dF[i][k] / d(grad_u)[j][l]`` by forward AD."""
    return flux_and_homogeneity(flux, u, grad_u, p)[1]


def hyper_product(g_tens, t_mat):
    """``(G T)[i][k] = sum_jl G[i][k][j][l] T[j][l]``."""
    return [[sum(g_tens[i][k][j][l] * t_mat[j][l]
                 for j in range(2) for l in range(2))
             for k in range(2)] for i in range(2)]


def transpose_product(g_tens, s_mat):
    """``(G^T S)[j][l] = sum_ik G[i][k][j][l] S[i][k]``."""
    return [[sum(g_tens[i][k][j][l] * s_mat[i][k]
                 for i in range(2) for k in range(2))
             for l in range(2)] for j in range(2)]


def isoviscous_homogeneity(eta):
    """Closed form of G for ``F = 2 eta sym(grad u) - p I`` with constant
    viscosity: ``G[i][k][j][l] = eta * (d_ij d_kl + d_il d_kj)``."""
    d = np.eye(2)
    return [[[[eta * (d[i, j] * d[k, l] + d[i, l] * d[k, j])
               for l in range(2)] for j in range(2)]
             for k in range(2)] for i in range(2)]


def outer(v, n):
    """Rank-one tensor ``(v ⊗ n)[i][k] = v[i] n[k]``."""
    return [[v[0] * n[0], v[0] * n[1]], [v[1] * n[0], v[1] * n[1]]]


def tensor_inner(a, b):
    """Frobenius pairing of two 2x2 nested lists."""
    return sum(a[i][k] * b[i][k] for i in range(2) for k in range(2))


def tensor_dot_vec(a, v):
    """Matrix-vector product ``(A v)[i] = A[i][k] v[k]``."""
    return [a[i][0] * v[0] + a[i][1] * v[1] for i in range(2)]


def coordinate_state(velocity, pressure, x, y):
    """Evaluate closed-form fields and the velocity gradient at points.

    ``velocity(x, y) -> (u0, u1)`` and ``pressure(x, y)`` are evaluated with
    coordinate-seeded duals, so the exact gradient comes out of the same
    expressions.  The callables must use dual-aware primitives
    (:func:`weakslip.dual.sqrt` etc.) instead of numpy ufuncs.

    Returns ``(u, grad_u, p)`` with ``grad_u[j][l] = d u_j / d x_l``, all
    as float arrays broadcast to the shape of ``x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ex = np.zeros((2,) + x.shape)
    ex[0] = 1.0
    ey = np.zeros((2,) + x.shape)
    ey[1] = 1.0
    u = velocity(Dual(x, ex), Dual(y, ey))
    p = pressure(Dual(x, ex), Dual(y, ey))
    zeros = np.zeros(x.shape)
    uv, grad = [], []
    for j in range(2):
        uv.append(value(u[j]) + zeros)
        dj = dot_at_level(u[j], 1)
        if isinstance(dj, float):
            grad.append([zeros, zeros])
        else:
            grad.append([dj[0] + zeros, dj[1] + zeros])
    return uv, grad, value(p) + zeros


def manufactured_source(flux, velocity, pressure, x, y):
    """Momentum source ``f = -div F`` driving a manufactured solution.

    The divergence of the flux along the exact fields is formed by nested
    coordinate seeding: an outer dual carries the divergence direction and
    an inner dual builds the velocity gradient the flux is evaluated at, so
    second derivatives of the velocity and first derivatives of the
    viscosity all come out of the user's plain closed-form expressions.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = [0.0, 0.0]
    for m in range(2):
        xo = Dual(x, 1.0 if m == 0 else 0.0)
        yo = Dual(y, 1.0 if m == 1 else 0.0)
        u_o = list(velocity(xo, yo))
        p_o = pressure(xo, yo)
        grad_o = [[None, None], [None, None]]
        for l in range(2):
            xi = Dual(xo, 1.0 if l == 0 else 0.0)
            yi = Dual(yo, 1.0 if l == 1 else 0.0)
            u_i = velocity(xi, yi)
            for j in range(2):
                grad_o[j][l] = dot_at_level(u_i[j], 2)
        fv = flux(u_o, grad_o, p_o)
        for i in range(2):
            f[i] = f[i] - dot_at_level(fv[i][m], 1)
    return [np.asarray(value(c), dtype=float) + np.zeros(x.shape) for c in f]
