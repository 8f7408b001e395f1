"""Krylov iteration counts for the weak free-slip cell under refinement.

Solves Blankenbach case 1 with Nitsche slip on a ladder of grids,
replacing the direct linear solver inside Newton by restarted GMRES with
an ILU(0) preconditioner, and records the worst per-step iteration count
on each level.  A well-scaled penalty keeps that count roughly flat; the
same study rerun with a penalty-method sized constant (C_IP in the
thousands) shows the conditioning cost that Nitsche avoids.
"""

import numpy as np

from ..linalg import ILU0, gmres
from ..nonlinear import solve_problem
from ..viscosity import Constant
from .convection import BLANKENBACH_CASES, convection_problem


class KrylovLog:
    """GMRES+ILU(0) linear solver that remembers its iteration counts.

    Suitable for the ``linear_solver`` hook of the nonlinear drivers.
    Non-convergence within ``maxiter`` is recorded (the best iterate is
    still returned) so the outer iteration can continue or fail on its
    own terms.
    """

    def __init__(self, rtol=1e-6, restart=100, maxiter=1000):
        self.rtol = rtol
        self.restart = restart
        self.maxiter = maxiter
        self.counts = []
        self.failures = 0

    def __call__(self, a, b):
        a = a.tocsr()
        res = gmres(a, b, preconditioner=ILU0(a), rtol=self.rtol,
                    restart=self.restart, maxiter=self.maxiter)
        self.counts.append(res.iterations)
        if not res.converged:
            self.failures += 1
        return res.x

    @property
    def max_count(self):
        return max(self.counts) if self.counts else 0


def run_conditioning(levels=4, m0=16, c_ip=20.0, picard_iters=10,
                     rtol=1e-6, **newton_kw):
    """Blankenbach case 1 (weak slip) across ``levels`` grid doublings.

    Returns one row per level with the dof count, Newton step count,
    the largest GMRES iteration count over all linear solves, and the
    final nonlinear residual norm.  Each linear solve runs to a fixed
    relative tolerance (inexact Newton with constant forcing), so the
    per-level counts are comparable.
    """
    params = BLANKENBACH_CASES[1]
    rows = []
    for level in range(levels):
        m = m0 * 2 ** level
        problem, w0 = convection_problem(Constant(1.0), params["ra"], m,
                                         lx=params["lx"], bc="weak",
                                         c_ip=c_ip)
        log = KrylovLog(rtol=rtol)
        kw = dict(abs_tol=5e-9, max_iter=40, backtrack=True)
        kw.update(newton_kw)
        result = solve_problem(problem, w0, picard_iters=picard_iters,
                               linear_solver=log, **kw)
        rows.append({"family": "conditioning", "m": m, "c_ip": c_ip,
                     "ndofs": problem.space.ndofs,
                     "n_newton": result.iterations,
                     "n_krylov": log.max_count,
                     "n_solves": len(log.counts),
                     "krylov_failures": log.failures,
                     "residual": result.residual_norms[-1]})
    return rows


def penalty_comparison(m=32, c_ip_pair=(20.0, 2000.0), **kw):
    """Rerun one level with a Nitsche-scaled and a penalty-scaled C_IP."""
    rows = []
    for c_ip in c_ip_pair:
        rows.extend(run_conditioning(levels=1, m0=m, c_ip=c_ip, **kw))
    return rows
