"""Newton and alternating fixed-point drivers.

``newton_solve`` works on any callable producing a residual/Jacobian pair,
so scalar sanity problems and the assembled FE systems share one
implementation.  ``picard_couple`` alternates lagged-viscosity Stokes solves
with frozen-velocity energy solves, the standard way to bring a thermal
convection state close enough for Newton to take over.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergenceError
from .forms import assemble_residual, assemble_system
from .linalg import lu_solve


@dataclass
class SolveResult:
    w: np.ndarray
    iterations: int
    residual_norms: list = field(default_factory=list)

    @property
    def converged(self):
        return True


def problem_system(problem, linearize="newton", active=None):
    """Residual/Jacobian and residual-only closures for a problem."""

    def system(w):
        return assemble_system(problem, w, linearize=linearize,
                               active=active)

    def residual(w):
        return assemble_residual(problem, w, active=active)

    return system, residual


def newton_solve(system, w0, *, residual=None, abs_tol=1e-10, rel_tol=0.0,
                 max_iter=25, linear_solver=None, backtrack=False,
                 min_step=1.0 / 16.0, callback=None):
    """Solve ``r(w) = 0`` given ``system(w) -> (r, J)``.

    Steps are full Newton updates; with ``backtrack=True`` the step is
    halved (down to ``min_step``) until the residual norm decreases, and
    the smallest step is taken regardless if none does.  Convergence is
    ``||r||_2 <= max(abs_tol, rel_tol * ||r(w0)||_2)``; linear problems
    therefore finish in one iteration.  Raises
    :class:`~weakslip.errors.NonConvergenceError` (carrying the residual
    history) if ``max_iter`` is exhausted.
    """
    if linear_solver is None:
        linear_solver = lu_solve
    if residual is None:
        def residual(w):
            return system(w)[0]
    w = np.array(w0, dtype=float)
    r, jac = system(w)
    norm = float(np.linalg.norm(r))
    history = [norm]
    tol = max(abs_tol, rel_tol * norm)
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return SolveResult(w=w, iterations=it - 1,
                               residual_norms=history)
        dw = linear_solver(jac, -r)
        if backtrack:
            alpha = 1.0
            while alpha >= min_step:
                trial = float(np.linalg.norm(residual(w + alpha * dw)))
                if trial < norm:
                    break
                alpha *= 0.5
            else:
                alpha = min_step
            w = w + alpha * dw
        else:
            w = w + dw
        r, jac = system(w)
        norm = float(np.linalg.norm(r))
        history.append(norm)
        if callback is not None:
            callback(it, w, norm)
        if norm <= tol:
            return SolveResult(w=w, iterations=it, residual_norms=history)
    raise NonConvergenceError(
        f"newton did not reach {tol:.3e} in {max_iter} iterations "
        f"(last residual {norm:.3e})", history=history)


def picard_couple(problem, w0=None, *, n_iters=10, relaxation=1.0,
                  linear_solver=None, callback=None):
    """Alternate lagged-viscosity Stokes and frozen-velocity energy solves.

    Each sweep does one linear Stokes solve with the viscosity evaluated at
    the current state, then one linear energy solve advected by the fresh
    velocity.  Returns the state after ``n_iters`` sweeps together with the
    full coupled residual history (no convergence requirement: this is a
    globalization stage, typically followed by :func:`newton_solve`).
    """
    if linear_solver is None:
        linear_solver = lu_solve
    space = problem.space
    names = [f.name for f in space.fields]
    w = space.zeros() if w0 is None else np.array(w0, dtype=float)
    problem.apply_strong_bcs(w)
    stokes_active = tuple(n for n in ("u", "p") if n in names)
    history = [float(np.linalg.norm(assemble_residual(problem, w)))]
    for it in range(1, n_iters + 1):
        r, jac = assemble_system(problem, w, linearize="picard",
                                 active=stokes_active)
        w = w + relaxation * linear_solver(jac, -r)
        if "T" in names:
            r, jac = assemble_system(problem, w, linearize="picard",
                                     active=("T",))
            w = w + relaxation * linear_solver(jac, -r)
        norm = float(np.linalg.norm(assemble_residual(problem, w)))
        history.append(norm)
        if callback is not None:
            callback(it, w, norm)
    return SolveResult(w=w, iterations=n_iters, residual_norms=history)


def solve_problem(problem, w0=None, *, picard_iters=0, **newton_kw):
    """Convenience driver: optional Picard sweeps, then Newton to
    ``abs_tol``, starting from ``w0`` (or zero) with strong data applied."""
    w = problem.space.zeros() if w0 is None else np.array(w0, dtype=float)
    problem.apply_strong_bcs(w)
    if picard_iters:
        w = picard_couple(problem, w, n_iters=picard_iters,
                          linear_solver=newton_kw.get("linear_solver")).w
    system, residual = problem_system(problem)
    return newton_solve(system, w, residual=residual, **newton_kw)
