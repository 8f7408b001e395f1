"""Sparse linear solvers.

``lu_solve`` wraps SuperLU for robust direct solves.  The iterative path is
self-contained: an ILU(0) factorization (no fill-in, original sparsity
pattern) with numba-compiled kernels, and a restarted, right-preconditioned
GMRES whose iteration counts are reported so mesh-independence studies can
read them off directly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numba import njit

from .errors import InvalidArgumentError, SingularMatrixError


@njit(cache=True)
def _ilu0_factor(n, indptr, indices, data, diag):
    """In-place ILU(0) on sorted CSR; returns -1 on success or the row of
    the first zero/missing pivot."""
    for i in range(n):
        d = -1
        for jj in range(indptr[i], indptr[i + 1]):
            if indices[jj] == i:
                d = jj
                break
        if d == -1:
            return i
        diag[i] = d
    pos = np.full(n, -1, np.int64)
    for i in range(n):
        for jj in range(indptr[i], indptr[i + 1]):
            pos[indices[jj]] = jj
        for jj in range(indptr[i], indptr[i + 1]):
            k = indices[jj]
            if k >= i:
                break
            piv = data[diag[k]]
            if piv == 0.0:
                return k
            lik = data[jj] / piv
            data[jj] = lik
            for kk in range(diag[k] + 1, indptr[k + 1]):
                p = pos[indices[kk]]
                if p != -1:
                    data[p] -= lik * data[kk]
        for jj in range(indptr[i], indptr[i + 1]):
            pos[indices[jj]] = -1
        if data[diag[i]] == 0.0:
            return i
    return -1


@njit(cache=True)
def _ilu0_apply(n, indptr, indices, data, diag, b, x):
    # forward substitution with the unit-diagonal L factor
    for i in range(n):
        s = b[i]
        for jj in range(indptr[i], diag[i]):
            s -= data[jj] * x[indices[jj]]
        x[i] = s
    # backward substitution with U
    for i in range(n - 1, -1, -1):
        s = x[i]
        for jj in range(diag[i] + 1, indptr[i + 1]):
            s -= data[jj] * x[indices[jj]]
        x[i] = s / data[diag[i]]


class ILU0:
    """Zero fill-in incomplete LU preconditioner of a sparse matrix."""

    def __init__(self, a):
        a = sp.csr_matrix(a, copy=True)
        a.sort_indices()
        self.n = a.shape[0]
        self.indptr = a.indptr.astype(np.int64)
        self.indices = a.indices.astype(np.int64)
        self.data = a.data.astype(np.float64)
        self.diag = np.empty(self.n, np.int64)
        bad = _ilu0_factor(self.n, self.indptr, self.indices, self.data,
                           self.diag)
        if bad >= 0:
            raise SingularMatrixError(
                f"ILU(0) hit a zero or missing pivot in row {bad}")

    def solve(self, b):
        x = np.empty(self.n)
        _ilu0_apply(self.n, self.indptr, self.indices, self.data, self.diag,
                    np.asarray(b, dtype=float), x)
        return x


class Jacobi:
    """Diagonal preconditioner."""

    def __init__(self, a):
        d = np.asarray(a.diagonal(), dtype=float)
        if np.any(d == 0.0):
            raise SingularMatrixError("zero diagonal entry")
        self.inv_diag = 1.0 / d

    def solve(self, b):
        return self.inv_diag * b


class LuFactorization:
    """Direct sparse LU (SuperLU) reusable across right-hand sides."""

    def __init__(self, a):
        try:
            self._lu = spla.splu(sp.csc_matrix(a))
        except RuntimeError as err:
            raise SingularMatrixError(str(err)) from err

    def solve(self, b):
        x = self._lu.solve(np.asarray(b, dtype=float))
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("direct solve produced non-finite "
                                      "values")
        return x


def lu_solve(a, b):
    """Solve ``a x = b`` with a sparse direct factorization."""
    return LuFactorization(a).solve(b)


@dataclass
class GmresResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool


def gmres(a, b, x0=None, *, preconditioner=None, rtol=1e-8, atol=0.0,
          restart=100, maxiter=10000):
    """Restarted GMRES with right preconditioning.

    Convergence is declared when the true-system residual norm drops below
    ``max(rtol * ||b||, atol)``.  The returned iteration count is the total
    number of Arnoldi steps, comparable across runs with the same
    tolerances.
    """
    if restart < 1:
        raise InvalidArgumentError("restart must be at least 1")
    b = np.asarray(b, dtype=float)
    n = b.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    target = max(rtol * np.linalg.norm(b), atol)
    apply_m = (lambda v: v) if preconditioner is None else preconditioner.solve

    iters = 0
    res = np.linalg.norm(b - a @ x)
    while res > target and iters < maxiter:
        v = np.zeros((restart + 1, n))
        h = np.zeros((restart + 1, restart))
        cs = np.zeros(restart)
        sn = np.zeros(restart)
        g = np.zeros(restart + 1)
        r0 = b - a @ x
        beta = np.linalg.norm(r0)
        if beta <= target:
            break
        v[0] = r0 / beta
        g[0] = beta
        j_used = 0
        for j in range(restart):
            if iters >= maxiter:
                break
            iters += 1
            w = a @ apply_m(v[j])
            hj = v[:j + 1] @ w
            w -= v[:j + 1].T @ hj
            # one reorthogonalization pass keeps the basis usable for
            # ill-conditioned saddle-point systems
            corr = v[:j + 1] @ w
            w -= v[:j + 1].T @ corr
            hj += corr
            h[:j + 1, j] = hj
            hnorm = np.linalg.norm(w)
            h[j + 1, j] = hnorm
            if hnorm > 0.0:
                v[j + 1] = w / hnorm
            for i in range(j):
                t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
                h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
                h[i, j] = t
            denom = np.hypot(h[j, j], h[j + 1, j])
            if denom == 0.0:
                j_used = j + 1
                break
            cs[j] = h[j, j] / denom
            sn[j] = h[j + 1, j] / denom
            h[j, j] = denom
            h[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            j_used = j + 1
            if abs(g[j + 1]) <= target or hnorm == 0.0:
                break
        if j_used == 0:
            break
        y = np.zeros(j_used)
        for i in range(j_used - 1, -1, -1):
            y[i] = (g[i] - h[i, i + 1:j_used] @ y[i + 1:j_used]) / h[i, i]
        x = x + apply_m(v[:j_used].T @ y)
        res = np.linalg.norm(b - a @ x)
    return GmresResult(x=x, iterations=iters, residual_norm=float(res),
                       converged=bool(res <= target))
