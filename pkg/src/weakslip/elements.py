"""Lagrange basis functions on the reference triangle.

The reference cell is the unit triangle with vertices (0,0), (1,0), (0,1).
Dof ordering follows the mesh conventions: vertex dofs first (P1, P2),
then edge-midpoint dofs (P2), where local edge ``k`` is the edge opposite
local vertex ``k``.  Degree 0 has a single cell dof.
"""

import numpy as np

from .errors import UnsupportedError

SUPPORTED_DEGREES = (0, 1, 2)

# Reference coordinates of the endpoints of each local edge.  Edge k runs
# from vertex (k+1) % 3 to vertex (k+2) % 3, so that with counterclockwise
# cells the rotated tangent points outward.
_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
EDGE_VERTICES = ((1, 2), (2, 0), (0, 1))


def ndofs(degree):
    if degree == 0:
        return 1
    return 3 * degree  # 3 for P1, 6 for P2


def dof_points(degree):
    """Reference coordinates of the nodal dofs."""
    if degree == 0:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]])
    if degree == 1:
        return _REF_VERTS.copy()
    if degree == 2:
        mids = np.array([0.5 * (_REF_VERTS[a] + _REF_VERTS[b])
                         for a, b in EDGE_VERTICES])
        return np.vstack([_REF_VERTS, mids])
    raise UnsupportedError(f"unsupported Lagrange degree {degree}")


def tabulate_basis(degree, points):
    """Tabulate basis values and reference gradients.

    Parameters
    ----------
    degree : int
        One of 0, 1, 2.
    points : ndarray, shape (nq, 2)
        Reference-cell evaluation points.

    Returns
    -------
    phi : ndarray, shape (nq, ndof)
    dphi : ndarray, shape (nq, ndof, 2)
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    x, y = points[:, 0], points[:, 1]
    lam = np.stack([1.0 - x - y, x, y], axis=1)
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

    if degree == 0:
        return np.ones((len(points), 1)), np.zeros((len(points), 1, 2))
    if degree == 1:
        return lam, np.broadcast_to(dlam, (len(points), 3, 2)).copy()
    if degree == 2:
        nq = len(points)
        phi = np.empty((nq, 6))
        dphi = np.empty((nq, 6, 2))
        for i in range(3):
            phi[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
            dphi[:, i] = (4.0 * lam[:, i, None] - 1.0) * dlam[i]
        for k, (a, b) in enumerate(EDGE_VERTICES):
            phi[:, 3 + k] = 4.0 * lam[:, a] * lam[:, b]
            dphi[:, 3 + k] = 4.0 * (lam[:, a, None] * dlam[b]
                                    + lam[:, b, None] * dlam[a])
        return phi, dphi
    raise UnsupportedError(f"unsupported Lagrange degree {degree}")


def edge_to_ref(local_edge, t):
    """Map edge parameter ``t`` in [0, 1] to reference-cell coordinates."""
    t = np.asarray(t, dtype=float)
    a, b = EDGE_VERTICES[local_edge]
    return np.outer(1.0 - t, _REF_VERTS[a]) + np.outer(t, _REF_VERTS[b])
