"""Quadrature rules on the reference triangle and unit edge.

Triangle rules are exact to the requested polynomial degree, have strictly
positive weights and weights summing to the reference area 1/2.  Low
degrees use the classic symmetric rules; degrees above five fall back to a
Duffy-collapsed tensor Gauss rule, which keeps weights positive at any
order.  Edge rules are Gauss-Legendre on [0, 1].
"""

import numpy as np

from .errors import UnsupportedError

MAX_DEGREE = 10

# Symmetric orbits in barycentric form (a = duplicated coordinate), with
# weights normalized to sum to one; scaled by the reference area below.
_SYM_RULES = {
    1: [("centroid", None, 1.0)],
    2: [("orbit3", 1.0 / 6.0, 1.0 / 3.0)],
    4: [("orbit3", 0.445948490915965, 0.223381589678011),
        ("orbit3", 0.091576213509771, 0.109951743655322)],
    5: [("centroid", None, 0.225),
        ("orbit3", 0.470142064105115, 0.132394152788506),
        ("orbit3", 0.101286507323456, 0.125939180544827)],
}


def _expand(rule):
    pts, wts = [], []
    for kind, a, w in rule:
        if kind == "centroid":
            pts.append((1.0 / 3.0, 1.0 / 3.0))
            wts.append(w)
        else:
            b = 1.0 - 2.0 * a
            for p in ((a, a), (b, a), (a, b)):
                pts.append(p)
                wts.append(w)
    return np.asarray(pts), 0.5 * np.asarray(wts)


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _duffy(degree):
    # x = a, y = b*(1-a); the jacobian (1-a) raises the a-degree by one.
    na = (degree + 3) // 2
    nb = (degree + 2) // 2
    xa, wa = _gauss01(na)
    xb, wb = _gauss01(nb)
    a, b = np.meshgrid(xa, xb, indexing="ij")
    wgt = np.outer(wa, wb) * (1.0 - a)
    pts = np.column_stack([a.ravel(), (b * (1.0 - a)).ravel()])
    return pts, wgt.ravel()


def triangle_rule(degree):
    """Return ``(points, weights)`` exact for polynomials of ``degree``."""
    if not 1 <= degree <= MAX_DEGREE:
        raise UnsupportedError(
            f"triangle quadrature degree {degree} outside [1, {MAX_DEGREE}]")
    for d in sorted(_SYM_RULES):
        if degree <= d:
            return _expand(_SYM_RULES[d])
    return _duffy(degree)


def edge_rule(degree):
    """Gauss-Legendre rule on [0, 1] exact for polynomials of ``degree``."""
    if not 1 <= degree <= 2 * MAX_DEGREE:
        raise UnsupportedError(f"edge quadrature degree {degree} out of range")
    return _gauss01((degree + 2) // 2)
