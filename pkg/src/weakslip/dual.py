"""Forward-mode automatic differentiation on dual numbers.

A :class:`Dual` carries a value payload and a derivative payload through
arithmetic.  Payloads may be scalars, numpy arrays (for batched evaluation
over quadrature points) or other :class:`Dual` instances, which yields
nested second-order propagation.  Derivative payloads may carry extra
*leading* axes for multiple seed directions; all arithmetic is plain
elementwise numpy broadcasting, so a value of shape ``(n,)`` combines with
a derivative of shape ``(k, n)`` without copying.

Nesting levels are tracked so that independent differentiation passes can
coexist: a dual of lower level is treated as a constant by the arithmetic
of a higher level.  This is what allows the boundary-term assembly to
differentiate the viscous flux with respect to the velocity gradient
(inner pass) while the state itself carries derivatives with respect to
the local dofs (outer pass).
"""

import math

import numpy as np
from scipy import special


def level_of(x):
    return x.level if isinstance(x, Dual) else 0


class Dual:
    """Dual number ``val + dot * eps`` with ``eps**2 = 0``.

    Parameters
    ----------
    val : float, ndarray or Dual
        Value payload.  Its nesting depth determines this dual's level.
    dot : float, ndarray or Dual
        Derivative payload.  Must broadcast against ``val``; extra leading
        axes enumerate seed directions.
    """

    __slots__ = ("val", "dot", "level")

    # Make numpy defer to the reflected operators instead of broadcasting
    # a Dual into an object array.
    __array_ufunc__ = None

    def __init__(self, val, dot):
        self.val = val
        self.dot = dot
        self.level = level_of(val) + 1

    def __repr__(self):
        return f"Dual({self.val!r}, {self.dot!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            if other.level == self.level:
                return Dual(self.val + other.val, self.dot + other.dot)
            if other.level > self.level:
                return Dual(self + other.val, other.dot)
        return Dual(self.val + other, self.dot)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __mul__(self, other):
        if isinstance(other, Dual):
            if other.level == self.level:
                return Dual(self.val * other.val,
                            self.dot * other.val + self.val * other.dot)
            if other.level > self.level:
                return Dual(self * other.val, self * other.dot)
        return Dual(self.val * other, self.dot * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if other.level > self.level:
                return other.__rtruediv__(self)
            if other.level == self.level:
                inv = 1.0 / other.val
                return Dual(self.val * inv,
                            (self.dot - self.val * inv * other.dot) * inv)
        return Dual(self.val / other, self.dot / other)

    def __rtruediv__(self, other):
        # other is a constant with respect to this level.
        inv = 1.0 / self.val
        return Dual(other * inv, -(other * inv) * inv * self.dot)

    def __pow__(self, expo):
        if isinstance(expo, Dual):
            raise NotImplementedError("dual exponents are not supported")
        return Dual(self.val ** expo,
                    self.dot * (expo * self.val ** (expo - 1)))

    # Comparisons act on values only; used for branching on plain data.
    def __lt__(self, other):
        return value(self) < value(other)

    def __le__(self, other):
        return value(self) <= value(other)

    def __gt__(self, other):
        return value(self) > value(other)

    def __ge__(self, other):
        return value(self) >= value(other)


def value(x):
    """Strip all derivative payloads, returning the innermost value."""
    while isinstance(x, Dual):
        x = x.val
    return x


def lift(x, lvl):
    """Embed ``x`` at nesting level ``lvl`` by wrapping with zero dots.

    Levels must be homogeneous across the operands of a differentiation
    pass, otherwise a low-level payload would be promoted by arithmetic
    into the wrong derivative channel.
    """
    while level_of(x) < lvl:
        x = Dual(x, 0.0)
    return x


def strip_level(x, lvl):
    """Value of ``x`` with the given differentiation level removed."""
    if isinstance(x, Dual) and x.level == lvl:
        return x.val
    return x


def dot_at_level(x, lvl):
    """Derivative payload of ``x`` at a level, or 0.0 if independent."""
    if isinstance(x, Dual) and x.level == lvl:
        return x.dot
    return 0.0


def sqrt(x):
    if isinstance(x, Dual):
        r = sqrt(x.val)
        with np.errstate(divide="ignore", invalid="ignore"):
            return Dual(r, x.dot * (0.5 / r))
    return np.sqrt(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.val)
        return Dual(e, x.dot * e)
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        with np.errstate(divide="ignore", invalid="ignore"):
            return Dual(log(x.val), x.dot / x.val)
    return np.log(x)


def erf(x):
    if isinstance(x, Dual):
        two_over_sqrt_pi = 2.0 / math.sqrt(math.pi)
        return Dual(erf(x.val),
                    x.dot * (two_over_sqrt_pi * exp(-x.val * x.val)))
    return special.erf(x)


def where(cond, a, b):
    """Elementwise select that keeps derivative payloads intact."""
    la, lb = level_of(a), level_of(b)
    if la or lb:
        lvl = max(la, lb)
        return Dual(where(cond, strip_level(a, lvl), strip_level(b, lvl)),
                    where(cond, dot_at_level(a, lvl), dot_at_level(b, lvl)))
    return np.where(cond, a, b)


def dual_eval(f, x):
    """Evaluate ``f`` together with its first and second derivative.

    Parameters
    ----------
    f : callable
        Unary function composed of dual-aware arithmetic and the module
        functions (`sqrt`, `exp`, `log`, `erf`).
    x : float or ndarray
        Evaluation point(s).

    Returns
    -------
    value, first, second : like ``x``
        ``f(x)``, ``f'(x)`` and ``f''(x)``.  At points where a derivative
        does not exist (e.g. ``sqrt`` at zero) the corresponding entries
        are non-finite rather than raising.

    Notes
    -----
    Second derivatives come from one level of nesting: the argument is
    seeded as ``Dual(Dual(x, 1), Dual(1, 0))`` and the mixed payload of
    the result is ``f''``.
    """
    inner = Dual(x, _one_like(x))
    seed = Dual(inner, Dual(_one_like(x), _zero_like(x)))
    out = f(seed)
    lvl_out = level_of(out)
    if lvl_out == 0:
        z = _zero_like(out)
        return out, z, z
    out_val = strip_level(out, 2)
    val = strip_level(out_val, 1)
    first = dot_at_level(out_val, 1)
    second = dot_at_level(dot_at_level(out, 2), 1)
    if isinstance(first, Dual) or isinstance(second, Dual):
        raise AssertionError("unexpected nesting in dual_eval result")
    return val, first, second


def _one_like(x):
    return np.ones_like(x) if isinstance(x, np.ndarray) else 1.0


def _zero_like(x):
    return np.zeros_like(x) if isinstance(x, np.ndarray) else 0.0
