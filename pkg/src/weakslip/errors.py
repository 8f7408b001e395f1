"""Exception types raised by the library.

Every failure mode that callers may want to distinguish gets its own class;
everything derives from :class:`WeakslipError` so ``except WeakslipError``
catches library failures without swallowing programming errors.
"""


class WeakslipError(Exception):
    """Base class for all library-specific errors."""


class InvalidArgumentError(WeakslipError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedError(WeakslipError, NotImplementedError):
    """A requested feature combination is outside the supported set."""


class GeometryError(WeakslipError):
    """A mesh entity has invalid geometry (zero area, bad orientation, ...)."""


class MeshConstructionError(WeakslipError):
    """Mesh generation failed to produce a valid conforming triangulation."""


class PointLocationError(WeakslipError):
    """A query point could not be located inside any cell."""


class SingularStateError(WeakslipError):
    """A constitutive law was evaluated where its derivative is undefined.

    Typically raised when a viscosity model involving ``sqrt(eps:eps)`` is
    differentiated at a state with identically zero strain rate.
    """


class AssemblyError(WeakslipError):
    """System assembly failed (non-finite entries, inconsistent data, ...)."""


class SingularMatrixError(WeakslipError):
    """A direct or incomplete factorization hit a zero pivot."""


class NonConvergenceError(WeakslipError):
    """An iterative solver exhausted its iteration budget.

    Attributes
    ----------
    history : list of float
        Residual norms recorded before the failure, one per iteration.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
