"""Exception types raised across the package."""


class StabcollError(Exception):
    """Base class for all package errors."""


class DomainError(StabcollError, ValueError):
    """A point lies outside the parametric or physical domain."""


class UnsupportedOrderError(StabcollError, ValueError):
    """Requested derivative order is not available."""


class UnsupportedDegreeError(StabcollError, ValueError):
    """Spline degree too low for the requested scheme."""


class InterpolationError(StabcollError):
    """Greville interpolation matrix could not be factorized."""


class DegenerateGridError(StabcollError, ValueError):
    """Collocation grid too small to define mesh metrics."""


class DegenerateTauError(StabcollError, ValueError):
    """Stabilization parameter undefined (no advection and no diffusion)."""


class AssemblyError(StabcollError):
    """A row was written twice or never written during assembly."""


class SingularSystemError(StabcollError):
    """Direct factorization met a (numerically) zero pivot.

    Attributes
    ----------
    row : int or None
        Index of the equation row associated with the offending pivot.
    label : str or None
        Human readable label of that row, when the system carries labels.
    """

    def __init__(self, message, row=None, label=None):
        super().__init__(message)
        self.row = row
        self.label = label


class NonConvergenceError(StabcollError):
    """Newton iteration stopped without meeting the residual tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class ConfigError(StabcollError, ValueError):
    """Invalid run configuration."""
