from __future__ import annotations # Enable type annotation to be stored as string
from typing import Any


class SpectralError(Exception):
    """Base class for numerical failures. The report is a JSON-serializable summary that the CLI writes on exit code 2."""
    
    def __init__(self, message: str, report: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.report: dict[str, Any] = {'error': self.__class__.__name__, 'message': message}
        if report:
            self.report.update(report)

class IntegrationError(SpectralError):
    """Raised when the frame integrator fails, e.g. step-size underflow."""
    pass

class ZeroOnContourError(SpectralError):
    """Raised when a counting contour passes (numerically) through a zero."""
    pass

class ContourResolutionError(SpectralError):
    """Raised when the winding number does not stabilize under step halving."""
    pass

class CountMismatchError(SpectralError):
    """Raised when an annulus holds a different number of zeros than expected."""
    pass

class NewtonConvergenceError(SpectralError):
    """Raised when Newton refinement neither converges nor recovers through subdivision."""
    pass

class SingularPointError(SpectralError):
    """Raised when a divisor entry sits on a double point of the curve."""
    pass

class TrackingLossError(SpectralError):
    """Raised when continuation loses an entry between two samples."""
    pass

class BlowUpError(SpectralError):
    """Raised when the y-evolution exceeds the configured coefficient bound."""
    pass

class NotTameError(SpectralError):
    """Raised when an operation needs pairwise distinct divisor points."""
    pass

class HermiteSystemError(SpectralError):
    """Raised on a branch-point collision or an ill-conditioned Hermite block."""
    pass

class NodeCollisionError(SpectralError):
    """Raised when a Cauchy circle runs into an interpolation node."""
    pass

class FixedPointError(SpectralError):
    """Raised when the finite-type iteration does not converge."""
    pass

class PeriodMatrixError(SpectralError):
    """Raised for degenerate gaps, overlapping cuts or a singular A-period matrix."""
    pass

class SheetMatchingError(SpectralError):
    """Raised when a divisor point cannot be assigned to a sheet."""
    pass
