"""Exception types shared across the library."""


class NomavqError(Exception):
    """Base class for all library errors."""


class ConfigurationError(NomavqError):
    """Scenario or model configuration is inconsistent."""


class InsufficientData(NomavqError):
    """Too few R-D points for curve fitting (need at least six)."""


class FitRejected(NomavqError):
    """A fitted R-D curve violates the model invariants."""


class InfeasibleRate(NomavqError):
    """Requested rate is below the stream's feasible rate band."""


class Infeasible(NomavqError):
    """No power allocation satisfies the constraint set."""


class NonConvergence(NomavqError):
    """Iterative solver hit its iteration cap.

    Carries a ``diagnostics`` dict with the last iterate state.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class Unbounded(NomavqError):
    """Linear program is unbounded."""


class PayloadOverflow(NomavqError):
    """A stacked transmission-block column exceeds the RTP payload size."""
