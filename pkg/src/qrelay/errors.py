"""Exception hierarchy shared by all qrelay modules."""


class QRelayError(Exception):
    """Base class for qrelay errors."""


class LabelError(QRelayError, ValueError):
    """Unknown, duplicate or mismatched subsystem label."""


class DimensionCapError(QRelayError, ValueError):
    """A composite exceeds the configured total-dimension limit."""


class ValidationError(QRelayError, ValueError):
    """An object violates one of its invariants.

    ``invariant`` names the failed check and ``residual`` carries the
    measured violation so callers can judge borderline cases.
    """

    def __init__(self, message, invariant=None, residual=None):
        super().__init__(message)
        self.invariant = invariant
        self.residual = residual


class NonProductStateError(ValidationError):
    """Joint input states do not factor as required by the bound."""


class StructureError(QRelayError, ValueError):
    """A channel lacks the structure (role map, ORC, Hadamard) an evaluator needs."""


class InfeasibleError(QRelayError, RuntimeError):
    """Optimization found no point satisfying the hard constraint."""


class DegenerateCodebookError(QRelayError, RuntimeError):
    """The square-root measurement operator has no usable support."""
