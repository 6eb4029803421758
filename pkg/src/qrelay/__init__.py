"""Rate bounds, structure tests and coding primitives for quantum relay channels."""
from . import bounds, channels, codesim, entropy, optimizer, qlin
from .errors import (DegenerateCodebookError, DimensionCapError, InfeasibleError, LabelError,
                     NonProductStateError, QRelayError, StructureError, ValidationError)

__version__ = "0.1.0"

__all__ = ["bounds", "channels", "codesim", "entropy", "optimizer", "qlin",
           "DegenerateCodebookError", "DimensionCapError", "InfeasibleError", "LabelError",
           "NonProductStateError", "QRelayError", "StructureError", "ValidationError"]
