"""
Error hierarchy shared by every mapping module
"""
from typing import Any, Optional


class GpomError(Exception):
    """Base class for all typed errors raised by the toolkit"""


class InvalidInputError(GpomError, ValueError):
    """Arguments violate an operation's preconditions"""


class InvalidStateError(GpomError):
    """Object is not in a state that supports the requested operation"""


class IllConditionedError(GpomError):
    """A factorization failed even after the jitter policy was applied"""

    def __init__(self, message: str, min_pivot: Optional[float] = None):
        if min_pivot is not None:
            message = f"{message} (minimum pivot {min_pivot:.3e})"
        super().__init__(message)
        self.min_pivot = min_pivot


class OptimizationFailedError(GpomError):
    """Every objective evaluation of a hyperparameter search failed"""

    def __init__(self, message: str, best: Any = None):
        super().__init__(message)
        self.best = best


class NoBracketError(GpomError):
    """Monotone root bracketing exhausted its doubling budget"""


class InvalidPoseError(GpomError):
    """Sensor pose lies inside an obstacle"""


class DatasetReadError(GpomError):
    """A dataset file could not be read"""


class EmptyDatasetError(GpomError):
    """A dataset contained no usable records"""


class UndefinedAucError(GpomError):
    """AUC requested for labels that contain a single class"""


class ConfigError(GpomError):
    """Experiment configuration is invalid"""
