"""Exception hierarchy shared across the package"""


class SpatialSeparationError(Exception):
    """Base class for every error raised by spatialmss"""


class ShapeMismatchError(SpatialSeparationError, ValueError):
    """Two arrays that must agree in shape or length do not"""


class DivergenceError(SpatialSeparationError, ArithmeticError):
    """Raised when a training loss becomes non-finite"""

    def __init__(self, message: str = "diverged"):
        super().__init__(message)


class ConfigError(SpatialSeparationError, ValueError):
    """Invalid experiment configuration or run label"""


class CheckpointError(SpatialSeparationError, ValueError):
    """Checkpoint file is malformed or incompatible"""
