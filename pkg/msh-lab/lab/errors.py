"""
Errors Module

Exception hierarchy shared by the numerical modules. The CLI maps these
onto exit codes through the exit handler.
"""


class LabError(Exception):
    """Base class for every error raised by the laboratory."""


class ArgumentError(LabError, ValueError):
    """An argument is out of range or inconsistent with its companions."""


class ConstraintError(ArgumentError):
    """A parameter violates the admissibility bound of a weight family."""


class SingularityError(LabError):
    """A singular field was evaluated on its polar set."""


class DegenerateProfileError(LabError):
    """An eigenvalue profile has a vanishing tangential slot."""


class ConstructionError(LabError):
    """A certified construction could not be completed."""


class GeometryError(LabError):
    """A stencil or sampling region leaves the admissible domain."""


class CalibrationError(LabError):
    """Calibration produced a degenerate normalization."""


class ConfigError(LabError):
    """A run configuration is malformed or invalid."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field
