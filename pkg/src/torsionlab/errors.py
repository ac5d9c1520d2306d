"""Exception hierarchy shared by every torsionlab module."""


class TorsionLabError(Exception):
    """Base class for all library errors."""


class DomainError(TorsionLabError, ValueError):
    """Input lies outside the domain of an operation (zero vector, non-periodic orbit...)."""


class RotationTooFastError(TorsionLabError):
    """Time refinement hit its floor while an angle step still exceeded the bound."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StepUnderflowError(TorsionLabError):
    """Adaptive refinement of an integrator or a curve sampler stalled."""


class DegeneracyError(TorsionLabError):
    """Two orbits collided, or a tangent vector vanished."""


class NormalizationError(TorsionLabError):
    """No height record was found to normalize a tilt determination."""


class PreconditionError(TorsionLabError):
    """A harness precondition failed; ``report`` carries the evidence."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoBracketError(TorsionLabError):
    """A root search found no sign change even at maximal resolution."""


class ConfigError(TorsionLabError):
    """Configuration file failed validation."""

    def __init__(self, message, key=None, line=None):
        where = ""
        if key is not None:
            where += f" [key {key}]"
        if line is not None:
            where += f" [line {line}]"
        super().__init__(message + where)
        self.key = key
        self.line = line
