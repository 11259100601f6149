"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs (CLI exit code 2) and
``NumericalError`` for numerical breakdown (CLI exit code 3).
"""


class MCARMAError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ValidationError(MCARMAError, ValueError):
    exit_code = 2


class NumericalError(MCARMAError, ArithmeticError):
    exit_code = 3


# -- validation ------------------------------------------------------------

class DimensionMismatch(ValidationError):
    pass


class UnstableDrift(ValidationError):
    pass


class ObservationNotOrthonormal(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class InvalidNigParams(ValidationError):
    pass


class StepNotDividingDelta(ValidationError):
    pass


class LagOutOfRange(ValidationError):
    pass


class EmptyPath(ValidationError):
    pass


class EmptySample(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class MissingCriticalValue(ValidationError):
    pass


class AsymmetricZeroCoefficient(ValidationError):
    pass


# -- numerical -------------------------------------------------------------

class MatrixExponentialOverflow(NumericalError):
    pass


class TruncationCapExceeded(NumericalError):
    pass


class LyapunovSolveFailed(NumericalError):
    pass


class NearSingularSpectrum(NumericalError):
    pass


class CholeskyFailed(NumericalError):
    pass


class InsufficientSamples(NumericalError):
    pass


class NumericalBlowup(NumericalError):
    pass


class QuadratureUnconverged(NumericalError):
    pass


class TailNotNegligible(NumericalError):
    pass


class NotPSDBeyondTolerance(NumericalError):
    pass


# -- output ----------------------------------------------------------------

class IoError(MCARMAError, OSError):
    """Reading or writing an artifact failed."""

    exit_code = 1
