"""Exception types shared across the package."""


class SignStormError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SignStormError):
    """Vector operands have inconsistent lengths."""


class NonFiniteValue(SignStormError):
    """A NaN or Inf appeared where only finite values are allowed."""


class UnsupportedKind(SignStormError):
    """Unknown optimizer kind requested."""


class InvalidConstant(SignStormError):
    """A problem or theorem constant is outside its admissible range."""


class RhoConstraintViolated(SignStormError):
    """sqrt(beta2)/beta1 >= 1, outside the regime the analysis covers."""


class OutOfRange(SignStormError):
    """Scalar argument outside its documented domain."""


class PreconditionNotMet(SignStormError):
    """A checker was invoked on a run outside its guarded domain."""


class DegenerateFit(SignStormError):
    """Rate fit requested on too few or non-positive data points."""


class EmptyInput(SignStormError):
    """An aggregate was requested over zero samples."""


class ConfigError(SignStormError):
    """Run configuration is malformed or fails validation."""


class MalformedReport(SignStormError):
    """Report JSON lacks the required structure."""
