"""Exception types raised by the dclpolsar package."""


class DclError(Exception):
    """Base class for all dclpolsar errors."""


class NonFiniteError(DclError, ValueError):
    """Input contains NaN or infinite values."""


class ShapeMismatchError(DclError, ValueError):
    """Array or patch dimensions do not match what the operation expects."""


class EmptySetError(DclError, ValueError):
    """An operation that needs at least one sample received none."""


class OutOfRangeError(DclError, ValueError):
    """A scalar argument lies outside its permitted range."""


class NaNLossError(DclError, ArithmeticError):
    """Training produced a non-finite loss or parameter value."""


class ExhaustedError(DclError, RuntimeError):
    """The sampling pool is smaller than the requested draw."""


class GridMismatchError(DclError, ValueError):
    """Two training logs do not cover the same stage grid."""


class FormatError(DclError, ValueError):
    """A serialized file is malformed or truncated."""


class VersionMismatchError(FormatError):
    """A serialized file uses an unsupported format version."""


class InvalidCovarianceError(DclError, ValueError):
    """A class covariance matrix is not Hermitian positive semidefinite."""


class SceneTooSmallError(DclError, ValueError):
    """The scene is smaller than the requested patch size."""


class InsufficientSamplesError(DclError, ValueError):
    """A class has too few samples to appear in every split."""
