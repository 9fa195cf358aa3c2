"""Exception hierarchy shared by every module of the package."""


class HyperfactError(Exception):
    """Base class for all errors raised by hyperfact."""


class DimensionError(HyperfactError, ValueError):
    """Shapes of the supplied matrices are incompatible."""


class PreconditionError(HyperfactError, ValueError):
    """An input violates the documented precondition of an operation."""


class NotPSDError(HyperfactError):
    """A matrix expected to be positive semidefinite is not.

    The failing :class:`~hyperfact.matcore.PsdCertificate` is kept on the
    ``certificate`` attribute so callers can report the witness.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class IllConditionedError(HyperfactError):
    """A factorization was computed but its residual exceeds tolerance."""


class ConvergenceError(HyperfactError):
    """An iteration stopped before reaching its tolerance."""


class InconsistencyError(HyperfactError):
    """An identity that must hold exactly failed numerically."""


class ClaimError(HyperfactError):
    """A named mathematical claim could not be certified on the input."""

    def __init__(self, claim, message, certificate=None):
        super().__init__(f"{claim}: {message}")
        self.claim = claim
        self.certificate = certificate
