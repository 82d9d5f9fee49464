"""Exception types shared across the package."""


class BiphotonError(Exception):
    """Base class for every error raised by biphoton."""


class QuadratureError(BiphotonError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, value=None, error=None, intervals=None):
        super().__init__(message)
        self.value = value
        self.error = error
        self.intervals = intervals


class DegenerateInputError(BiphotonError, ValueError):
    """Input leaves a ratio or estimator undefined (e.g. zero total rate)."""


class NumericalConsistencyError(BiphotonError):
    """A quantity that must vanish analytically came out non-negligible."""


class RegimeError(BiphotonError, ValueError):
    """Parameters fall outside the approximation the formula relies on."""


class AmbiguityError(BiphotonError):
    """A fit has no unique optimum; ``candidates`` lists competing minima."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class OracleResolutionError(BiphotonError):
    """Brute-force grid too coarse to resolve the coincidence band."""


class TagFormatError(BiphotonError, ValueError):
    """Malformed, truncated or unsorted time-tag file."""


class DataFormatError(BiphotonError, ValueError):
    """Malformed measurement or configuration file."""
