class SpectralError(Exception):
    """Base class for errors raised by the spectral library"""


class ContractError(SpectralError, ValueError):
    """Raised when inputs violate a precondition (shape, size, grid mismatch)"""


class ConfigError(SpectralError):
    """Raised for invalid run configuration or unknown presets"""


class FormatError(SpectralError):
    """Raised when an artifact file is malformed or has an unsupported version"""


class NumericalError(SpectralError):
    """
    Raised when a computation produces non-finite values or diverges.

    `partial` carries whatever was computed before the failure (a partial
    trajectory, the last good parameters, ...) so callers can persist it.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class OracleError(NumericalError):
    """Raised when the kernel-mode integral oracle does not converge"""

    def __init__(self, message, estimate=None):
        super().__init__(message, partial=estimate)
        self.estimate = estimate
