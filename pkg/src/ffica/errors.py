"""Exception types shared across the package."""


class FFICAError(Exception):
    """Base class for all package-specific errors."""


class NoInverseError(FFICAError, ZeroDivisionError):
    """Raised when asked for the multiplicative inverse of zero."""


class SingularMatrixError(FFICAError, ValueError):
    """Raised when an operation requires an invertible matrix and got none."""


class DimensionError(FFICAError, ValueError):
    """Raised on shape/length mismatches between field objects."""


class DomainError(FFICAError, ValueError):
    """Raised when a numeric argument lies outside the operation's domain."""


class CapacityError(FFICAError, ValueError):
    """Raised when q**d (or an enumeration) exceeds the configured budget."""


class ConfigError(FFICAError, ValueError):
    """Raised on invalid algorithm configuration values."""


class FormatError(FFICAError, ValueError):
    """Raised on malformed text or binary serializations."""


class TruncationError(FormatError):
    """Raised when a binary payload ends before its declared length."""
