"""Exception hierarchy for the aoimux package."""


class AoimuxError(Exception):
    """Base class for all package errors."""


class InvalidOrder(AoimuxError):
    """Code order is not a prime congruent to 3 mod 4, or exceeds the cap."""


class SingularSystem(AoimuxError):
    """Circulant system is not invertible; indicates a corrupted sequence."""


class LengthMismatch(AoimuxError):
    """Vector length does not match the system order."""


class NonIntegerRatio(AoimuxError):
    """Sampling rate is not an integer multiple of the carrier frequency."""


class InsufficientSamples(AoimuxError):
    """Stream is too short for the requested operation."""


class OrderTooLarge(AoimuxError):
    """Order exceeds the limit for a dense-matrix operation."""


class OutOfDomain(AoimuxError):
    """Query position lies outside the phantom."""


class NyquistViolation(AoimuxError):
    """Sampling rate below twice the carrier frequency."""


class NoPeak(AoimuxError):
    """Profile has no usable global maximum."""


class EdgePeak(AoimuxError):
    """Profile maximum sits at the edge or half maximum is never crossed."""


class ConfigError(AoimuxError):
    """Invalid or inconsistent run configuration."""
