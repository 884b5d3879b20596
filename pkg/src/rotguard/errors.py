"""Exception types shared across the package."""


class RotguardError(Exception):
    """Base class for all rotguard errors."""


class InvalidImageError(RotguardError, ValueError):
    """Raised when an array is not a valid RGB image raster."""


class AllBlackError(RotguardError):
    """Trimming would remove every pixel: the input is entirely black."""


class EmptyBaselineError(RotguardError):
    """The baseline label set is empty, so the similarity metric is undefined."""


class InvalidScoreError(RotguardError, ValueError):
    """A confidence score is outside the accepted (0, 100] input range."""


class AuthError(RotguardError):
    """Credentials are missing or were rejected by the labeling API."""


class QuotaError(RotguardError):
    """The labeling API reported a rate/quota limit. Not retried."""


class TransportError(RotguardError):
    """Network-level failure talking to the labeling API, after retries."""


class FixtureMissError(RotguardError):
    """The fixture replayer has no record for the requested key."""


class CacheCorruptError(RotguardError):
    """A stored cache/fixture record failed schema validation."""


class UnknownImageError(RotguardError):
    """An angle-registry backend was asked about an unregistered image."""


class ModelLoadError(RotguardError):
    """The model artifact or its sidecar could not be loaded."""


class ShapeError(RotguardError):
    """The model's output vector does not have exactly 360 entries."""


class DegenerateImageError(RotguardError):
    """The image is too small to be meaningfully orientation-corrected."""


class EmptyCorpusError(RotguardError):
    """The sweep corpus directory contains no readable images."""
