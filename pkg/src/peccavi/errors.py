"""Exception types raised across the package."""


class PeccaviError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(PeccaviError):
    """Array shapes or image dimensions do not agree with the operation's contract."""


class ChannelError(PeccaviError):
    """Requested logical channel does not exist for the given image."""


class SpectrumSymmetryError(PeccaviError):
    """Spectrum violates the conjugate symmetry required for a real-valued inverse."""


class SidecarError(PeccaviError):
    """Saliency sidecar JSON is missing required fields or is malformed."""


class ManifestError(PeccaviError):
    """Paraphrase manifest is malformed or references missing variants."""


class CalibrationError(PeccaviError):
    """Detection key lacks null statistics, or the calibration corpus is unusable."""


class EmptyRegionError(PeccaviError):
    """An operation that needs at least one region received none."""
