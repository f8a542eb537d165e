"""Exception types shared across the package."""


class VinegraftError(Exception):
    """Base class for every error raised by this package."""


class EmptyMaskError(VinegraftError):
    """A mask operation required at least one foreground pixel."""


class DegenerateMaskError(VinegraftError):
    """A mask has too few foreground pixels for axis estimation."""


class ShapeMismatchError(VinegraftError):
    """Paired rasters disagree in dimensions."""


class EmptyBufferError(VinegraftError):
    """No usable cutouts are available."""


class OutOfFrameError(VinegraftError):
    """A transformed cutout has no overlap with the scene frame."""


class SceneSpecError(VinegraftError):
    """Invalid synthetic scene specification."""


class EncodingError(VinegraftError):
    """Unknown or malformed instance-map or label encoding."""
