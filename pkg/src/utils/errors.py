"""Exception types shared across the package."""
from typing import Iterable


class ShapeMismatchError(ValueError):
    """Tensor or raster dimensions do not satisfy an operation's contract."""


class NonFiniteError(FloatingPointError):
    """A NaN or Inf was produced where only finite values are allowed."""


class GeometryError(ValueError):
    """Skeleton geometry is degenerate for the requested transform."""


class DegenerateHomographyError(GeometryError):
    """No usable homography could be sampled."""


class CheckpointError(ValueError):
    """Checkpoint file is malformed, truncated or corrupted."""


class ManifestValidationError(ValueError):
    """Manifest failed validation; carries every violation found."""

    def __init__(self, errors: Iterable[str]):
        self.errors = list(errors)
        details = "\n".join(f"  - {e}" for e in self.errors)
        super().__init__(f"Manifest has {len(self.errors)} error(s):\n{details}")


class SkeletonFileError(ValueError):
    """Skeleton sequence file could not be parsed."""
