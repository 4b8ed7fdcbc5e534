"""Exception types shared across the workbench.

Every error the HTTP layer reports carries the class name verbatim in the
response body, so these names are part of the external contract.
"""


class LostWaterError(Exception):
    """Base class for all workbench errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


# --- transform fitting -------------------------------------------------

class InsufficientPoints(LostWaterError):
    """Fewer enabled control points than the transform kind requires."""


class DegenerateConfiguration(LostWaterError):
    """Control points do not determine the transform (collinear, coincident, ...)."""


class NonInvertible(LostWaterError):
    """Fitted or requested matrix cannot be inverted / normalized."""


class AtInfinity(LostWaterError):
    """Projective mapping sent a point to infinity (denominator ~ 0)."""


# --- raster engine ------------------------------------------------------

class EmptyOutput(LostWaterError):
    """Requested output raster has zero area."""


class DimensionMismatch(LostWaterError):
    """Rasters or masks that must share a frame do not."""


class LatitudeOutOfRange(LostWaterError):
    """Latitude outside the Web Mercator domain (|lat| <= 85.06 deg)."""


class IoError(LostWaterError):
    """File could not be read or written."""


class MalformedWorldFile(LostWaterError):
    """World file sidecar does not contain exactly 6 parseable numbers."""


# --- project / service --------------------------------------------------

class SchemaError(LostWaterError):
    """Project document is structurally invalid."""


class UnsupportedSchema(SchemaError):
    """Project document uses an unknown schema version or unknown fields."""


class MissingImage(LostWaterError):
    """Project references an image file that does not exist or decode."""


class PipelineError(LostWaterError):
    """Error raised while running the change-detection pipeline.

    Wraps the stage-specific cause so callers can report which stage failed.
    """

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def name(self) -> str:
        if isinstance(self.cause, LostWaterError):
            return self.cause.name
        return type(self.cause).__name__
