"""Per-pixel change classification between two eras of water masks.

Classes follow the legend used throughout the source figures: red for water
that disappeared, green for water still present, blue for water that is new
(which, read inversely along coastlines, marks reclaimed land), and violet
strokes for stretches a human has marked as possibly running underground.
The violet class is manual only: it encodes field evidence, never inference.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .mercator import EARTH_RADIUS_M
from .raster import GeoReference, Raster
from .water import WaterMask


class ChangeClass(enum.IntEnum):
    NONE = 0
    LOST = 1
    PERSISTENT = 2
    NEW = 3


ANNOTATION_STATUSES = ("UNDERGROUND", "FIELD_CONFIRMED_PRESENT", "FIELD_CONFIRMED_LOST")


@dataclass(frozen=True)
class ManualAnnotation:
    """Human-drawn polyline/polygon over the modern frame with a field status."""

    vertices: tuple  # of (x, y) in modern pixel frame
    status: str
    note: str = ""
    closed: bool = False

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise ValueError("annotation needs at least 2 vertices")
        if self.status not in ANNOTATION_STATUSES:
            raise ValueError(
                f"status must be one of {ANNOTATION_STATUSES}, got {self.status!r}"
            )
        clean = tuple((float(x), float(y)) for x, y in self.vertices)
        for x, y in clean:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError("annotation vertices must be finite")
        object.__setattr__(self, "vertices", clean)

    def segments(self):
        pts = list(self.vertices)
        if self.closed:
            pts.append(pts[0])
        return list(zip(pts[:-1], pts[1:]))

    def to_dict(self) -> dict:
        return {
            "vertices": [[x, y] for x, y in self.vertices],
            "status": self.status,
            "note": self.note,
            "closed": self.closed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManualAnnotation":
        return cls(
            vertices=tuple((float(x), float(y)) for x, y in d["vertices"]),
            status=str(d["status"]),
            note=str(d.get("note", "")),
            closed=bool(d.get("closed", False)),
        )


@dataclass(eq=False)
class ChangeMap:
    """Per-pixel ChangeClass grid plus where it came from."""

    classes: np.ndarray  # (height, width) uint8 of ChangeClass values
    georef: GeoReference | None = None
    provenance: dict = field(default_factory=dict)
    annotations: tuple = ()

    def __post_init__(self):
        arr = np.asarray(self.classes)
        if arr.ndim != 2:
            raise ValueError(f"classes must be 2-D, got shape {arr.shape}")
        if arr.max(initial=0) > 3:
            raise ValueError("class values must be in 0..3")
        self.classes = arr.astype(np.uint8)

    @property
    def width(self) -> int:
        return self.classes.shape[1]

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    def counts(self) -> dict:
        binned = np.bincount(self.classes.ravel(), minlength=4)
        return {cls: int(binned[cls.value]) for cls in ChangeClass}

    def class_mask(self, cls: ChangeClass) -> np.ndarray:
        return self.classes == cls.value

    def pixel_ground_area_m2(self) -> np.ndarray | None:
        """Per-pixel ground area: Mercator pixel area scaled by cos(latitude).

        Mercator stretches lengths by 1/cos(lat); a single cos factor is the
        documented approximation here (areas are indicative, not cadastral).
        """
        if self.georef is None:
            return None
        g = self.georef
        cols, rows = np.meshgrid(
            np.arange(self.width) + 0.5, np.arange(self.height) + 0.5
        )
        y_m = g.d * cols + g.e * rows + g.f
        lat = 2.0 * np.arctan(np.exp(y_m / EARTH_RADIUS_M)) - math.pi / 2.0
        return g.pixel_area_m2() * np.cos(lat)

    def areas_m2(self) -> dict | None:
        area = self.pixel_ground_area_m2()
        if area is None:
            return None
        return {
            cls: float(area[self.classes == cls.value].sum()) for cls in ChangeClass
        }


def diff_masks(
    historical: WaterMask,
    modern: WaterMask,
    provenance: dict | None = None,
    annotations: tuple = (),
) -> ChangeMap:
    """Pixelwise truth table over two co-registered masks.

    LOST = historical only, PERSISTENT = both, NEW = modern only, NONE =
    neither; the four classes partition the frame by construction.
    """
    if (historical.width, historical.height) != (modern.width, modern.height):
        raise DimensionMismatch(
            f"historical {historical.width}x{historical.height} vs "
            f"modern {modern.width}x{modern.height}"
        )
    h, m = historical.bits, modern.bits
    classes = np.zeros(h.shape, dtype=np.uint8)
    classes[h & ~m] = ChangeClass.LOST.value
    classes[h & m] = ChangeClass.PERSISTENT.value
    classes[~h & m] = ChangeClass.NEW.value
    return ChangeMap(
        classes=classes,
        georef=historical.georef or modern.georef,
        provenance=dict(provenance or {}),
        annotations=tuple(annotations),
    )


@dataclass(frozen=True)
class ChangeMapStyle:
    """Legend colors; defaults mirror the figure legend (red/green/blue/violet)."""

    lost: tuple = (210, 30, 30, 255)
    persistent: tuple = (30, 160, 70, 255)
    new: tuple = (40, 80, 220, 255)
    none: tuple = (0, 0, 0, 0)
    underground: tuple = (148, 0, 211, 255)
    stroke_width: float = 3.0

    def color_of(self, cls: ChangeClass) -> tuple:
        return {
            ChangeClass.LOST: self.lost,
            ChangeClass.PERSISTENT: self.persistent,
            ChangeClass.NEW: self.new,
            ChangeClass.NONE: self.none,
        }[cls]


DEFAULT_STYLE = ChangeMapStyle()


def _stroke_polyline(
    pixels: np.ndarray, segments, color: tuple, width: float
) -> None:
    """Paint every pixel whose center lies within width/2 of any segment."""
    h, w = pixels.shape[:2]
    half = width / 2.0
    rgba = np.array(color, dtype=np.uint8)
    for (x0, y0), (x1, y1) in segments:
        lo_c = max(int(math.floor(min(x0, x1) - half)) - 1, 0)
        hi_c = min(int(math.ceil(max(x0, x1) + half)) + 1, w - 1)
        lo_r = max(int(math.floor(min(y0, y1) - half)) - 1, 0)
        hi_r = min(int(math.ceil(max(y0, y1) + half)) + 1, h - 1)
        if lo_c > hi_c or lo_r > hi_r:
            continue
        cols, rows = np.meshgrid(
            np.arange(lo_c, hi_c + 1) + 0.5, np.arange(lo_r, hi_r + 1) + 0.5
        )
        dx, dy = x1 - x0, y1 - y0
        seg_len2 = dx * dx + dy * dy
        if seg_len2 == 0.0:
            t = np.zeros_like(cols)
        else:
            t = np.clip(((cols - x0) * dx + (rows - y0) * dy) / seg_len2, 0.0, 1.0)
        px, py = x0 + t * dx, y0 + t * dy
        near = (cols - px) ** 2 + (rows - py) ** 2 <= half * half
        sub = pixels[lo_r : hi_r + 1, lo_c : hi_c + 1]
        sub[near] = rgba


def render_changemap(c: ChangeMap, style: ChangeMapStyle = DEFAULT_STYLE) -> Raster:
    """Paint the class grid in legend colors, then stroke UNDERGROUND lines.

    Output is a pure function of (ChangeMap, style): deterministic bytes.
    """
    out = np.zeros((c.height, c.width, 4), dtype=np.uint8)
    for cls in ChangeClass:
        out[c.classes == cls.value] = style.color_of(cls)
    for ann in c.annotations:
        if ann.status == "UNDERGROUND":
            _stroke_polyline(out, ann.segments(), style.underground, style.stroke_width)
    return Raster(pixels=out, georef=c.georef)
