"""Water-body extraction by HSV color rules, mask cleanup, and mask warping.

Detection is rule-based on purpose: the historical maps draw water as
blue-gray washes, modern basemaps as saturated blue, and a per-style list of
HSV ranges makes the criterion explicit, configurable, and testable. Masks
are cleaned with a morphological open+close and a minimum-component-area
filter before any comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import EmptyOutput
from .raster import GeoReference, Raster
from .transforms import Transform2D


@dataclass(frozen=True)
class HsvRange:
    """Inclusive HSV box; hue in degrees wraps through 360 when h_lo > h_hi."""

    h_lo: float
    h_hi: float
    s_lo: float = 0.0
    s_hi: float = 1.0
    v_lo: float = 0.0
    v_hi: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.h_lo <= 360.0 and 0.0 <= self.h_hi <= 360.0):
            raise ValueError("hue bounds must lie in [0, 360]")
        for lo, hi, name in (
            (self.s_lo, self.s_hi, "saturation"),
            (self.v_lo, self.v_hi, "value"),
        ):
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"{name} bounds must satisfy 0 <= lo <= hi <= 1")

    def contains(self, h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.h_lo <= self.h_hi:
            hue_ok = (h >= self.h_lo) & (h <= self.h_hi)
        else:
            hue_ok = (h >= self.h_lo) | (h <= self.h_hi)
        return (
            hue_ok
            & (s >= self.s_lo)
            & (s <= self.s_hi)
            & (v >= self.v_lo)
            & (v <= self.v_hi)
        )

    def to_dict(self) -> dict:
        return {
            "h_lo": self.h_lo,
            "h_hi": self.h_hi,
            "s_lo": self.s_lo,
            "s_hi": self.s_hi,
            "v_lo": self.v_lo,
            "v_hi": self.v_hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HsvRange":
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class WaterColorConfig:
    """Which colors count as water for one map style, plus cleanup knobs."""

    ranges: tuple  # of HsvRange
    min_component_area: int = 50
    morphology_radius: int = 1

    def __post_init__(self):
        if not self.ranges:
            raise ValueError("at least one HSV range is required")
        if self.min_component_area < 1:
            raise ValueError("min_component_area must be >= 1")
        if self.morphology_radius < 0:
            raise ValueError("morphology_radius must be >= 0")

    def to_dict(self) -> dict:
        return {
            "ranges": [r.to_dict() for r in self.ranges],
            "min_component_area": self.min_component_area,
            "morphology_radius": self.morphology_radius,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WaterColorConfig":
        return cls(
            ranges=tuple(HsvRange.from_dict(r) for r in d["ranges"]),
            min_component_area=int(d.get("min_component_area", 50)),
            morphology_radius=int(d.get("morphology_radius", 1)),
        )


# Saturated basemap blue (lakes/rivers/sea in current web map styles).
MODERN_BASEMAP_BLUE = WaterColorConfig(
    ranges=(HsvRange(h_lo=190.0, h_hi=230.0, s_lo=0.2, v_lo=0.2),),
)

# Hand-drawn blue-gray washes fade badly; the wide hue band and the low
# saturation floor (0.08) keep pale scanned water in.
HISTORICAL_BLUE_GRAY = WaterColorConfig(
    ranges=(HsvRange(h_lo=170.0, h_hi=260.0, s_lo=0.08, v_lo=0.15),),
)

STYLE_PRESETS = {
    "modern-basemap": MODERN_BASEMAP_BLUE,
    "historical-wash": HISTORICAL_BLUE_GRAY,
}


def rgb_to_hsv_arrays(
    pixels: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized RGB(A) -> (hue deg, saturation 0-1, value 0-1).

    Matches the colorsys definition: v = max, s = (max-min)/max (0 where
    max = 0), hue from the dominant-channel sector. Gray pixels get hue 0.
    """
    rgb = pixels[..., :3].astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    cmax = rgb.max(axis=-1)
    cmin = rgb.min(axis=-1)
    delta = cmax - cmin

    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(cmax > 0.0, delta / cmax, 0.0)
        safe = np.where(delta > 0.0, delta, 1.0)
        h_r = np.mod((g - b) / safe, 6.0)
        h_g = (b - r) / safe + 2.0
        h_b = (r - g) / safe + 4.0
    h = np.where(
        delta == 0.0,
        0.0,
        np.where(cmax == r, h_r, np.where(cmax == g, h_g, h_b)),
    )
    return h * 60.0, s, cmax


@dataclass(eq=False)
class WaterMask:
    """Binary water raster (True = water) in a specific pixel frame."""

    bits: np.ndarray  # (height, width) bool
    georef: GeoReference | None = None

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {bits.shape}")
        self.bits = bits.astype(bool)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def same_bits(self, other: "WaterMask") -> bool:
        return bool(np.array_equal(self.bits, other.bits))


def disk_structure(radius: int) -> np.ndarray:
    """Euclidean disk of the given radius; radius 1 is the 3x3 cross."""
    if radius == 0:
        return np.ones((1, 1), dtype=bool)
    span = np.arange(-radius, radius + 1)
    yy, xx = np.meshgrid(span, span, indexing="ij")
    return (yy * yy + xx * xx) <= radius * radius


EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def extract_water(r: Raster, cfg: WaterColorConfig) -> WaterMask:
    """Classify, clean, and de-speckle water pixels of one raster.

    A pixel is raw water iff any configured HSV range contains it AND its
    alpha is nonzero. The raw mask then gets a morphological opening followed
    by a closing (disk structuring element), and finally every 8-connected
    component smaller than min_component_area is dropped.
    """
    h, s, v = rgb_to_hsv_arrays(r.pixels)
    raw = np.zeros(h.shape, dtype=bool)
    for rng in cfg.ranges:
        raw |= rng.contains(h, s, v)
    raw &= r.pixels[..., 3] > 0

    if cfg.morphology_radius > 0 and raw.any():
        disk = disk_structure(cfg.morphology_radius)
        raw = ndimage.binary_opening(raw, structure=disk, border_value=0)
        raw = ndimage.binary_closing(raw, structure=disk, border_value=0)

    if raw.any():
        labels, n = ndimage.label(raw, structure=EIGHT_CONNECTED)
        if n:
            sizes = np.bincount(labels.ravel())
            keep = sizes >= cfg.min_component_area
            keep[0] = False
            raw = keep[labels]

    return WaterMask(bits=raw, georef=r.georef)


def warp_mask(
    m: WaterMask,
    backward: Transform2D,
    out_width: int,
    out_height: int,
    out_georef: GeoReference | None = None,
) -> WaterMask:
    """Nearest-neighbor inverse-mapping warp of a binary mask.

    Each output pixel center is pulled back through `backward` and reads the
    source pixel containing the landing point (floor on both axes); anything
    landing outside the source, or at infinity, is 0. Nearest-neighbor keeps
    the mask strictly binary: no interpolation grays.
    """
    if out_width < 1 or out_height < 1:
        raise EmptyOutput(f"output extent {out_width}x{out_height} has no pixels")
    cols, rows = np.meshgrid(np.arange(out_width), np.arange(out_height))
    centers = np.column_stack((cols.ravel() + 0.5, rows.ravel() + 0.5))
    mapped, valid = backward.map_points(centers)
    src_col = np.floor(mapped[:, 0]).astype(np.int64)
    src_row = np.floor(mapped[:, 1]).astype(np.int64)
    inside = (
        valid
        & (src_col >= 0)
        & (src_col < m.width)
        & (src_row >= 0)
        & (src_row < m.height)
    )
    out = np.zeros(out_height * out_width, dtype=bool)
    out[inside] = m.bits[src_row[inside], src_col[inside]]
    return WaterMask(bits=out.reshape(out_height, out_width), georef=out_georef)
