"""RGBA rasters: PNG/world-file IO, inverse-mapping warp, alpha compositing.

Conventions that matter here and bite when mixed up:

* pixel (col, row) indexes from the top-left; its sample position is the
  pixel CENTER at continuous coordinates (col + 0.5, row + 0.5);
* GeoReference affines are anchored at the top-left CORNER of the raster
  over those continuous coordinates;
* world files, per the ESRI 6-line format, are anchored at the CENTER of
  the top-left pixel, so reading/writing shifts by half a pixel.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    AtInfinity,
    DimensionMismatch,
    EmptyOutput,
    IoError,
    MalformedWorldFile,
)
from .mercator import mercator_to_lonlat
from .transforms import Transform2D

RGBA = tuple[int, int, int, int]

TRANSPARENT: RGBA = (0, 0, 0, 0)


@dataclass(frozen=True)
class GeoReference:
    """Affine pixel -> Web Mercator meters: X = a*col + b*row + c, Y = d*col + e*row + f.

    col/row are continuous pixel coordinates with (0, 0) at the top-left
    corner of the raster. CRS is fixed to spherical Web Mercator.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def __post_init__(self):
        if abs(self.a * self.e - self.b * self.d) <= 0.0:
            raise ValueError("GeoReference linear part is singular")

    def pixel_to_mercator(self, col: float, row: float) -> tuple[float, float]:
        return (
            self.a * col + self.b * row + self.c,
            self.d * col + self.e * row + self.f,
        )

    def mercator_to_pixel(self, x: float, y: float) -> tuple[float, float]:
        det = self.a * self.e - self.b * self.d
        u, v = x - self.c, y - self.f
        return ((self.e * u - self.b * v) / det, (self.a * v - self.d * u) / det)

    def pixel_to_lonlat(self, col: float, row: float) -> tuple[float, float]:
        return mercator_to_lonlat(*self.pixel_to_mercator(col, row))

    def pixel_area_m2(self) -> float:
        """Mercator-plane area of one pixel footprint (not ground-true area)."""
        return abs(self.a * self.e - self.b * self.d)

    def offset(self, col0: float, row0: float) -> "GeoReference":
        """Same mapping re-anchored so that new pixel (0,0) is old (col0,row0)."""
        return GeoReference(
            a=self.a,
            b=self.b,
            c=self.a * col0 + self.b * row0 + self.c,
            d=self.d,
            e=self.e,
            f=self.d * col0 + self.e * row0 + self.f,
        )

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "d": self.d,
            "e": self.e,
            "f": self.f,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeoReference":
        return cls(**{k: float(d[k]) for k in "abcdef"})


@dataclass(eq=False)
class Raster:
    """Row-major RGBA image, 8 bits per channel, optional georeference."""

    pixels: np.ndarray  # (height, width, 4) uint8
    georef: GeoReference | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 4:
            raise ValueError(f"pixels must be (h, w, 4), got {px.shape}")
        if px.dtype != np.uint8:
            px = px.astype(np.uint8)
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("raster must contain at least one pixel")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def blank(
        cls,
        width: int,
        height: int,
        fill: RGBA = TRANSPARENT,
        georef: GeoReference | None = None,
    ) -> "Raster":
        px = np.empty((height, width, 4), dtype=np.uint8)
        px[:, :] = fill
        return cls(pixels=px, georef=georef)

    def same_pixels(self, other: "Raster") -> bool:
        return bool(np.array_equal(self.pixels, other.pixels))


@dataclass(frozen=True)
class WarpSpec:
    """Everything warp() needs: the modern->historical (backward) transform,
    the output canvas size, and what to paint where the source has no data."""

    backward: Transform2D
    out_width: int
    out_height: int
    out_georef: GeoReference | None = None
    fill: RGBA = TRANSPARENT


def warp(src: Raster, spec: WarpSpec) -> Raster:
    """Inverse-mapping warp with bilinear resampling.

    Every output pixel center is pulled back through spec.backward; centers
    landing inside the source sample domain ([0.5, w-0.5] x [0.5, h-0.5])
    take the bilinear blend of the four surrounding pixels (all channels,
    alpha included); everything else, including points the backward map sends
    to infinity, takes spec.fill. Purely a function of its inputs, so repeat
    calls are byte-identical.
    """
    if spec.out_width < 1 or spec.out_height < 1:
        raise EmptyOutput(
            f"output extent {spec.out_width}x{spec.out_height} has no pixels"
        )
    out_w, out_h = spec.out_width, spec.out_height
    cols, rows = np.meshgrid(np.arange(out_w), np.arange(out_h))
    centers = np.column_stack(
        (cols.ravel() + 0.5, rows.ravel() + 0.5)
    )
    mapped, valid = spec.backward.map_points(centers)
    x, y = mapped[:, 0], mapped[:, 1]

    inside = (
        valid
        & (x >= 0.5)
        & (x <= src.width - 0.5)
        & (y >= 0.5)
        & (y <= src.height - 0.5)
    )

    # Shift so integer coordinates sit on pixel centers, then split into
    # integer cell and fractional weight. Exact integer translations make the
    # fractions exactly zero and the blend collapses to a pure copy.
    fx = np.where(inside, x, 0.5) - 0.5
    fy = np.where(inside, y, 0.5) - 0.5
    x0 = np.floor(fx)
    y0 = np.floor(fy)
    tx = (fx - x0)[:, None]
    ty = (fy - y0)[:, None]
    x0 = np.clip(x0.astype(np.int64), 0, src.width - 1)
    y0 = np.clip(y0.astype(np.int64), 0, src.height - 1)
    x1 = np.minimum(x0 + 1, src.width - 1)
    y1 = np.minimum(y0 + 1, src.height - 1)

    px = src.pixels.astype(np.float64)
    p00 = px[y0, x0]
    p10 = px[y0, x1]
    p01 = px[y1, x0]
    p11 = px[y1, x1]
    blend = (1.0 - ty) * ((1.0 - tx) * p00 + tx * p10) + ty * (
        (1.0 - tx) * p01 + tx * p11
    )
    values = np.floor(blend + 0.5).astype(np.uint8)

    values[~inside] = np.array(spec.fill, dtype=np.uint8)
    return Raster(pixels=values.reshape(out_h, out_w, 4), georef=spec.out_georef)


@dataclass(frozen=True)
class ExtentBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min


def compute_output_extent(
    forward: Transform2D,
    src_w: int,
    src_h: int,
    samples_per_edge: int = 16,
) -> ExtentBox:
    """Bounding box (dst pixels) of the forward-mapped source boundary, +1 px.

    Samples samples_per_edge points along each edge of the [0,w] x [0,h]
    frame (corners included); boundary sampling matters for polynomial2,
    whose curved edges can bulge past the corner images.
    """
    if samples_per_edge < 2:
        raise ValueError("samples_per_edge must be >= 2")
    ts_w = np.linspace(0.0, float(src_w), samples_per_edge)
    ts_h = np.linspace(0.0, float(src_h), samples_per_edge)
    boundary = np.concatenate(
        [
            np.column_stack((ts_w, np.zeros_like(ts_w))),
            np.column_stack((ts_w, np.full_like(ts_w, float(src_h)))),
            np.column_stack((np.zeros_like(ts_h), ts_h)),
            np.column_stack((np.full_like(ts_h, float(src_w)), ts_h)),
        ]
    )
    mapped, valid = forward.map_points(boundary)
    if not valid.all():
        bad = boundary[~valid][0]
        raise AtInfinity(f"boundary sample ({bad[0]}, {bad[1]}) maps to infinity")
    return ExtentBox(
        x_min=float(mapped[:, 0].min()) - 1.0,
        y_min=float(mapped[:, 1].min()) - 1.0,
        x_max=float(mapped[:, 0].max()) + 1.0,
        y_max=float(mapped[:, 1].max()) + 1.0,
    )


def composite(base: Raster, top: Raster, alpha: float) -> Raster:
    """Blend top over base: out = (1-ae)*base + ae*top, ae = alpha * top_alpha/255.

    Channels blend independently and round half-up to 8 bits, so alpha=0
    returns base bytes and alpha=1 over an opaque top returns top bytes.
    """
    if (base.width, base.height) != (top.width, top.height):
        raise DimensionMismatch(
            f"base {base.width}x{base.height} vs top {top.width}x{top.height}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    b = base.pixels.astype(np.float64)
    t = top.pixels.astype(np.float64)
    ae = alpha * (t[:, :, 3:4] / 255.0)
    out = np.floor((1.0 - ae) * b + ae * t + 0.5).astype(np.uint8)
    return Raster(pixels=out, georef=base.georef or top.georef)


# ---------------------------------------------------------------------------
# PNG + world file IO
# ---------------------------------------------------------------------------


def world_file_path(image_path: str | Path) -> Path:
    """Sidecar path for an image's world file (.pgw next to .png)."""
    p = Path(image_path)
    if p.suffix.lower() == ".png":
        return p.with_suffix(".pgw")
    return p.with_name(p.name + ".wld")


def read_world_file(path: str | Path) -> GeoReference:
    """Parse the 6-line world file (a, d, b, e, c', f').

    The file's translation terms locate the CENTER of the top-left pixel;
    the returned GeoReference is corner-anchored, hence the half-pixel shift.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    tokens = text.split()
    if len(tokens) != 6:
        raise MalformedWorldFile(
            f"{path}: expected 6 numbers, found {len(tokens)} tokens"
        )
    try:
        a, d, b, e, cc, fc = (float(t) for t in tokens)
    except ValueError as exc:
        raise MalformedWorldFile(f"{path}: {exc}") from exc
    return GeoReference(
        a=a,
        b=b,
        c=cc - 0.5 * a - 0.5 * b,
        d=d,
        e=e,
        f=fc - 0.5 * d - 0.5 * e,
    )


def write_world_file(georef: GeoReference, path: str | Path) -> None:
    cx, cy = georef.pixel_to_mercator(0.5, 0.5)
    lines = [georef.a, georef.d, georef.b, georef.e, cx, cy]
    try:
        Path(path).write_text("".join(f"{v!r}\n" for v in lines))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_png(path: str | Path) -> Raster:
    """Load an RGBA raster; a sidecar world file, if present, is attached."""
    try:
        with Image.open(path) as im:
            pixels = np.asarray(im.convert("RGBA"), dtype=np.uint8)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    georef = None
    sidecar = world_file_path(path)
    if sidecar.exists():
        georef = read_world_file(sidecar)
    return Raster(pixels=pixels.copy(), georef=georef)


def save_png(raster: Raster, path: str | Path) -> None:
    """Write RGBA PNG; if georeferenced, emit the world file alongside."""
    try:
        Image.fromarray(raster.pixels, mode="RGBA").save(Path(path), format="PNG")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if raster.georef is not None:
        write_world_file(raster.georef, world_file_path(path))


def encode_png(raster: Raster) -> bytes:
    """PNG bytes without touching disk (the georef travels separately)."""
    buf = io.BytesIO()
    Image.fromarray(raster.pixels, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()
