"""Synthetic two-era map fixtures with known ground truth.

These builders draw waterway scenes twice: once as a "historical" map
(parchment background, blue-gray channels, ink grid) in its own pixel frame,
and once as a "modern basemap" (pale land, saturated blue water) in a frame
related to the first by a known homography. Because the geometry, the
transform, and the palettes are all chosen here, every derived quantity --
which pixels should come out LOST, PERSISTENT, or NEW -- is computable
exactly, which is what the end-to-end tests need.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .project import ImageRef, Project, project_save
from .raster import GeoReference, Raster, save_png
from .transforms import ControlPointPair, ProjectiveTransform, invert_projective

HIST_BG = (235, 225, 200, 255)       # aged paper
HIST_INK = (60, 50, 40, 255)         # grid/street lines
HIST_WATER = (90, 110, 160, 255)     # blue-gray wash, h ~ 223 deg, s ~ 0.44
MODERN_LAND = (240, 240, 230, 255)
MODERN_ROAD = (200, 200, 200, 255)   # gray: zero saturation, never water
MODERN_WATER = (60, 120, 230, 255)   # basemap blue, h ~ 219 deg

# 5 m pixels anchored in the Manila bay area (lat ~ 14.6 N).
MANILA_GEOREF = GeoReference(
    a=5.0, b=0.0, c=13_480_000.0, d=0.0, e=-5.0, f=1_645_000.0
)


def stroke_mask(width: int, height: int, polyline, stroke_width: float) -> np.ndarray:
    """Pixels whose centers lie within stroke_width/2 of the polyline."""
    mask = np.zeros((height, width), dtype=bool)
    half = stroke_width / 2.0
    pts = [(float(x), float(y)) for x, y in polyline]
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        lo_c = max(int(np.floor(min(x0, x1) - half)) - 1, 0)
        hi_c = min(int(np.ceil(max(x0, x1) + half)) + 1, width - 1)
        lo_r = max(int(np.floor(min(y0, y1) - half)) - 1, 0)
        hi_r = min(int(np.ceil(max(y0, y1) + half)) + 1, height - 1)
        if lo_c > hi_c or lo_r > hi_r:
            continue
        cols, rows = np.meshgrid(
            np.arange(lo_c, hi_c + 1) + 0.5, np.arange(lo_r, hi_r + 1) + 0.5
        )
        dx, dy = x1 - x0, y1 - y0
        len2 = dx * dx + dy * dy
        if len2 == 0.0:
            t = np.zeros_like(cols)
        else:
            t = np.clip(((cols - x0) * dx + (rows - y0) * dy) / len2, 0.0, 1.0)
        near = (cols - (x0 + t * dx)) ** 2 + (rows - (y0 + t * dy)) ** 2 <= half * half
        mask[lo_r : hi_r + 1, lo_c : hi_c + 1] |= near
    return mask


def densify(polyline, step: float = 4.0):
    """Insert intermediate vertices so curved warps of segments stay faithful."""
    pts = [(float(x), float(y)) for x, y in polyline]
    out = [pts[0]]
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        n = max(int(np.hypot(x1 - x0, y1 - y0) / step), 1)
        for i in range(1, n + 1):
            f = i / n
            out.append((x0 + f * (x1 - x0), y0 + f * (y1 - y0)))
    return out


def map_polyline(t, polyline):
    return [t.apply(p) for p in densify(polyline)]


def _about_center(cx: float, cy: float, angle: float, scale: float,
                  tx: float, ty: float, perspective=(0.0, 0.0)) -> ProjectiveTransform:
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array(
        [[scale * c, -scale * s, 0.0], [scale * s, scale * c, 0.0], [0.0, 0.0, 1.0]]
    )
    pre = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
    post = np.array([[1.0, 0.0, cx + tx], [0.0, 1.0, cy + ty], [0.0, 0.0, 1.0]])
    persp = np.eye(3)
    persp[2, 0], persp[2, 1] = perspective
    return ProjectiveTransform.from_matrix(post @ rot @ persp @ pre)


def _gcps_through(h_true: ProjectiveTransform, srcs) -> list:
    return [
        ControlPointPair(id=f"g{i + 1}", src=(float(x), float(y)),
                         dst=h_true.apply((float(x), float(y))))
        for i, (x, y) in enumerate(srcs)
    ]


def _ink_grid(pixels: np.ndarray, spacing: int) -> None:
    h, w = pixels.shape[:2]
    for x in range(spacing, w, spacing):
        pixels[:, x : x + 2] = HIST_INK
    for y in range(spacing, h, spacing):
        pixels[y : y + 2, :] = HIST_INK


@dataclass
class Fixture:
    """A generated two-era scene: images on disk plus exact ground truth."""

    name: str
    size: tuple  # (width, height), shared by both frames
    h_true: ProjectiveTransform  # historical -> modern pixels
    gcps: list
    historical_path: Path
    modern_path: Path
    ground_truth: dict  # name -> bool mask in the modern frame
    modern_georef: GeoReference


def _render_and_write(
    out_dir: Path,
    name: str,
    size: tuple,
    h_true: ProjectiveTransform,
    hist_channels,  # list of (modern-frame polyline, stroke width)
    modern_channels,
    gcp_srcs,
    ground_truth: dict,
) -> Fixture:
    w, h = size
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    backward = invert_projective(h_true)  # modern -> historical

    hist = np.empty((h, w, 4), dtype=np.uint8)
    hist[:, :] = HIST_BG
    _ink_grid(hist, spacing=128)
    for polyline, width in hist_channels:
        in_hist = map_polyline(backward, polyline)
        hist[stroke_mask(w, h, in_hist, width)] = HIST_WATER

    modern = np.empty((h, w, 4), dtype=np.uint8)
    modern[:, :] = MODERN_LAND
    for x in range(96, w, 192):
        modern[:, x : x + 3] = MODERN_ROAD
    for polyline, width in modern_channels:
        modern[stroke_mask(w, h, polyline, width)] = MODERN_WATER

    historical_path = out_dir / "historical.png"
    modern_path = out_dir / "modern.png"
    save_png(Raster(pixels=hist), historical_path)
    save_png(Raster(pixels=modern, georef=MANILA_GEOREF), modern_path)

    return Fixture(
        name=name,
        size=size,
        h_true=h_true,
        gcps=_gcps_through(h_true, gcp_srcs),
        historical_path=historical_path,
        modern_path=modern_path,
        ground_truth=ground_truth,
        modern_georef=MANILA_GEOREF,
    )


ESTUARY_CHANNEL_A = [
    (180.0, 0.0), (240.0, 160.0), (210.0, 340.0), (300.0, 520.0),
    (270.0, 700.0), (340.0, 880.0), (320.0, 1023.0),
]
ESTUARY_CHANNEL_B = [
    (760.0, 0.0), (700.0, 200.0), (740.0, 420.0), (680.0, 640.0),
    (720.0, 860.0), (700.0, 1023.0),
]


def build_estuary_fixture(out_dir: str | Path) -> Fixture:
    """Two channels in the historical era; channel A is gone in the modern one.

    Ground-truth masks use a slimmer stroke (24 px) than the drawings that
    must cover them (30 px), so classification percentages are insensitive to
    the ~1 px boundary wobble that warping and morphology introduce:
    every ground-truth "erased" pixel sits well inside historical water, and
    every ground-truth "surviving" pixel sits well inside modern water.
    """
    size = (1024, 1024)
    h_true = _about_center(
        512.0, 512.0, angle=0.04, scale=1.0, tx=12.0, ty=-8.0,
        perspective=(2.0e-6, -1.5e-6),
    )
    gt = {
        "erased": stroke_mask(*size, ESTUARY_CHANNEL_A, 24.0),
        "surviving": stroke_mask(*size, ESTUARY_CHANNEL_B, 24.0),
    }
    return _render_and_write(
        out_dir,
        name="vanished-estuary",
        size=size,
        h_true=h_true,
        hist_channels=[(ESTUARY_CHANNEL_A, 30.0), (ESTUARY_CHANNEL_B, 24.0)],
        modern_channels=[(ESTUARY_CHANNEL_B, 30.0)],
        gcp_srcs=[
            (100, 100), (900, 120), (120, 880), (880, 900),
            (500, 150), (150, 500), (860, 520), (520, 860),
        ],
        ground_truth=gt,
    )


# Shared upstream/downstream reaches are deliberately short: along a reach
# both eras draw the same stroke, so every pixel of warp jitter there leaks
# straight into the LOST/NEW counts being compared against ground truth.
MEANDER_SHARED_UP = [(0.0, 395.0), (100.0, 400.0)]
MEANDER_OLD_MIDDLE = [
    (100.0, 400.0), (150.0, 250.0), (300.0, 150.0), (500.0, 150.0),
    (650.0, 250.0), (700.0, 400.0),
]
MEANDER_NEW_MIDDLE = [(100.0, 400.0), (700.0, 400.0)]
MEANDER_SHARED_DOWN = [(700.0, 400.0), (799.0, 405.0)]

MEANDER_WIDTH = 24.0


def build_meander_fixture(out_dir: str | Path) -> Fixture:
    """A river that abandoned its meander loop for a straight cut.

    The old and new paths share their upstream and downstream reaches; the
    abandoned loop should classify LOST and the straight cut NEW. Ground
    truth is computed from the same stroke rasterizer in the modern frame.
    """
    size = (800, 800)
    h_true = _about_center(400.0, 400.0, angle=0.03, scale=1.0, tx=6.0, ty=4.0)
    w, h = size
    old_path = MEANDER_SHARED_UP + MEANDER_OLD_MIDDLE[1:] + MEANDER_SHARED_DOWN[1:]
    new_path = MEANDER_SHARED_UP + MEANDER_NEW_MIDDLE[1:] + MEANDER_SHARED_DOWN[1:]
    old_mask = stroke_mask(w, h, old_path, MEANDER_WIDTH)
    new_mask = stroke_mask(w, h, new_path, MEANDER_WIDTH)
    gt = {
        "lost": old_mask & ~new_mask,
        "new": new_mask & ~old_mask,
        "persistent": old_mask & new_mask,
    }
    return _render_and_write(
        out_dir,
        name="meander-cutoff",
        size=size,
        h_true=h_true,
        hist_channels=[(old_path, MEANDER_WIDTH)],
        modern_channels=[(new_path, MEANDER_WIDTH)],
        gcp_srcs=[
            (80, 80), (720, 90), (90, 710), (700, 720),
            (400, 120), (120, 400), (680, 400), (400, 680),
        ],
        ground_truth=gt,
    )


def fixture_project(fixture: Fixture) -> Project:
    """Wrap a generated fixture in a project saved next to its images."""
    project_dir = fixture.historical_path.parent
    project = Project(name=fixture.name)
    project.images = {
        "historical": ImageRef(
            path=fixture.historical_path.name, style="historical-wash"
        ),
        "modern": ImageRef(
            path=fixture.modern_path.name,
            style="modern-basemap",
            georef=fixture.modern_georef,
        ),
    }
    project.gcps = list(fixture.gcps)
    project_save(project, project_dir / "project.json")
    return project
