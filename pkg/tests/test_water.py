"""Water extraction and mask warping against brute-force oracles.

The oracles here are deliberately primitive and independent of the module:
colorsys per pixel for HSV, neighbor-shift morphology, BFS flood fill for
components, and a scalar floor-lookup loop for the nearest-neighbor warp.
"""

import colorsys
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lostwater.errors import EmptyOutput
from lostwater.raster import Raster
from lostwater.transforms import ProjectiveTransform
from lostwater.water import (
    HISTORICAL_BLUE_GRAY,
    MODERN_BASEMAP_BLUE,
    STYLE_PRESETS,
    HsvRange,
    WaterColorConfig,
    WaterMask,
    disk_structure,
    extract_water,
    rgb_to_hsv_arrays,
    warp_mask,
)

# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def oracle_hsv(r8, g8, b8):
    h, s, v = colorsys.rgb_to_hsv(r8 / 255.0, g8 / 255.0, b8 / 255.0)
    return h * 360.0, s, v


def oracle_in_range(rng: HsvRange, h, s, v) -> bool:
    if rng.h_lo <= rng.h_hi:
        hue_ok = rng.h_lo <= h <= rng.h_hi
    else:
        hue_ok = h >= rng.h_lo or h <= rng.h_hi
    return hue_ok and rng.s_lo <= s <= rng.s_hi and rng.v_lo <= v <= rng.v_hi


def oracle_color_mask(pixels: np.ndarray, cfg: WaterColorConfig) -> np.ndarray:
    h, w = pixels.shape[:2]
    out = np.zeros((h, w), dtype=bool)
    for r in range(h):
        for c in range(w):
            rr, gg, bb, aa = (int(v) for v in pixels[r, c])
            if aa == 0:
                continue
            hh, ss, vv = oracle_hsv(rr, gg, bb)
            out[r, c] = any(oracle_in_range(rg, hh, ss, vv) for rg in cfg.ranges)
    return out


def _shifted(m: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """m translated by (dr, dc) with zeros shifted in."""
    out = np.zeros_like(m)
    h, w = m.shape
    rs = slice(max(dr, 0), min(h + dr, h))
    cs = slice(max(dc, 0), min(w + dc, w))
    out[rs, cs] = m[
        slice(max(-dr, 0), min(h - dr, h)), slice(max(-dc, 0), min(w - dc, w))
    ]
    return out


CROSS_OFFSETS = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]


def oracle_erode_cross(m):
    out = np.ones_like(m)
    for dr, dc in CROSS_OFFSETS:
        out &= _shifted(m, dr, dc)
    return out


def oracle_dilate_cross(m):
    out = np.zeros_like(m)
    for dr, dc in CROSS_OFFSETS:
        out |= _shifted(m, dr, dc)
    return out


def oracle_open_close_cross(m):
    opened = oracle_dilate_cross(oracle_erode_cross(m))
    return oracle_erode_cross(oracle_dilate_cross(opened))


def oracle_filter_components(m: np.ndarray, min_area: int) -> np.ndarray:
    """BFS flood fill over 8-neighborhoods, dropping small components."""
    h, w = m.shape
    seen = np.zeros_like(m)
    out = np.zeros_like(m)
    for r0 in range(h):
        for c0 in range(w):
            if not m[r0, c0] or seen[r0, c0]:
                continue
            stack = [(r0, c0)]
            seen[r0, c0] = True
            pixels = []
            while stack:
                r, c = stack.pop()
                pixels.append((r, c))
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        rr, cc = r + dr, c + dc
                        if 0 <= rr < h and 0 <= cc < w and m[rr, cc] and not seen[rr, cc]:
                            seen[rr, cc] = True
                            stack.append((rr, cc))
            if len(pixels) >= min_area:
                for r, c in pixels:
                    out[r, c] = True
    return out


def oracle_extract(pixels, cfg: WaterColorConfig) -> np.ndarray:
    assert cfg.morphology_radius in (0, 1), "oracle supports radius 0/1 only"
    m = oracle_color_mask(pixels, cfg)
    if cfg.morphology_radius == 1:
        m = oracle_open_close_cross(m)
    return oracle_filter_components(m, cfg.min_component_area)


def oracle_warp_mask(bits: np.ndarray, h_matrix, out_w: int, out_h: int) -> np.ndarray:
    """Scalar nearest-neighbor warp: same arithmetic, one pixel at a time."""
    src_h, src_w = bits.shape
    out = np.zeros((out_h, out_w), dtype=bool)
    for row in range(out_h):
        for col in range(out_w):
            x, y = col + 0.5, row + 0.5
            w = h_matrix[2][0] * x + h_matrix[2][1] * y + 1.0
            if abs(w) <= 1e-12:
                continue
            sx = (h_matrix[0][0] * x + h_matrix[0][1] * y + h_matrix[0][2]) / w
            sy = (h_matrix[1][0] * x + h_matrix[1][1] * y + h_matrix[1][2]) / w
            sc, sr = math.floor(sx), math.floor(sy)
            if 0 <= sc < src_w and 0 <= sr < src_h:
                out[row, col] = bits[sr, sc]
    return out


# ---------------------------------------------------------------------------
# HSV conversion
# ---------------------------------------------------------------------------


def test_hsv_matches_colorsys_on_all_channel_orderings():
    colors = [
        (60, 120, 230), (230, 120, 60), (120, 230, 60), (200, 200, 200),
        (0, 0, 0), (255, 255, 255), (90, 110, 160), (10, 0, 250),
    ]
    px = np.array([[list(c) + [255] for c in colors]], dtype=np.uint8)
    h, s, v = rgb_to_hsv_arrays(px)
    for i, c in enumerate(colors):
        oh, os, ov = oracle_hsv(*c)
        assert h[0, i] == pytest.approx(oh, abs=1e-9)
        assert s[0, i] == pytest.approx(os, abs=1e-9)
        assert v[0, i] == pytest.approx(ov, abs=1e-9)


@given(
    rgb=st.tuples(
        st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)
    )
)
def test_property_hsv_matches_colorsys(rgb):
    px = np.array([[list(rgb) + [255]]], dtype=np.uint8)
    h, s, v = rgb_to_hsv_arrays(px)
    oh, os, ov = oracle_hsv(*rgb)
    assert h[0, 0] == pytest.approx(oh, abs=1e-9)
    assert s[0, 0] == pytest.approx(os, abs=1e-9)
    assert v[0, 0] == pytest.approx(ov, abs=1e-9)


# ---------------------------------------------------------------------------
# HsvRange / config validation
# ---------------------------------------------------------------------------


def test_range_wraps_through_360():
    rng = HsvRange(h_lo=350.0, h_hi=10.0)
    h = np.array([355.0, 5.0, 180.0])
    ok = rng.contains(h, np.full(3, 0.5), np.full(3, 0.5))
    assert ok.tolist() == [True, True, False]


def test_range_validation():
    with pytest.raises(ValueError):
        HsvRange(h_lo=-5.0, h_hi=10.0)
    with pytest.raises(ValueError):
        HsvRange(h_lo=0.0, h_hi=10.0, s_lo=0.9, s_hi=0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        WaterColorConfig(ranges=())
    with pytest.raises(ValueError):
        WaterColorConfig(ranges=(HsvRange(0, 10),), min_component_area=0)
    with pytest.raises(ValueError):
        WaterColorConfig(ranges=(HsvRange(0, 10),), morphology_radius=-1)


def test_config_round_trips_through_dict():
    assert WaterColorConfig.from_dict(MODERN_BASEMAP_BLUE.to_dict()) == MODERN_BASEMAP_BLUE
    assert WaterColorConfig.from_dict(HISTORICAL_BLUE_GRAY.to_dict()) == HISTORICAL_BLUE_GRAY


def test_presets_accept_their_palettes():
    # Fixture palette colors sit inside the style presets that target them.
    h, s, v = oracle_hsv(60, 120, 230)
    assert oracle_in_range(MODERN_BASEMAP_BLUE.ranges[0], h, s, v)
    h, s, v = oracle_hsv(90, 110, 160)
    assert oracle_in_range(HISTORICAL_BLUE_GRAY.ranges[0], h, s, v)
    # And reject paper/ink/land colors.
    for color in [(235, 225, 200), (60, 50, 40), (240, 240, 230), (255, 255, 255)]:
        h, s, v = oracle_hsv(*color)
        assert not oracle_in_range(MODERN_BASEMAP_BLUE.ranges[0], h, s, v)
        assert not oracle_in_range(HISTORICAL_BLUE_GRAY.ranges[0], h, s, v)
    assert set(STYLE_PRESETS) == {"modern-basemap", "historical-wash"}


def test_disk_structure_radius_one_is_cross():
    assert disk_structure(1).tolist() == [
        [False, True, False],
        [True, True, True],
        [False, True, False],
    ]
    assert disk_structure(0).tolist() == [[True]]


# ---------------------------------------------------------------------------
# extract_water
# ---------------------------------------------------------------------------

WIDE_BLUE = WaterColorConfig(
    ranges=(HsvRange(h_lo=180.0, h_hi=260.0, s_lo=0.2, v_lo=0.2),),
    min_component_area=1,
    morphology_radius=0,
)


def hsv_to_rgba(h_deg, s, v):
    r, g, b = colorsys.hsv_to_rgb(h_deg / 360.0, s, v)
    return (round(r * 255), round(g * 255), round(b * 255), 255)


def test_uniform_water_raster_all_ones():
    color = hsv_to_rgba(210.0, 0.6, 0.8)
    r = Raster.blank(12, 9, fill=color)
    mask = extract_water(r, WIDE_BLUE)
    assert mask.bits.all()
    assert mask.count == 12 * 9


def test_transparent_raster_all_zeros():
    color = hsv_to_rgba(210.0, 0.6, 0.8)
    r = Raster.blank(12, 9, fill=(color[0], color[1], color[2], 0))
    assert extract_water(r, WIDE_BLUE).count == 0


def test_square_survives_isolated_pixel_removed():
    # 200x200 white canvas, one 20x20 blue square, one lone blue pixel,
    # min_component_area 50. The lone pixel must go. The radius-1 cross
    # opening also shaves the square's 4 corner pixels, which the full
    # brute-force oracle chain reproduces exactly.
    blue = hsv_to_rgba(210.0, 0.7, 0.8)
    r = Raster.blank(200, 200, fill=(255, 255, 255, 255))
    r.pixels[90:110, 90:110] = blue
    r.pixels[20, 20] = blue
    cfg = WaterColorConfig(
        ranges=(HsvRange(h_lo=180.0, h_hi=260.0, s_lo=0.2, v_lo=0.2),),
        min_component_area=50,
        morphology_radius=1,
    )
    mask = extract_water(r, cfg)
    expected = oracle_extract(r.pixels, cfg)
    assert np.array_equal(mask.bits, expected)
    assert not mask.bits[20, 20]
    square = np.zeros((200, 200), dtype=bool)
    square[90:110, 90:110] = True
    assert not (mask.bits & ~square).any()
    assert (mask.bits & square).sum() == 396  # square minus its 4 corners
    corners = [(90, 90), (90, 109), (109, 90), (109, 109)]
    assert not any(mask.bits[r_, c_] for r_, c_ in corners)


def test_extract_keeps_georef():
    from lostwater.raster import GeoReference

    g = GeoReference(a=1.0, b=0.0, c=0.0, d=0.0, e=-1.0, f=0.0)
    r = Raster.blank(4, 4, fill=(255, 255, 255, 255), georef=g)
    assert extract_water(r, WIDE_BLUE).georef == g


@st.composite
def small_palette_rasters(draw, max_side=24):
    w = draw(st.integers(4, max_side))
    h = draw(st.integers(4, max_side))
    palette = np.array(
        [
            hsv_to_rgba(210.0, 0.7, 0.8),     # solid water blue
            hsv_to_rgba(200.0, 0.1, 0.9),     # washed-out blue (below s floor)
            (255, 255, 255, 255),             # paper
            (60, 50, 40, 255),                # ink
            (120, 160, 255, 0),               # transparent blue
        ],
        dtype=np.uint8,
    )
    idx = draw(
        st.lists(
            st.integers(0, len(palette) - 1), min_size=w * h, max_size=w * h
        )
    )
    return np.array(palette[np.array(idx).reshape(h, w)], dtype=np.uint8)


@given(pixels=small_palette_rasters(), radius=st.sampled_from([0, 1]),
       min_area=st.sampled_from([1, 3, 8]))
@settings(max_examples=40)
def test_property_extract_matches_oracle(pixels, radius, min_area):
    cfg = WaterColorConfig(
        ranges=(HsvRange(h_lo=180.0, h_hi=260.0, s_lo=0.2, v_lo=0.2),),
        min_component_area=min_area,
        morphology_radius=radius,
    )
    mask = extract_water(Raster(pixels=pixels.copy()), cfg)
    assert np.array_equal(mask.bits, oracle_extract(pixels, cfg))


@given(pixels=small_palette_rasters(max_side=16))
@settings(max_examples=20)
def test_property_morphology_idempotent(pixels):
    from scipy import ndimage

    raw = oracle_color_mask(pixels, WIDE_BLUE)
    disk = disk_structure(1)
    once = ndimage.binary_opening(raw, structure=disk, border_value=0)
    twice = ndimage.binary_opening(once, structure=disk, border_value=0)
    assert np.array_equal(once, twice)
    c_once = ndimage.binary_closing(raw, structure=disk, border_value=0)
    c_twice = ndimage.binary_closing(c_once, structure=disk, border_value=0)
    assert np.array_equal(c_once, c_twice)


@given(pixels=small_palette_rasters(max_side=16),
       areas=st.tuples(st.integers(1, 6), st.integers(0, 6)))
@settings(max_examples=25)
def test_property_min_area_monotone(pixels, areas):
    lo, extra = areas
    cfg_lo = WaterColorConfig(ranges=WIDE_BLUE.ranges, min_component_area=lo,
                              morphology_radius=0)
    cfg_hi = WaterColorConfig(ranges=WIDE_BLUE.ranges,
                              min_component_area=lo + extra,
                              morphology_radius=0)
    r = Raster(pixels=pixels.copy())
    assert extract_water(r, cfg_hi).count <= extract_water(r, cfg_lo).count


# ---------------------------------------------------------------------------
# warp_mask
# ---------------------------------------------------------------------------


def random_mask(w, h, seed) -> WaterMask:
    rng = np.random.default_rng(seed)
    return WaterMask(bits=rng.random((h, w)) < 0.4)


def test_warp_mask_identity():
    m = random_mask(20, 14, seed=1)
    out = warp_mask(m, ProjectiveTransform.identity(), 20, 14)
    assert out.same_bits(m)


def test_warp_mask_integer_translation():
    m = random_mask(16, 16, seed=2)
    bk = ProjectiveTransform.from_matrix([[1, 0, -3], [0, 1, -5], [0, 0, 1]])
    out = warp_mask(m, bk, 16, 16)
    expected = np.zeros((16, 16), dtype=bool)
    expected[5:, 3:] = m.bits[:11, :13]
    assert np.array_equal(out.bits, expected)


def test_warp_mask_binary_and_empty_output():
    m = random_mask(8, 8, seed=3)
    with pytest.raises(EmptyOutput):
        warp_mask(m, ProjectiveTransform.identity(), 0, 4)
    out = warp_mask(m, ProjectiveTransform.identity(), 12, 12)
    assert set(np.unique(out.bits.astype(int))) <= {0, 1}


@st.composite
def mild_homographies(draw):
    import math as _m

    angle = draw(st.floats(-0.4, 0.4))
    scale = draw(st.floats(0.7, 1.4))
    tx = draw(st.floats(-6.0, 6.0))
    ty = draw(st.floats(-6.0, 6.0))
    px = draw(st.floats(-1e-3, 1e-3))
    py = draw(st.floats(-1e-3, 1e-3))
    c, s = _m.cos(angle), _m.sin(angle)
    m = np.array(
        [[scale * c, -scale * s, tx], [scale * s, scale * c, ty], [px, py, 1.0]]
    )
    return ProjectiveTransform.from_matrix(m)


@given(seed=st.integers(0, 2**16), bk=mild_homographies())
@settings(max_examples=40)
def test_property_warp_mask_matches_scalar_oracle(seed, bk):
    m = random_mask(32, 32, seed=seed)
    out = warp_mask(m, bk, 32, 32)
    assert np.array_equal(out.bits, oracle_warp_mask(m.bits, bk.h, 32, 32))
