"""Raster-to-vector tracing of change regions along pixel edges.

Contours follow the lattice edges between pixels rather than interpolated
midpoints, so a traced polygon's shoelace area equals its pixel count
exactly; that makes the vector output auditable against the raster counts.
Each 8-connected component yields one outer ring plus one ring per hole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .changes import ChangeClass, ChangeMap
from .water import EIGHT_CONNECTED


def _boundary_edges(mask: np.ndarray, labels: np.ndarray):
    """Directed lattice edges around True pixels, tagged with component label.

    Directions put the component interior on a consistent side, so outer
    rings come out with positive shoelace area and holes negative (in pixel
    axes with y growing downward).
    """
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask

    edges = []

    def emit(rows, cols, starts, ends):
        for r, c in zip(rows, cols):
            lab = int(labels[r, c])
            (sx, sy), (ex, ey) = starts(c, r), ends(c, r)
            edges.append(((sx, sy), (ex, ey), lab))

    top = mask & ~padded[:-2, 1:-1]
    rr, cc = np.nonzero(top)
    emit(rr, cc, lambda c, r: (c, r), lambda c, r: (c + 1, r))

    right = mask & ~padded[1:-1, 2:]
    rr, cc = np.nonzero(right)
    emit(rr, cc, lambda c, r: (c + 1, r), lambda c, r: (c + 1, r + 1))

    bottom = mask & ~padded[2:, 1:-1]
    rr, cc = np.nonzero(bottom)
    emit(rr, cc, lambda c, r: (c + 1, r + 1), lambda c, r: (c, r + 1))

    left = mask & ~padded[1:-1, :-2]
    rr, cc = np.nonzero(left)
    emit(rr, cc, lambda c, r: (c, r + 1), lambda c, r: (c, r))

    return edges


def _walk_rings(edges):
    """Link directed edges into closed rings.

    At a pinch vertex (two candidate continuations, which happens where
    pixels of the region meet only diagonally) the walk takes the edge whose
    direction is the incoming one rotated by (dx,dy) -> (dy,-dx); that keeps
    a diagonally-connected component traced as a single outer ring.
    """
    by_start: dict = {}
    for idx, (s, e, _lab) in enumerate(edges):
        by_start.setdefault(s, []).append(idx)
    for lst in by_start.values():
        lst.sort(key=lambda i: edges[i][1])

    used = [False] * len(edges)
    rings = []
    for first in range(len(edges)):
        if used[first]:
            continue
        ring_vertices = [edges[first][0]]
        cur = first
        used[first] = True
        while True:
            s, e, _lab = edges[cur]
            incoming = (e[0] - s[0], e[1] - s[1])
            candidates = [
                i for i in by_start.get(e, []) if not used[i] or i == first
            ]
            if len(candidates) == 1:
                nxt = candidates[0]
            else:
                want = (incoming[1], -incoming[0])
                nxt = None
                for i in candidates:
                    cs, ce, _ = edges[i]
                    if (ce[0] - cs[0], ce[1] - cs[1]) == want:
                        nxt = i
                        break
                if nxt is None:
                    nxt = candidates[0]
            if nxt == first:
                break
            ring_vertices.append(e)
            used[nxt] = True
            cur = nxt
        rings.append((_merge_collinear(ring_vertices), edges[first][2]))
    return rings


def _merge_collinear(vertices):
    """Drop vertices that continue the previous direction (ring stays closed)."""
    n = len(vertices)
    out = []
    for i in range(n):
        prev = vertices[i - 1]
        cur = vertices[i]
        nxt = vertices[(i + 1) % n]
        d0 = (cur[0] - prev[0], cur[1] - prev[1])
        d1 = (nxt[0] - cur[0], nxt[1] - cur[1])
        if d0[0] * d1[1] - d0[1] * d1[0] != 0:
            out.append(cur)
    return out


def signed_area(ring) -> float:
    """Shoelace area; sign tells ring orientation in the ring's own axes."""
    total = 0.0
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return total / 2.0


@dataclass(frozen=True)
class RegionPolygon:
    """One traced component: outer ring, hole rings, and its pixel count."""

    outer: tuple  # of (x, y) lattice vertices, not repeated at the end
    holes: tuple  # of rings
    area_px: float  # outer minus holes; equals the component pixel count
    cls: ChangeClass


def trace_class(change_map: ChangeMap, cls: ChangeClass) -> list[RegionPolygon]:
    """Vectorize every component of one class into exact-area polygons."""
    mask = change_map.class_mask(cls)
    if not mask.any():
        return []
    labels, _n = ndimage.label(mask, structure=EIGHT_CONNECTED)
    rings = _walk_rings(_boundary_edges(mask, labels))

    by_label: dict = {}
    for ring, lab in rings:
        by_label.setdefault(lab, []).append(ring)

    polygons = []
    for lab in sorted(by_label):
        outer = None
        holes = []
        area = 0.0
        for ring in by_label[lab]:
            a = signed_area(ring)
            area += a
            if a > 0:
                outer = ring
            else:
                holes.append(tuple(ring))
        polygons.append(
            RegionPolygon(
                outer=tuple(outer),
                holes=tuple(holes),
                area_px=area,
                cls=cls,
            )
        )
    return polygons


def _close_and_orient(ring, flip_test, to_coords):
    coords = [to_coords(x, y) for x, y in ring]
    if flip_test(coords):
        coords.reverse()
    coords.append(coords[0])
    return coords


def _ring_signed_area_coords(coords) -> float:
    total = 0.0
    n = len(coords)
    for i in range(n):
        x0, y0 = coords[i]
        x1, y1 = coords[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return total / 2.0


def polygon_geometry(poly: RegionPolygon, georef=None) -> dict:
    """GeoJSON Polygon geometry: lon/lat if georeferenced, else pixel coords.

    Exterior rings are oriented counterclockwise and holes clockwise in the
    exported coordinate axes (RFC 7946 right-hand rule).
    """
    if georef is None:
        def to_coords(x, y):
            return [float(x), float(y)]
    else:
        def to_coords(x, y):
            lon, lat = georef.pixel_to_lonlat(float(x), float(y))
            return [lon, lat]

    rings = [
        _close_and_orient(
            poly.outer, lambda cs: _ring_signed_area_coords(cs) < 0, to_coords
        )
    ]
    for hole in poly.holes:
        rings.append(
            _close_and_orient(
                hole, lambda cs: _ring_signed_area_coords(cs) > 0, to_coords
            )
        )
    return {"type": "Polygon", "coordinates": rings}


def change_map_to_geojson(
    change_map: ChangeMap,
    classes: tuple = (ChangeClass.LOST, ChangeClass.PERSISTENT, ChangeClass.NEW),
    include_annotations: bool = True,
) -> dict:
    """FeatureCollection of traced change polygons plus manual annotations."""
    area_grid = change_map.pixel_ground_area_m2()
    georef = change_map.georef
    features = []
    for cls in classes:
        mask = change_map.class_mask(cls)
        if not mask.any():
            continue
        labels, _n = ndimage.label(mask, structure=EIGHT_CONNECTED)
        for poly in trace_class(change_map, cls):
            props = {"class": cls.name, "area_px": poly.area_px}
            if area_grid is not None:
                # Integer-area polygons let us recover the component id from
                # any interior pixel: use the first boundary vertex's pixel.
                x0, y0 = poly.outer[0]
                lab = _component_label_at(labels, x0, y0)
                props["area_m2"] = float(area_grid[labels == lab].sum())
            features.append(
                {
                    "type": "Feature",
                    "geometry": polygon_geometry(poly, georef),
                    "properties": props,
                }
            )
    if include_annotations:
        for ann in change_map.annotations:
            features.append(annotation_feature(ann, georef))
    return {"type": "FeatureCollection", "features": features}


def _component_label_at(labels: np.ndarray, x0: int, y0: int) -> int:
    """Label of the pixel just inside an outer-ring start vertex.

    Outer rings start at a topmost-leftmost vertex of the component, whose
    pixel (x0, y0) lies inside the component by construction of the edge
    directions.
    """
    h, w = labels.shape
    for dy in (0, -1):
        for dx in (0, -1):
            c, r = x0 + dx, y0 + dy
            if 0 <= c < w and 0 <= r < h and labels[r, c] > 0:
                return int(labels[r, c])
    raise AssertionError("outer ring start vertex has no adjacent component pixel")


def annotation_feature(ann, georef=None) -> dict:
    if georef is None:
        coords = [[float(x), float(y)] for x, y in ann.vertices]
    else:
        coords = [list(georef.pixel_to_lonlat(x, y)) for x, y in ann.vertices]
    if ann.closed:
        ring = coords + [coords[0]]
        geometry = {"type": "Polygon", "coordinates": [ring]}
    else:
        geometry = {"type": "LineString", "coordinates": coords}
    return {
        "type": "Feature",
        "geometry": geometry,
        "properties": {
            "class": "ANNOTATION",
            "annotation_status": ann.status,
            "note": ann.note,
        },
    }
