"""Spherical Web Mercator conversions (the basemap CRS for all overlays)."""

from __future__ import annotations

import math

from .errors import LatitudeOutOfRange

EARTH_RADIUS_M = 6378137.0
MAX_LATITUDE_DEG = 85.06

# X coordinate of the antimeridian: EARTH_RADIUS_M * pi.
MERCATOR_HALF_WIDTH_M = EARTH_RADIUS_M * math.pi


def lonlat_to_mercator(lon_deg: float, lat_deg: float) -> tuple[float, float]:
    """Project (lon, lat) degrees to Web Mercator meters.

    X = R * lon_rad, Y = R * ln(tan(pi/4 + lat_rad/2)) on the sphere of
    radius 6378137 m. Latitudes beyond +-85.06 deg blow up toward infinity
    and are rejected.
    """
    if abs(lat_deg) > MAX_LATITUDE_DEG:
        raise LatitudeOutOfRange(
            f"latitude {lat_deg} outside +-{MAX_LATITUDE_DEG} deg"
        )
    x = EARTH_RADIUS_M * math.radians(lon_deg)
    # asinh(tan(lat)) == ln(tan(pi/4 + lat/2)) identically, but evaluates to
    # an exact 0 at the equator and stays odd in latitude.
    y = EARTH_RADIUS_M * math.asinh(math.tan(math.radians(lat_deg)))
    return x, y


def mercator_to_lonlat(x_m: float, y_m: float) -> tuple[float, float]:
    """Analytic inverse of lonlat_to_mercator."""
    lon = math.degrees(x_m / EARTH_RADIUS_M)
    lat = math.degrees(2.0 * math.atan(math.exp(y_m / EARTH_RADIUS_M)) - math.pi / 2.0)
    return lon, lat
