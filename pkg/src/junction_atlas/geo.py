"""Geodesic helpers shared by map ingestion and telematics matching."""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

# meters per degree of latitude on the spherical model
_M_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two WGS84 points."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def haversine_m_many(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Vectorized haversine from one point to arrays of points."""
    p1 = math.radians(lat)
    p2 = np.radians(lats)
    dphi = p2 - p1
    dlam = np.radians(lons - lon)
    a = np.sin(dphi / 2.0) ** 2 + math.cos(p1) * np.cos(p2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(a)))


def local_xy(lat, lon, lat0: float, lon0: float):
    """Project lat/lon to planar meters in an azimuthal frame centered at (lat0, lon0).

    Equirectangular about the reference point; adequate for the sub-kilometer
    extents merged here, and it keeps centroids free of raw lat/lon averaging
    artifacts near meridian wrap.
    """
    x = (np.asarray(lon, dtype=float) - lon0) * _M_PER_DEG_LAT * math.cos(math.radians(lat0))
    y = (np.asarray(lat, dtype=float) - lat0) * _M_PER_DEG_LAT
    return x, y


def local_xy_inverse(x, y, lat0: float, lon0: float):
    """Inverse of :func:`local_xy`."""
    lat = lat0 + np.asarray(y, dtype=float) / _M_PER_DEG_LAT
    lon = lon0 + np.asarray(x, dtype=float) / (_M_PER_DEG_LAT * math.cos(math.radians(lat0)))
    return lat, lon


def initial_bearing_deg(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Compass bearing in degrees [0, 360) from point 1 toward point 2."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dlam = math.radians(lon2 - lon1)
    y = math.sin(dlam) * math.cos(p2)
    x = math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dlam)
    return math.degrees(math.atan2(y, x)) % 360.0


class GridIndex:
    """Uniform lat/lon grid over point sets for radius-bounded neighbor queries.

    Cell size is chosen so any neighbor within ``radius_m`` of a query point
    lies in the 3x3 cell block around the query cell. Candidates still need an
    exact distance check by the caller.
    """

    def __init__(self, lats: np.ndarray, lons: np.ndarray, radius_m: float):
        if radius_m <= 0:
            raise ValueError("radius_m must be positive")
        self.lats = np.asarray(lats, dtype=float)
        self.lons = np.asarray(lons, dtype=float)
        self.radius_m = float(radius_m)
        self._dlat = radius_m / _M_PER_DEG_LAT
        max_abs_lat = float(np.max(np.abs(self.lats))) if self.lats.size else 0.0
        cos_floor = max(0.05, math.cos(math.radians(min(max_abs_lat + self._dlat, 89.0))))
        self._dlon = radius_m / (_M_PER_DEG_LAT * cos_floor)
        self._cells: dict[tuple[int, int], list[int]] = defaultdict(list)
        for i in range(self.lats.size):
            self._cells[self._cell(self.lats[i], self.lons[i])].append(i)

    def _cell(self, lat: float, lon: float) -> tuple[int, int]:
        return (int(math.floor(lat / self._dlat)), int(math.floor(lon / self._dlon)))

    def candidates(self, lat: float, lon: float) -> list[int]:
        """Indices of all points possibly within radius_m of (lat, lon)."""
        ci, cj = self._cell(lat, lon)
        out: list[int] = []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                out.extend(self._cells.get((ci + di, cj + dj), ()))
        return out

    def nearest_within(self, lat: float, lon: float) -> tuple[int, float] | None:
        """Nearest indexed point within radius_m, ties broken by lowest index."""
        best: tuple[float, int] | None = None
        for i in self.candidates(lat, lon):
            d = haversine_m(lat, lon, self.lats[i], self.lons[i])
            if d <= self.radius_m and (best is None or (d, i) < best):
                best = (d, i)
        if best is None:
            return None
        return best[1], best[0]

    def all_within(self, lat: float, lon: float) -> list[tuple[int, float]]:
        out = []
        for i in self.candidates(lat, lon):
            d = haversine_m(lat, lon, self.lats[i], self.lons[i])
            if d <= self.radius_m:
                out.append((i, d))
        return out


def point_on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float,
                     eps: float = 1e-12) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    scale = max(abs(bx - ax), abs(by - ay), abs(px - ax), abs(py - ay), 1.0)
    if abs(cross) > eps * scale * scale:
        return False
    dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay)
    sq = (bx - ax) ** 2 + (by - ay) ** 2
    return -eps * scale * scale <= dot <= sq + eps * scale * scale


def point_in_polygon(x: float, y: float, polygon) -> bool:
    """Ray-casting membership test; points on the boundary count as inside.

    ``polygon`` is a sequence of (x, y) vertices, implicitly closed.
    """
    pts = [(float(a), float(b)) for a, b in polygon]
    n = len(pts)
    if n < 3:
        raise ValueError("polygon needs at least 3 vertices")
    for k in range(n):
        ax, ay = pts[k]
        bx, by = pts[(k + 1) % n]
        if point_on_segment(x, y, ax, ay, bx, by):
            return True
    inside = False
    for k in range(n):
        ax, ay = pts[k]
        bx, by = pts[(k + 1) % n]
        if (ay > y) != (by > y):
            xcross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < xcross:
                inside = not inside
    return inside
