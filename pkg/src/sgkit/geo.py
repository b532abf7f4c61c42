"""Planar geometry on lat/lon at park or city scale (equirectangular projection)."""

from __future__ import annotations

import math
from typing import Sequence

EARTH_RADIUS_M = 6_371_000.0


class Projection:
    """Equirectangular projection to metres, scaled by cos of a reference latitude."""

    def __init__(self, ref_lat: float):
        self.ref_lat = ref_lat
        self.kx = math.cos(math.radians(ref_lat)) * EARTH_RADIUS_M * math.pi / 180.0
        self.ky = EARTH_RADIUS_M * math.pi / 180.0

    @classmethod
    def around(cls, points: Sequence[tuple[float, float]]) -> "Projection":
        lats = [p[0] for p in points]
        return cls(sum(lats) / len(lats) if lats else 0.0)

    def xy(self, lat: float, lon: float) -> tuple[float, float]:
        return lon * self.kx, lat * self.ky

    def distance(self, a, b) -> float:
        (x1, y1), (x2, y2) = self.xy(*a), self.xy(*b)
        return math.hypot(x1 - x2, y1 - y2)


def point_line_distance(p, a, b) -> float:
    """Perpendicular distance from ``p`` to the infinite line through ``a`` and ``b`` (planar)."""
    (px, py), (ax, ay), (bx, by) = p, a, b
    dx, dy = bx - ax, by - ay
    norm = math.hypot(dx, dy)
    if norm == 0:
        return math.hypot(px - ax, py - ay)
    return abs(dy * (px - ax) - dx * (py - ay)) / norm


def point_segment_distance(p, a, b) -> float:
    (px, py), (ax, ay), (bx, by) = p, a, b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return math.hypot(px - ax, py - ay)
    s = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + s * dx), py - (ay + s * dy))


def _on_segment(p, a, b, eps=1e-12) -> bool:
    return point_segment_distance(p, a, b) <= eps


def point_in_polygon(p, polygon: Sequence[tuple[float, float]]) -> bool:
    """Ray casting; points on an edge or vertex count as inside.

    The polygon may or may not repeat its first vertex at the end.
    """
    pts = list(polygon)
    if len(pts) > 1 and tuple(pts[0]) == tuple(pts[-1]):
        pts = pts[:-1]
    if len(pts) < 3:
        return False
    x, y = p
    inside = False
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        if _on_segment(p, a, b):
            return True
        (x1, y1), (x2, y2) = a, b
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xc:
                inside = not inside
    return inside


def polygon_distance(p, polygon) -> float:
    """Planar distance from ``p`` to a polygon (zero inside)."""
    if point_in_polygon(p, polygon):
        return 0.0
    pts = list(polygon)
    return min(point_segment_distance(p, pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts)))
