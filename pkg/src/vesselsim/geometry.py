"""Planar geometry helpers shared across the package.

Angles are radians wrapped to [-pi, pi), positions are meters in an
east-north frame (x east, y north, headings counterclockwise from east).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# two line directions are treated as parallel below this |sin| threshold
PARALLEL_SIN_TOL = 1e-9


def wrap_angle(angle: float) -> float:
    """Wrap an angle to [-pi, pi); the boundary maps to -pi."""
    a = math.atan2(math.sin(angle), math.cos(angle))
    return -math.pi if a == math.pi else a


def angle_diff(a: float, b: float) -> float:
    """Shortest signed arc from angle b to angle a."""
    return wrap_angle(a - b)


def rad2vec(alpha: float) -> np.ndarray:
    """Unit vector [cos(alpha), sin(alpha)]."""
    return np.array([math.cos(alpha), math.sin(alpha)])


def vec2rad(p1, p2) -> float:
    """Orientation of the difference vector p1 - p2.

    Raises ValueError for coincident points, where the direction is undefined.
    """
    dx = float(p1[0]) - float(p2[0])
    dy = float(p1[1]) - float(p2[1])
    if dx == 0.0 and dy == 0.0:
        raise ValueError("vec2rad undefined for coincident points")
    return wrap_angle(math.atan2(dy, dx))


def orthop(x, y) -> np.ndarray:
    """Orthogonal projection of vector x onto vector y: ((x.y)/(y.y)) y."""
    y = np.asarray(y, dtype=float)
    yy = float(y @ y)
    if yy == 0.0:
        raise ValueError("orthop undefined for zero projection target")
    x = np.asarray(x, dtype=float)
    return (float(x @ y) / yy) * y


@dataclass(frozen=True)
class Line2:
    """Infinite line given by a point on it and a direction angle."""

    point: np.ndarray
    direction: float

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "direction", wrap_angle(self.direction))


def intersect(g1: Line2, g2: Line2) -> np.ndarray:
    """Intersection point of two lines, or the zero vector if parallel."""
    if abs(math.sin(g2.direction - g1.direction)) < PARALLEL_SIN_TOL:
        return np.zeros(2)
    d1 = rad2vec(g1.direction)
    d2 = rad2vec(g2.direction)
    dp = g2.point - g1.point
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    t = (dp[0] * d2[1] - dp[1] * d2[0]) / denom
    return g1.point + t * d1


def in_h(p, beta_h: float, b: float) -> bool:
    """Halfspace membership: rad2vec(beta_h) . p - b <= 0."""
    n = rad2vec(beta_h)
    return float(n[0] * p[0] + n[1] * p[1]) - b <= 0.0


def path_length(points) -> float:
    """Total polyline length over consecutive points.

    Raises ValueError for an empty sequence; a single point has length 0.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("path_length requires at least one point")
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if len(pts) == 1:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
