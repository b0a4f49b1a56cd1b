"""Circle primitives: three-point solve, circumference rasterization, match score.

A candidate circle is scored against a binary edge map by rasterizing its
circumference with the midpoint circle algorithm and counting how many of the
raster points land on edge pixels.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .edges import EdgeMap

__all__ = [
    "Circle",
    "TestPointSet",
    "CollinearPointsError",
    "circle_from_three_points",
    "rasterize_mca",
    "rasterize_uniform",
    "objective_j",
]

# Below this absolute value the three-point denominator is treated as zero:
# the implied center would overflow pixel scale by many orders of magnitude.
COLLINEARITY_EPS = 1e-12


class CollinearPointsError(ValueError):
    """The three points are collinear or coincident and define no circle."""


@dataclass(frozen=True)
class Circle:
    """Circle in pixel coordinates with sub-pixel center and radius."""

    x0: float
    y0: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.x0) and math.isfinite(self.y0) and math.isfinite(self.r)):
            raise ValueError(f"circle parameters must be finite, got {self!r}")
        if self.r <= 0.0:
            raise ValueError(f"circle radius must be positive, got {self.r!r}")


@dataclass(frozen=True)
class TestPointSet:
    """Deduplicated raster points on a candidate circumference.

    ``points`` is an (N, 2) integer array of (x, y) pairs. For the midpoint
    rasterizer the rows follow the circumference in angular order starting at
    angle zero, which the continuity validation relies on.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, 2)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def total(self) -> int:
        return int(self.points.shape[0])


def circle_from_three_points(pi, pj, pk) -> Circle:
    """Solve the unique circle through three non-collinear points.

    Uses the circumcenter determinant form; raises CollinearPointsError when
    the denominator falls below COLLINEARITY_EPS (collinear or duplicate
    points).
    """
    xi, yi = float(pi[0]), float(pi[1])
    xj, yj = float(pj[0]), float(pj[1])
    xk, yk = float(pk[0]), float(pk[1])

    denom = 4.0 * ((xj - xi) * (yk - yi) - (xk - xi) * (yj - yi))
    if abs(denom) < COLLINEARITY_EPS:
        raise CollinearPointsError(
            f"points {pi}, {pj}, {pk} are collinear or coincident"
        )

    cj = xj * xj + yj * yj - (xi * xi + yi * yi)
    ck = xk * xk + yk * yk - (xi * xi + yi * yi)
    x0 = (cj * 2.0 * (yk - yi) - ck * 2.0 * (yj - yi)) / denom
    y0 = (2.0 * (xj - xi) * ck - 2.0 * (xk - xi) * cj) / denom
    r = math.hypot(x0 - xi, y0 - yi)
    return Circle(x0, y0, r)


@functools.lru_cache(maxsize=1024)
def _first_octant(radius: int) -> np.ndarray:
    """Integer midpoint walk from (radius, 0) up-left, points with y <= x."""
    x, y = radius, 0
    d = 1 - radius
    pts = [(x, y)]
    while x > y:
        y += 1
        if d < 0:
            d += 2 * y + 1
        else:
            x -= 1
            d += 2 * (y - x) + 1
        if x >= y:
            pts.append((x, y))
    arr = np.array(pts, dtype=np.int64)
    arr.flags.writeable = False
    return arr


def _mca_offsets(radius: int) -> np.ndarray:
    """All eight octant reflections in angular order, seam duplicates dropped."""
    base = _first_octant(radius)
    a, b = base[:, 0], base[:, 1]
    rev = base[::-1]
    # Seam duplicates: the diagonal point (a == b) is shared by octant pairs,
    # the first row (b == 0) by the axis crossings.
    rev_nd = rev[1:] if a[-1] == b[-1] else rev
    fwd_na = base[1:]

    def cols(arr, sx, sy, swap):
        u, v = (arr[:, 1], arr[:, 0]) if swap else (arr[:, 0], arr[:, 1])
        return np.column_stack([sx * u, sy * v])

    segments = [
        cols(base, 1, 1, False),       # 0..45 deg
        cols(rev_nd, 1, 1, True),      # 45..90
        cols(fwd_na, -1, 1, True),     # 90..135
        cols(rev_nd, -1, 1, False),    # 135..180
        cols(fwd_na, -1, -1, False),   # 180..225
        cols(rev_nd, -1, -1, True),    # 225..270
        cols(fwd_na, 1, -1, True),     # 270..315
        cols(rev_nd[:-1] if len(rev_nd) else rev_nd, 1, -1, False),  # 315..360
    ]
    return np.concatenate([s for s in segments if len(s)], axis=0)


def rasterize_mca(circle: Circle, width: int, height: int) -> TestPointSet:
    """Rasterize a circle with the integer midpoint algorithm.

    Center and radius are rounded to the nearest integer; sub-pixel precision
    in detection comes from the three-point solve, not from the raster.
    Points outside [0, width) x [0, height) are discarded.
    """
    if circle.r < 1.0:
        raise ValueError(f"radius {circle.r} below 1 px cannot be rasterized")
    cx = int(np.rint(circle.x0))
    cy = int(np.rint(circle.y0))
    ri = int(np.rint(circle.r))
    pts = _mca_offsets(ri) + np.array([cx, cy], dtype=np.int64)
    keep = (
        (pts[:, 0] >= 0)
        & (pts[:, 0] < width)
        & (pts[:, 1] >= 0)
        & (pts[:, 1] < height)
    )
    return TestPointSet(pts[keep])


def rasterize_uniform(
    circle: Circle, n_samples: int, width: int, height: int
) -> TestPointSet:
    """Sample the circumference at equal angles and round to raster cells.

    Kept as the comparison baseline for the midpoint rasterizer: for coarse
    sampling it visits fewer cells, and even for dense sampling the rounded
    set can miss cells the midpoint walk covers.
    """
    if n_samples < 4:
        raise ValueError(f"n_samples must be at least 4, got {n_samples}")
    ang = 2.0 * np.pi * np.arange(n_samples) / n_samples
    xs = np.rint(circle.x0 + circle.r * np.cos(ang)).astype(np.int64)
    ys = np.rint(circle.y0 + circle.r * np.sin(ang)).astype(np.int64)
    pts = np.column_stack([xs, ys])
    # first-occurrence dedup, preserving the angular sweep order
    _, first = np.unique(pts, axis=0, return_index=True)
    pts = pts[np.sort(first)]
    keep = (
        (pts[:, 0] >= 0)
        & (pts[:, 0] < width)
        & (pts[:, 1] >= 0)
        & (pts[:, 1] < height)
    )
    return TestPointSet(pts[keep])


def objective_j(circle: Circle, edge_map: "EdgeMap") -> float:
    """Mismatch score in [0, 1]: fraction of circumference raster points
    absent from the edge map. 0 means every test point lies on an edge pixel.

    A circle whose raster falls entirely outside the image scores the worst
    value 1.0 so the optimizer can rank infeasible candidates.
    """
    s = rasterize_mca(circle, edge_map.width, edge_map.height)
    if s.total == 0:
        return 1.0
    hits = int(edge_map.membership[s.points[:, 1], s.points[:, 0]].sum())
    return 1.0 - hits / s.total
