"""Circle detection on edge maps.

Candidates are triples of edge-vector indices; the optimizer searches the
continuous cube [0, Np-1]^3, each position decoding to the circumcircle of
three edge points. Detection score is the circumference mismatch J; accepted
circles are masked out of the map so the next pass finds remaining structure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import ndimage

from .edges import EdgeMap, mask_circle
from .emo import Bounds, EmoParams, optimize
from .geometry import (
    Circle,
    CollinearPointsError,
    _mca_offsets,
    circle_from_three_points,
    objective_j,
    rasterize_mca,
)

__all__ = [
    "CandidateEncoding",
    "DetectorConfig",
    "DetectedCircle",
    "InsufficientEdgesError",
    "NoCircleFoundError",
    "OracleSizeError",
    "decode",
    "fitness",
    "detect_single",
    "detect_multiple",
    "validate",
    "brute_force_oracle",
]

DEFAULT_R_MIN = 5.0
DEFAULT_MASK_TOLERANCE = 2.0
DEFAULT_MIN_SUPPORT = 0.6
DEFAULT_MAX_GAP_FRACTION = 0.5
ORACLE_DEFAULT_CAP = 60


class InsufficientEdgesError(ValueError):
    """Fewer than three edge points; no candidate circle exists."""


class NoCircleFoundError(RuntimeError):
    """The search ended without any feasible circle."""


class OracleSizeError(ValueError):
    """Edge map too large for exhaustive triple enumeration."""


@dataclass(frozen=True)
class CandidateEncoding:
    """A particle position: three continuous edge-vector indices."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=float).reshape(3).copy()
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True)
class DetectorConfig:
    """Detection parameters.

    r_max of None resolves to half the larger image side. Validation accepts
    a circle when at least min_support_fraction of its circumference raster
    lies within mask_tolerance_px of an edge pixel and the longest angular
    run of unsupported raster points does not exceed
    continuity_max_gap_fraction of the circumference.
    """

    emo: EmoParams = field(default_factory=EmoParams)
    r_min: float = DEFAULT_R_MIN
    r_max: Optional[float] = None
    fitness_threshold: Optional[float] = None
    mask_tolerance_px: float = DEFAULT_MASK_TOLERANCE
    min_support_fraction: float = DEFAULT_MIN_SUPPORT
    continuity_max_gap_fraction: float = DEFAULT_MAX_GAP_FRACTION
    max_circles: int = 1

    def __post_init__(self):
        if self.r_min <= 0:
            raise ValueError("r_min must be positive")
        if self.r_max is not None and self.r_max <= self.r_min:
            raise ValueError("r_max must exceed r_min")
        if self.mask_tolerance_px < 0:
            raise ValueError("mask_tolerance_px must be non-negative")
        if not 0.0 <= self.min_support_fraction <= 1.0:
            raise ValueError("min_support_fraction must lie in [0, 1]")
        if not 0.0 < self.continuity_max_gap_fraction <= 1.0:
            raise ValueError("continuity_max_gap_fraction must lie in (0, 1]")
        if self.max_circles < 1:
            raise ValueError("max_circles must be at least 1")

    def resolved_r_max(self, edge_map: EdgeMap) -> float:
        if self.r_max is not None:
            return self.r_max
        return 0.5 * max(edge_map.width, edge_map.height)


@dataclass(frozen=True)
class DetectedCircle:
    """One accepted candidate with its score and validation evidence."""

    circle: Circle
    score: float
    validated: bool
    support_points: int
    iterations: int


def _round_indices(indices, n_points: int) -> tuple[int, int, int]:
    idx = np.clip(np.rint(np.asarray(indices, dtype=float)), 0, n_points - 1)
    return tuple(int(v) for v in idx)


def _decode_ints(
    ints: tuple[int, int, int],
    edge_map: EdgeMap,
    r_min: Optional[float],
    r_max: Optional[float],
) -> Optional[Circle]:
    i, j, k = ints
    if i == j or j == k or i == k:
        return None
    try:
        circle = circle_from_three_points(
            edge_map.edges[i], edge_map.edges[j], edge_map.edges[k]
        )
    except CollinearPointsError:
        return None
    if r_min is not None and circle.r < r_min:
        return None
    if r_max is not None and circle.r > r_max:
        return None
    return circle


def decode(
    encoding: CandidateEncoding,
    edge_map: EdgeMap,
    r_min: Optional[float] = None,
    r_max: Optional[float] = None,
) -> Optional[Circle]:
    """Round indices to edge points and solve their circumcircle.

    Returns None (infeasible rather than an error) when indices collide
    after rounding, the points are collinear, or the radius falls outside
    the [r_min, r_max] filter when one is given.
    """
    if edge_map.n_points < 3:
        raise InsufficientEdgesError(
            f"need at least 3 edge points, got {edge_map.n_points}"
        )
    return _decode_ints(
        _round_indices(encoding.indices, edge_map.n_points), edge_map, r_min, r_max
    )


def fitness(
    encoding: CandidateEncoding, edge_map: EdgeMap, config: DetectorConfig
) -> float:
    """Objective handed to the optimizer: J of the decoded circle, or the
    worst score 1.0 for infeasible encodings."""
    circle = decode(
        encoding, edge_map, config.r_min, config.resolved_r_max(edge_map)
    )
    if circle is None:
        return 1.0
    return objective_j(circle, edge_map)


def _longest_circular_gap(supported: np.ndarray) -> int:
    """Longest consecutive run of False, treating the array as circular."""
    n = len(supported)
    if supported.all():
        return 0
    if not supported.any():
        return n
    unsup = np.concatenate([~supported, ~supported]).astype(np.int8)
    delta = np.diff(np.concatenate([[0], unsup, [0]]))
    starts = np.nonzero(delta == 1)[0]
    ends = np.nonzero(delta == -1)[0]
    return int(min((ends - starts).max(), n))


def validate(
    circle: Circle, edge_map: EdgeMap, config: DetectorConfig
) -> tuple[bool, int]:
    """Continuity check on the circumference raster, in angular order.

    A raster point is supported when some edge pixel lies within
    mask_tolerance_px. The walk covers the whole circumference: cells falling
    outside the canvas can never be supported, so a circle that mostly hangs
    off the image cannot validate on its small visible arc. Accepts iff the
    support fraction reaches min_support_fraction and the longest circular
    run of unsupported points stays within continuity_max_gap_fraction of the
    circumference. Returns the decision and the supported-point count.
    """
    ri = int(np.rint(circle.r))
    if ri < 1 or edge_map.n_points == 0:
        return False, 0
    pts = _mca_offsets(ri) + np.array(
        [int(np.rint(circle.x0)), int(np.rint(circle.y0))], dtype=np.int64
    )
    inside = (
        (pts[:, 0] >= 0)
        & (pts[:, 0] < edge_map.width)
        & (pts[:, 1] >= 0)
        & (pts[:, 1] < edge_map.height)
    )
    if not inside.any():
        return False, 0
    dist = ndimage.distance_transform_edt(~edge_map.membership)
    supported = np.zeros(len(pts), dtype=bool)
    supported[inside] = (
        dist[pts[inside, 1], pts[inside, 0]] <= config.mask_tolerance_px
    )
    count = int(supported.sum())
    ok = (
        count / len(pts) >= config.min_support_fraction
        and _longest_circular_gap(supported)
        <= config.continuity_max_gap_fraction * len(pts)
    )
    return ok, count


def detect_single(edge_map: EdgeMap, config: DetectorConfig) -> DetectedCircle:
    """Search the index cube for the best-matching circle.

    Deterministic given config.emo.rng_seed. Raises NoCircleFoundError when
    the best position found decodes to no feasible circle (every candidate
    infeasible).
    """
    n = edge_map.n_points
    if n < 3:
        raise InsufficientEdgesError(f"need at least 3 edge points, got {n}")
    r_min = config.r_min
    r_max = config.resolved_r_max(edge_map)

    # Fitness depends only on the rounded index triple and is symmetric in
    # it, so memoize on the sorted triple; the population revisits regions
    # heavily near convergence.
    cache: dict[tuple[int, int, int], float] = {}

    def objective(x: np.ndarray) -> float:
        ints = _round_indices(x, n)
        key = tuple(sorted(ints))
        val = cache.get(key)
        if val is None:
            circle = _decode_ints(key, edge_map, r_min, r_max)
            val = 1.0 if circle is None else objective_j(circle, edge_map)
            cache[key] = val
        return val

    bounds = Bounds(lower=np.zeros(3), upper=np.full(3, float(n - 1)))
    result = optimize(
        objective, bounds, config.emo, fitness_threshold=config.fitness_threshold
    )
    circle = decode(CandidateEncoding(result.best_position), edge_map, r_min, r_max)
    if circle is None:
        raise NoCircleFoundError(
            "no feasible circle: every evaluated candidate was degenerate or "
            "outside the radius filter"
        )
    ok, support = validate(circle, edge_map, config)
    return DetectedCircle(
        circle=circle,
        score=result.best_fitness,
        validated=ok,
        support_points=support,
        iterations=result.iterations_run,
    )


def detect_multiple(edge_map: EdgeMap, config: DetectorConfig) -> list[DetectedCircle]:
    """Repeated single detection with masking, up to config.max_circles.

    After each validated detection the supporting edge points are masked out
    and the search reruns on the reduced map; the loop stops at the first
    failed search or failed validation. Each pass offsets the seed by its
    circle index so passes explore independently while the whole output stays
    a pure function of (edge_map, config). Returns circles by ascending score.
    """
    detections: list[DetectedCircle] = []
    current = edge_map
    for k in range(config.max_circles):
        pass_config = replace(
            config, emo=replace(config.emo, rng_seed=config.emo.rng_seed + k)
        )
        try:
            det = detect_single(current, pass_config)
        except (InsufficientEdgesError, NoCircleFoundError):
            break
        if not det.validated:
            break
        detections.append(det)
        reduced = mask_circle(current, det.circle, config.mask_tolerance_px)
        if reduced.n_points >= current.n_points:
            break  # mask removed nothing; another pass would re-find it
        current = reduced
    return sorted(detections, key=lambda d: d.score)


def brute_force_oracle(
    edge_map: EdgeMap, config: DetectorConfig, size_cap: int = ORACLE_DEFAULT_CAP
) -> DetectedCircle:
    """Exhaustive global optimum over all index triples.

    Intended for testing: any stochastic search result can be compared
    against the true minimum. Ties break lexicographically on (i, j, k).
    """
    n = edge_map.n_points
    if n < 3:
        raise InsufficientEdgesError(f"need at least 3 edge points, got {n}")
    if n > size_cap:
        raise OracleSizeError(
            f"{n} edge points exceed the oracle cap of {size_cap}"
        )
    r_min = config.r_min
    r_max = config.resolved_r_max(edge_map)
    best_score = None
    best_circle = None
    for triple in itertools.combinations(range(n), 3):
        circle = _decode_ints(triple, edge_map, r_min, r_max)
        if circle is None:
            continue
        score = objective_j(circle, edge_map)
        if best_score is None or score < best_score:
            best_score = score
            best_circle = circle
    if best_circle is None:
        raise NoCircleFoundError("every index triple is infeasible")
    ok, support = validate(best_circle, edge_map, config)
    return DetectedCircle(
        circle=best_circle,
        score=best_score,
        validated=ok,
        support_points=support,
        iterations=0,
    )
