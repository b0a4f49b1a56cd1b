"""Deterministic synthetic scenes with exact ground truth.

Scenes hold outline shapes (1-px strokes), optional salt-and-pepper noise,
and a seed. The same spec can be rendered as a grayscale image (for the full
edge-detection path) or directly as an edge map (to exercise the detector in
isolation). Ground truth comes from the construction, never from estimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .edges import EdgeMap, GrayImage
from .geometry import Circle, rasterize_mca

__all__ = [
    "CircleShape",
    "RectangleShape",
    "LineShape",
    "TriangleShape",
    "ArcShape",
    "EllipseShape",
    "SceneSpec",
    "SceneSpecError",
    "render",
    "render_edge_map",
    "scene_from_dict",
    "scene_to_dict",
]

STROKE_VALUE = 255


class SceneSpecError(ValueError):
    """Invalid scene description."""


@dataclass(frozen=True)
class CircleShape:
    x0: float
    y0: float
    r: float

    def __post_init__(self):
        if self.r < 1:
            raise SceneSpecError(f"circle radius must be >= 1 px, got {self.r}")


@dataclass(frozen=True)
class ArcShape:
    """Circular arc swept counterclockwise from start_deg to end_deg."""

    x0: float
    y0: float
    r: float
    start_deg: float
    end_deg: float

    def __post_init__(self):
        if self.r < 1:
            raise SceneSpecError(f"arc radius must be >= 1 px, got {self.r}")
        if self.end_deg <= self.start_deg:
            raise SceneSpecError("end_deg must exceed start_deg")

    @property
    def is_full_circle(self) -> bool:
        return self.end_deg - self.start_deg >= 360.0


@dataclass(frozen=True)
class EllipseShape:
    """Axis-aligned ellipse; a horizontal, b vertical semi-axis."""

    x0: float
    y0: float
    a: float
    b: float

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise SceneSpecError("ellipse semi-axes must be >= 1 px")


@dataclass(frozen=True)
class RectangleShape:
    """Axis-aligned rectangle outline from corner (x, y)."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise SceneSpecError("rectangle sides must be >= 1 px")


@dataclass(frozen=True)
class LineShape:
    x1: float
    y1: float
    x2: float
    y2: float


@dataclass(frozen=True)
class TriangleShape:
    p1: tuple[float, float]
    p2: tuple[float, float]
    p3: tuple[float, float]


Shape = Union[
    CircleShape, ArcShape, EllipseShape, RectangleShape, LineShape, TriangleShape
]


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    shapes: tuple[Shape, ...] = ()
    salt_pepper_fraction: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise SceneSpecError("canvas must be at least 3x3")
        if not 0.0 <= self.salt_pepper_fraction <= 1.0:
            raise SceneSpecError("salt_pepper_fraction must lie in [0, 1]")
        object.__setattr__(self, "shapes", tuple(self.shapes))


def _line_points(x1, y1, x2, y2) -> np.ndarray:
    n = int(max(abs(x2 - x1), abs(y2 - y1))) + 1
    xs = np.rint(np.linspace(x1, x2, n)).astype(np.int64)
    ys = np.rint(np.linspace(y1, y2, n)).astype(np.int64)
    return np.column_stack([xs, ys])


def _polyline_points(vertices) -> np.ndarray:
    segs = []
    for (x1, y1), (x2, y2) in zip(vertices, vertices[1:] + vertices[:1]):
        segs.append(_line_points(x1, y1, x2, y2))
    return np.concatenate(segs, axis=0)


def _ellipse_points(shape: EllipseShape) -> np.ndarray:
    n = max(16, int(4.0 * math.pi * max(shape.a, shape.b)))
    t = 2.0 * np.pi * np.arange(n) / n
    xs = np.rint(shape.x0 + shape.a * np.cos(t)).astype(np.int64)
    ys = np.rint(shape.y0 + shape.b * np.sin(t)).astype(np.int64)
    return np.column_stack([xs, ys])


def _shape_points(shape: Shape, width: int, height: int) -> np.ndarray:
    """In-canvas raster points of the shape outline."""
    if isinstance(shape, CircleShape):
        pts = rasterize_mca(Circle(shape.x0, shape.y0, shape.r), width, height).points
        return pts
    if isinstance(shape, ArcShape):
        pts = rasterize_mca(Circle(shape.x0, shape.y0, shape.r), width, height).points
        if shape.is_full_circle or pts.shape[0] == 0:
            return pts
        ang = np.degrees(
            np.arctan2(pts[:, 1] - shape.y0, pts[:, 0] - shape.x0)
        ) % 360.0
        span = shape.end_deg - shape.start_deg
        keep = (ang - shape.start_deg) % 360.0 <= span
        return pts[keep]
    if isinstance(shape, EllipseShape):
        pts = _ellipse_points(shape)
    elif isinstance(shape, RectangleShape):
        x2, y2 = shape.x + shape.w - 1, shape.y + shape.h - 1
        pts = _polyline_points(
            [(shape.x, shape.y), (x2, shape.y), (x2, y2), (shape.x, y2)]
        )
    elif isinstance(shape, LineShape):
        pts = _line_points(shape.x1, shape.y1, shape.x2, shape.y2)
    elif isinstance(shape, TriangleShape):
        pts = _polyline_points([tuple(shape.p1), tuple(shape.p2), tuple(shape.p3)])
    else:
        raise SceneSpecError(f"unknown shape {shape!r}")
    keep = (
        (pts[:, 0] >= 0)
        & (pts[:, 0] < width)
        & (pts[:, 1] >= 0)
        & (pts[:, 1] < height)
    )
    return pts[keep]


def _stroke_membership(spec: SceneSpec) -> np.ndarray:
    canvas = np.zeros((spec.height, spec.width), dtype=bool)
    for shape in spec.shapes:
        pts = _shape_points(shape, spec.width, spec.height)
        if pts.shape[0] == 0:
            raise SceneSpecError(f"shape {shape!r} lies entirely outside the canvas")
        canvas[pts[:, 1], pts[:, 0]] = True
    return canvas


def _ground_truth(spec: SceneSpec) -> list[Circle]:
    truth = []
    for shape in spec.shapes:
        if isinstance(shape, CircleShape):
            truth.append(Circle(shape.x0, shape.y0, shape.r))
        elif isinstance(shape, ArcShape) and shape.is_full_circle:
            truth.append(Circle(shape.x0, shape.y0, shape.r))
    return truth


def _noise_positions(spec: SceneSpec) -> np.ndarray:
    count = int(round(spec.salt_pepper_fraction * spec.width * spec.height))
    if count == 0:
        return np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(spec.rng_seed)
    return rng.choice(spec.width * spec.height, size=count, replace=False)


def render(spec: SceneSpec) -> tuple[GrayImage, list[Circle]]:
    """Rasterize outlines onto a black canvas and flip noise pixels.

    Noise flips exactly round(fraction * width * height) distinct pixels
    chosen by the seeded generator, so reruns are identical and the diff
    against the noiseless render has a known count.
    """
    membership = _stroke_membership(spec)
    pixels = np.where(membership, STROKE_VALUE, 0).astype(np.uint8)
    flat = pixels.reshape(-1)
    pos = _noise_positions(spec)
    flat[pos] = STROKE_VALUE - flat[pos]
    return GrayImage(pixels=pixels), _ground_truth(spec)


def render_edge_map(spec: SceneSpec) -> tuple[EdgeMap, list[Circle]]:
    """Rasterize outlines directly as an edge map, bypassing edge detection.

    Noise flips membership bits at the same seeded positions as render.
    """
    membership = _stroke_membership(spec)
    flat = membership.reshape(-1)
    pos = _noise_positions(spec)
    flat[pos] = ~flat[pos]
    return EdgeMap.from_membership(membership), _ground_truth(spec)


_SHAPE_PARSERS = {
    "circle": (CircleShape, ("x0", "y0", "r")),
    "arc": (ArcShape, ("x0", "y0", "r", "start_deg", "end_deg")),
    "ellipse": (EllipseShape, ("x0", "y0", "a", "b")),
    "rectangle": (RectangleShape, ("x", "y", "w", "h")),
    "line": (LineShape, ("x1", "y1", "x2", "y2")),
    "triangle": (TriangleShape, ("p1", "p2", "p3")),
}


def scene_from_dict(data: dict) -> SceneSpec:
    """Parse the JSON scene form; see the README for the schema."""
    try:
        width = int(data["width"])
        height = int(data["height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneSpecError(f"scene needs integer width and height: {exc}") from exc
    shapes = []
    for i, raw in enumerate(data.get("shapes", [])):
        kind = raw.get("type")
        if kind not in _SHAPE_PARSERS:
            raise SceneSpecError(f"shapes[{i}]: unknown type {kind!r}")
        cls, names = _SHAPE_PARSERS[kind]
        try:
            args = [raw[name] for name in names]
        except KeyError as exc:
            raise SceneSpecError(f"shapes[{i}] ({kind}): missing field {exc}") from exc
        if cls is TriangleShape:
            args = [tuple(a) for a in args]
        shapes.append(cls(*args))
    noise = data.get("noise", {})
    return SceneSpec(
        width=width,
        height=height,
        shapes=tuple(shapes),
        salt_pepper_fraction=float(noise.get("salt_pepper_fraction", 0.0)),
        rng_seed=int(data.get("rng_seed", 0)),
    )


def scene_to_dict(spec: SceneSpec) -> dict:
    shapes = []
    for shape in spec.shapes:
        for kind, (cls, names) in _SHAPE_PARSERS.items():
            if isinstance(shape, cls):
                entry = {"type": kind}
                for name in names:
                    value = getattr(shape, name)
                    entry[name] = list(value) if isinstance(value, tuple) else value
                shapes.append(entry)
                break
    return {
        "width": spec.width,
        "height": spec.height,
        "shapes": shapes,
        "noise": {"salt_pepper_fraction": spec.salt_pepper_fraction},
        "rng_seed": spec.rng_seed,
    }
