"""Image ingestion, Canny edge extraction, and edge-map handling.

The detector consumes an EdgeMap: a binary raster plus the ordered vector E
of edge-pixel coordinates, enumerated in row-major scan order so particle
encodings are reproducible across runs and platforms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from .geometry import Circle

__all__ = [
    "GrayImage",
    "EdgeMap",
    "CannyParams",
    "EdgeMapFormatError",
    "canny",
    "load_image",
    "save_image",
    "load_edge_map",
    "save_edge_map",
    "mask_circle",
]

# Default Canny thresholds are fractions of the max gradient magnitude.
DEFAULT_GAUSSIAN_SIGMA = 1.4
DEFAULT_LOW_THRESHOLD = 0.1
DEFAULT_HIGH_THRESHOLD = 0.3


class EdgeMapFormatError(ValueError):
    """Raised for malformed or unsupported edge-map files."""


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster; pixels is (height, width) uint8, row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {px.shape}")
        if px.shape[0] < 3 or px.shape[1] < 3:
            raise ValueError(f"image must be at least 3x3, got {px.shape[1]}x{px.shape[0]}")
        if px.dtype != np.uint8:
            if np.issubdtype(px.dtype, np.floating) and (px.min() < 0 or px.max() > 255):
                raise ValueError("intensity values must lie in [0, 255]")
            px = np.clip(np.rint(px), 0, 255).astype(np.uint8)
        else:
            px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True)
class EdgeMap:
    """Binary edge raster plus the ordered edge vector E.

    ``edges`` is an (Np, 2) int64 array of (x, y) coordinates in row-major
    scan order; ``membership`` is the (height, width) boolean raster kept
    consistent with it. Instances are immutable and safe to share.
    """

    width: int
    height: int
    edges: np.ndarray
    membership: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be positive")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2).copy()
        membership = np.asarray(self.membership, dtype=bool).copy()
        if membership.shape != (self.height, self.width):
            raise ValueError(
                f"membership shape {membership.shape} does not match "
                f"{self.height}x{self.width}"
            )
        if edges.size:
            if edges.min() < 0 or edges[:, 0].max() >= self.width or edges[:, 1].max() >= self.height:
                raise ValueError("edge coordinates outside the image bounds")
        if int(membership.sum()) != len(edges):
            raise ValueError("membership raster inconsistent with edge vector")
        if edges.size and not membership[edges[:, 1], edges[:, 0]].all():
            raise ValueError("membership raster inconsistent with edge vector")
        edges.flags.writeable = False
        membership.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "membership", membership)

    @classmethod
    def from_membership(cls, membership: np.ndarray) -> "EdgeMap":
        """Build from a boolean raster; E enumerated in row-major order."""
        membership = np.asarray(membership, dtype=bool)
        rows, cols = np.nonzero(membership)
        edges = np.column_stack([cols, rows]).astype(np.int64)
        return cls(
            width=membership.shape[1],
            height=membership.shape[0],
            edges=edges,
            membership=membership,
        )

    @classmethod
    def from_points(cls, points, width: int, height: int) -> "EdgeMap":
        """Build from (x, y) coordinates; duplicates collapse via the raster."""
        membership = np.zeros((height, width), dtype=bool)
        pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
        if pts.size:
            membership[pts[:, 1], pts[:, 0]] = True
        return cls.from_membership(membership)

    @property
    def n_points(self) -> int:
        """Number of edge points (the vector length)."""
        return int(len(self.edges))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EdgeMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.edges, other.edges)
        )

    def __hash__(self):
        return hash((self.width, self.height, self.edges.tobytes()))


@dataclass(frozen=True)
class CannyParams:
    """Smoothing sigma plus hysteresis thresholds.

    Thresholds are fractions of the maximum gradient magnitude in the
    smoothed image, so the same params work across brightness scales.
    """

    gaussian_sigma: float = DEFAULT_GAUSSIAN_SIGMA
    low_threshold: float = DEFAULT_LOW_THRESHOLD
    high_threshold: float = DEFAULT_HIGH_THRESHOLD

    def __post_init__(self):
        if self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be positive")
        if not 0 < self.low_threshold < self.high_threshold:
            raise ValueError("need 0 < low_threshold < high_threshold")


def canny(image: GrayImage, params: Optional[CannyParams] = None) -> EdgeMap:
    """Classical Canny pipeline producing single-pixel-wide edges.

    Gaussian smoothing, Sobel gradients, 4-direction non-maximum
    suppression, then double-threshold hysteresis (weak pixels survive only
    in 8-connected components that contain a strong pixel). The one-pixel
    border is cleared since gradients there are boundary artifacts.
    """
    if params is None:
        params = CannyParams()
    smoothed = ndimage.gaussian_filter(
        image.pixels.astype(np.float64), sigma=params.gaussian_sigma
    )
    gy = ndimage.sobel(smoothed, axis=0)
    gx = ndimage.sobel(smoothed, axis=1)
    mag = np.hypot(gx, gy)
    gmax = float(mag.max())
    if gmax == 0.0:
        return EdgeMap.from_membership(np.zeros_like(mag, dtype=bool))

    h, w = mag.shape
    padded = np.pad(mag, 1)

    def shifted(dy: int, dx: int) -> np.ndarray:
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    theta = np.degrees(np.arctan2(gy, gx)) % 180.0
    bins = [
        ((theta < 22.5) | (theta >= 157.5), (0, 1)),
        ((theta >= 22.5) & (theta < 67.5), (1, 1)),
        ((theta >= 67.5) & (theta < 112.5), (1, 0)),
        ((theta >= 112.5) & (theta < 157.5), (1, -1)),
    ]
    # >= on one side and > on the other so a two-pixel plateau across a
    # symmetric step keeps exactly one of the pair.
    nms = np.zeros_like(mag, dtype=bool)
    for mask, (dy, dx) in bins:
        nms |= mask & (mag >= shifted(dy, dx)) & (mag > shifted(-dy, -dx))
    nms[0, :] = nms[-1, :] = False
    nms[:, 0] = nms[:, -1] = False

    weak = nms & (mag >= params.low_threshold * gmax)
    strong = nms & (mag >= params.high_threshold * gmax)
    if not strong.any():
        return EdgeMap.from_membership(np.zeros_like(mag, dtype=bool))
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    keep = np.unique(labels[strong])
    keep = keep[keep != 0]
    final = np.isin(labels, keep)
    return EdgeMap.from_membership(final)


def load_image(path: Union[str, Path]) -> GrayImage:
    """Read PNG or PGM; color inputs reduce to gray by Rec. 601 luma."""
    from PIL import Image

    with Image.open(path) as img:
        gray = img.convert("L")
        return GrayImage(pixels=np.asarray(gray, dtype=np.uint8))


def save_image(image: GrayImage, path: Union[str, Path]) -> None:
    from PIL import Image

    Image.fromarray(np.asarray(image.pixels)).save(path)


def _parse_pbm(data: bytes, path) -> EdgeMap:
    if len(data) < 2 or data[:2] not in (b"P1", b"P4"):
        raise EdgeMapFormatError(f"{path}: not a PBM file (bad magic)")
    magic = data[:2]
    # Header tokens: width then height; '#' starts a comment to end of line.
    pos = 2
    tokens = []
    while len(tokens) < 2:
        if pos >= len(data):
            raise EdgeMapFormatError(f"{path}: truncated PBM header")
        c = data[pos : pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            m = re.match(rb"\d+", data[pos:])
            if m is None:
                raise EdgeMapFormatError(f"{path}: malformed PBM header token")
            tokens.append(int(m.group()))
            pos += m.end()
    width, height = tokens
    if width < 1 or height < 1:
        raise EdgeMapFormatError(f"{path}: invalid PBM dimensions {width}x{height}")

    if magic == b"P4":
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise EdgeMapFormatError(f"{path}: missing whitespace before PBM raster")
        pos += 1
        row_bytes = (width + 7) // 8
        raster = data[pos : pos + row_bytes * height]
        if len(raster) != row_bytes * height:
            raise EdgeMapFormatError(f"{path}: truncated PBM raster")
        bits = np.unpackbits(
            np.frombuffer(raster, dtype=np.uint8).reshape(height, row_bytes),
            axis=1,
            bitorder="big",
        )[:, :width]
        return EdgeMap.from_membership(bits.astype(bool))

    # P1: ASCII bits, optionally unseparated, with comments allowed.
    body = re.sub(rb"#[^\n]*", b"", data[pos:])
    digits = re.findall(rb"[01]", body)
    if len(digits) < width * height:
        raise EdgeMapFormatError(f"{path}: P1 raster has too few pixels")
    bits = np.array(digits[: width * height], dtype=np.uint8).reshape(height, width)
    return EdgeMap.from_membership(bits == 1)


def load_edge_map(path: Union[str, Path], format: Optional[str] = None) -> EdgeMap:
    """Read a binary edge map.

    Formats: "pbm" (P1 or P4; bit 1 = edge) and "png"/"pgm" (nonzero = edge).
    When format is None it is inferred from the file extension.
    """
    path = Path(path)
    if format is None:
        format = path.suffix.lstrip(".").lower()
    format = format.lower()
    if format == "pbm":
        return _parse_pbm(path.read_bytes(), path)
    if format in ("png", "pgm"):
        from PIL import Image

        with Image.open(path) as img:
            arr = np.asarray(img.convert("L"))
        return EdgeMap.from_membership(arr != 0)
    raise EdgeMapFormatError(f"{path}: unsupported edge-map format {format!r}")


def save_edge_map(edge_map: EdgeMap, path: Union[str, Path]) -> None:
    """Write PBM P4: one bit per pixel, MSB-first, rows byte-padded."""
    header = f"P4\n{edge_map.width} {edge_map.height}\n".encode("ascii")
    packed = np.packbits(edge_map.membership, axis=1, bitorder="big")
    Path(path).write_bytes(header + packed.tobytes())


def mask_circle(edge_map: EdgeMap, circle: Circle, tolerance_px: float) -> EdgeMap:
    """Remove edge points within tolerance_px of the circle's circumference.

    Returns a new EdgeMap (the input is immutable); the surviving points
    keep their row-major enumeration order.
    """
    if tolerance_px < 0:
        raise ValueError("tolerance_px must be non-negative")
    if edge_map.n_points == 0:
        return edge_map
    pts = edge_map.edges.astype(np.float64)
    dist = np.hypot(pts[:, 0] - circle.x0, pts[:, 1] - circle.y0)
    keep = np.abs(dist - circle.r) > tolerance_px
    return EdgeMap.from_points(
        edge_map.edges[keep], edge_map.width, edge_map.height
    )
