"""Circle detection on edge maps via electromagnetism-like optimization.

Candidate circles are triples of edge-point indices scored by how much of
their rasterized circumference lands on edge pixels; a charge/force-driven
population search finds the best-matching triples.
"""

from .detector import (
    CandidateEncoding,
    DetectedCircle,
    DetectorConfig,
    InsufficientEdgesError,
    NoCircleFoundError,
    OracleSizeError,
    brute_force_oracle,
    decode,
    detect_multiple,
    detect_single,
    fitness,
    validate,
)
from .edges import (
    CannyParams,
    EdgeMap,
    EdgeMapFormatError,
    GrayImage,
    canny,
    load_edge_map,
    load_image,
    mask_circle,
    save_edge_map,
    save_image,
)
from .emo import (
    Bounds,
    EmoParams,
    LocalSearchMode,
    ObjectiveEvaluationError,
    OptimizationResult,
    Particle,
    optimize,
)
from .geometry import (
    Circle,
    CollinearPointsError,
    TestPointSet,
    circle_from_three_points,
    objective_j,
    rasterize_mca,
    rasterize_uniform,
)
from .synth import (
    ArcShape,
    CircleShape,
    EllipseShape,
    LineShape,
    RectangleShape,
    SceneSpec,
    SceneSpecError,
    TriangleShape,
    render,
    render_edge_map,
    scene_from_dict,
    scene_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # emo
    "Bounds", "Particle", "EmoParams", "LocalSearchMode",
    "OptimizationResult", "ObjectiveEvaluationError", "optimize",
    # geometry
    "Circle", "TestPointSet", "CollinearPointsError",
    "circle_from_three_points", "rasterize_mca", "rasterize_uniform",
    "objective_j",
    # edges
    "GrayImage", "EdgeMap", "CannyParams", "EdgeMapFormatError",
    "canny", "load_image", "save_image", "load_edge_map", "save_edge_map",
    "mask_circle",
    # detector
    "CandidateEncoding", "DetectorConfig", "DetectedCircle",
    "InsufficientEdgesError", "NoCircleFoundError", "OracleSizeError",
    "decode", "fitness", "detect_single", "detect_multiple", "validate",
    "brute_force_oracle",
    # synth
    "SceneSpec", "SceneSpecError", "CircleShape", "ArcShape", "EllipseShape",
    "RectangleShape", "LineShape", "TriangleShape",
    "render", "render_edge_map", "scene_from_dict", "scene_to_dict",
]
