"""Shared fixtures: tiny rendered inputs for CLI and pipeline tests."""

import json

import pytest

from emo_circles.edges import save_edge_map, save_image
from emo_circles.synth import CircleShape, SceneSpec, render, render_edge_map


@pytest.fixture
def circle_png(tmp_path):
    """64x64 PNG with one clean circle (32, 32, r=15)."""
    spec = SceneSpec(64, 64, (CircleShape(32, 32, 15),))
    image, _ = render(spec)
    path = tmp_path / "circle.png"
    save_image(image, path)
    return path


@pytest.fixture
def circle_pbm(tmp_path):
    """64x64 PBM edge map with one clean circle (32, 32, r=15)."""
    spec = SceneSpec(64, 64, (CircleShape(32, 32, 15),))
    edge_map, _ = render_edge_map(spec)
    path = tmp_path / "circle.pbm"
    save_edge_map(edge_map, path)
    return path


@pytest.fixture
def tiny_pbm(tmp_path):
    """Sparse edge map (subsampled circle) small enough for the oracle."""
    spec = SceneSpec(64, 64, (CircleShape(32, 32, 12),))
    edge_map, _ = render_edge_map(spec)
    from emo_circles.edges import EdgeMap

    sub = EdgeMap.from_points(edge_map.edges[::2][:40], 64, 64)
    path = tmp_path / "tiny.pbm"
    save_edge_map(sub, path)
    return path


@pytest.fixture
def scenes_spec_file(tmp_path):
    data = {
        "scenes": [
            {
                "width": 64,
                "height": 64,
                "shapes": [{"type": "circle", "x0": 32, "y0": 32, "r": 12 + i}],
                "rng_seed": i,
            }
            for i in range(3)
        ]
    }
    path = tmp_path / "scenes.json"
    path.write_text(json.dumps(data))
    return path
