"""Command-line front end: detect, generate, oracle.

Reports are JSON on stdout (schema shipped as report_schema.json). Exit
codes: 0 success, 2 usage or config/spec parse error, 3 unreadable or
malformed input file, 4 no circle found, 5 internal error, 6 oracle size cap
exceeded.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .detector import (
    DetectedCircle,
    DetectorConfig,
    InsufficientEdgesError,
    NoCircleFoundError,
    OracleSizeError,
    brute_force_oracle,
    detect_multiple,
)
from .edges import (
    CannyParams,
    EdgeMap,
    EdgeMapFormatError,
    canny,
    load_edge_map,
    load_image,
    save_edge_map,
    save_image,
)
from .emo import EmoParams
from .geometry import rasterize_mca
from .synth import SceneSpecError, render, render_edge_map, scene_from_dict, scene_to_dict

__all__ = [
    "RunReport",
    "ConfigError",
    "main",
    "cmd_detect",
    "cmd_generate",
    "cmd_oracle",
    "build_parser",
]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NO_CIRCLE = 4
EXIT_INTERNAL = 5
EXIT_ORACLE_CAP = 6

ENV_SEED = "EMO_CIRCLES_SEED"

_CONFIG_DEFAULTS = {
    "edges": False,
    "pop": 10,
    "iters": 20,
    "ls_iters": 2,
    "ls_step": 3.0,
    "seed": 0,
    "rmin": 5.0,
    "rmax": None,
    "mask_tol": 2.0,
    "min_support": 0.6,
    "max_gap_fraction": 0.5,
    "fitness_threshold": None,
    "max_circles": 1,
    "canny": {
        "gaussian_sigma": 1.4,
        "low_threshold": 0.1,
        "high_threshold": 0.3,
    },
}


class ConfigError(ValueError):
    """Bad config file or inconsistent option values."""


class RunReport:
    """Result of one detect/oracle run over one input."""

    def __init__(self, input_path: str, config: dict, circles: list[DetectedCircle],
                 duration_ms: float):
        self.input_path = input_path
        self.config = config
        self.circles = circles
        self.duration_ms = duration_ms

    def to_dict(self) -> dict:
        return {
            "input": self.input_path,
            "config": self.config,
            "circles": [
                {
                    "x0": round(det.circle.x0, 3),
                    "y0": round(det.circle.y0, 3),
                    "r": round(det.circle.r, 3),
                    "score": round(det.score, 6),
                    "validated": det.validated,
                    "support": det.support_points,
                    "iterations": det.iterations,
                }
                for det in self.circles
            ],
            "duration_ms": round(self.duration_ms, 3),
        }

    def to_json(self, compact: bool = False) -> str:
        data = self.to_dict()
        if compact:
            return json.dumps(data, sort_keys=True, separators=(",", ":"))
        return json.dumps(data, sort_keys=True, indent=2)


def _env_seed() -> Optional[int]:
    raw = os.environ.get(ENV_SEED)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{ENV_SEED} must be an integer, got {raw!r}") from exc


def _load_config_file(path: str) -> dict:
    # a bad --config value is a usage problem, not an unreadable input image
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = set(data) - set(_CONFIG_DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    if "canny" in data:
        if not isinstance(data["canny"], dict):
            raise ConfigError(f"{path}: canny must be an object")
        bad = set(data["canny"]) - set(_CONFIG_DEFAULTS["canny"])
        if bad:
            raise ConfigError(f"{path}: unknown canny keys {sorted(bad)}")
    return data


def resolve_config(args: argparse.Namespace) -> dict:
    """Layer the settings: defaults, then EMO_CIRCLES_SEED, then the config
    file, then explicit flags. Returns the flat echo dict that fully
    reproduces the run."""
    cfg = json.loads(json.dumps(_CONFIG_DEFAULTS))  # deep copy
    env = _env_seed()
    if env is not None:
        cfg["seed"] = env
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        canny_cfg = file_cfg.pop("canny", None)
        cfg.update(file_cfg)
        if canny_cfg:
            cfg["canny"].update(canny_cfg)
    flag_map = {
        "pop": "pop",
        "iters": "iters",
        "ls_iters": "ls_iters",
        "ls_step": "ls_step",
        "seed": "seed",
        "rmin": "rmin",
        "rmax": "rmax",
        "mask_tol": "mask_tol",
        "max_circles": "max_circles",
    }
    for key, attr in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "edges", False):
        cfg["edges"] = True
    return cfg


def _build_detector_config(cfg: dict) -> DetectorConfig:
    try:
        emo = EmoParams(
            population_size=int(cfg["pop"]),
            max_iterations=int(cfg["iters"]),
            local_search_iters=int(cfg["ls_iters"]),
            local_search_step=float(cfg["ls_step"]),
            rng_seed=int(cfg["seed"]),
        )
        return DetectorConfig(
            emo=emo,
            r_min=float(cfg["rmin"]),
            r_max=None if cfg["rmax"] is None else float(cfg["rmax"]),
            fitness_threshold=(
                None if cfg["fitness_threshold"] is None
                else float(cfg["fitness_threshold"])
            ),
            mask_tolerance_px=float(cfg["mask_tol"]),
            min_support_fraction=float(cfg["min_support"]),
            continuity_max_gap_fraction=float(cfg["max_gap_fraction"]),
            max_circles=int(cfg["max_circles"]),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build_canny_params(cfg: dict) -> CannyParams:
    c = cfg["canny"]
    try:
        return CannyParams(
            gaussian_sigma=float(c["gaussian_sigma"]),
            low_threshold=float(c["low_threshold"]),
            high_threshold=float(c["high_threshold"]),
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad canny settings: {exc}") from exc


def _load_input(path: str, cfg: dict) -> tuple[EdgeMap, Optional[np.ndarray]]:
    """Returns the edge map plus the grayscale pixels for annotation."""
    if cfg["edges"]:
        edge_map = load_edge_map(path)
        gray = np.where(edge_map.membership, 255, 0).astype(np.uint8)
        return edge_map, gray
    image = load_image(path)
    return canny(image, _build_canny_params(cfg)), np.asarray(image.pixels)


def _detect_one(path: str, cfg: dict) -> RunReport:
    config = _build_detector_config(cfg)
    edge_map, _ = _load_input(path, cfg)
    start = time.perf_counter()
    try:
        circles = detect_multiple(edge_map, config)
    except InsufficientEdgesError:
        circles = []
    duration_ms = (time.perf_counter() - start) * 1000.0
    return RunReport(path, cfg, circles, duration_ms)


def _annotate(gray: np.ndarray, circles: list[DetectedCircle], out_path: str) -> None:
    """Stroke each detected circle on an RGB copy and cross its center.

    The stroke is the same circumference raster the objective scores, so the
    overlay shows exactly which pixels were matched.
    """
    from PIL import Image

    h, w = gray.shape
    rgb = np.stack([gray] * 3, axis=-1)
    for det in circles:
        pts = rasterize_mca(det.circle, w, h).points
        rgb[pts[:, 1], pts[:, 0]] = (255, 64, 64)
        cx = int(np.rint(det.circle.x0))
        cy = int(np.rint(det.circle.y0))
        for dx, dy in [(0, 0), (1, 0), (-1, 0), (2, 0), (-2, 0),
                       (0, 1), (0, -1), (0, 2), (0, -2)]:
            x, y = cx + dx, cy + dy
            if 0 <= x < w and 0 <= y < h:
                rgb[y, x] = (64, 255, 64)
    Image.fromarray(rgb).save(out_path)


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if args.annotate and len(args.inputs) != 1:
        print("error: --annotate requires exactly one input", file=sys.stderr)
        return EXIT_USAGE
    _build_detector_config(cfg)  # fail fast on bad values
    _build_canny_params(cfg)

    reports: list[RunReport] = []
    jobs = max(1, args.jobs or 1)
    if jobs > 1 and len(args.inputs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_detect_one, args.inputs,
                                    [cfg] * len(args.inputs)))
    else:
        reports = [_detect_one(path, cfg) for path in args.inputs]

    compact = len(reports) > 1
    out_text = "\n".join(r.to_json(compact=compact) for r in reports)
    if args.output:
        Path(args.output).write_text(out_text + "\n")
    else:
        print(out_text)

    if args.annotate:
        _, gray = _load_input(args.inputs[0], cfg)
        _annotate(gray, reports[0].circles, args.annotate)

    return EXIT_OK if all(r.circles for r in reports) else EXIT_NO_CIRCLE


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.spec).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{args.spec}: invalid JSON at line {exc.lineno} column {exc.colno}"
        ) from exc
    if not isinstance(data, dict) or not isinstance(data.get("scenes"), list):
        raise ConfigError(f"{args.spec}: expected an object with a 'scenes' list")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for idx, raw in enumerate(data["scenes"]):
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.spec}: scenes[{idx}] must be an object")
        try:
            spec = scene_from_dict(raw)
        except SceneSpecError as exc:
            raise ConfigError(f"{args.spec}: scenes[{idx}]: {exc}") from exc
        if args.edges:
            name = f"scene_{idx:03d}.pbm"
            edge_map, truth = render_edge_map(spec)
            save_edge_map(edge_map, out_dir / name)
        else:
            name = f"scene_{idx:03d}.png"
            image, truth = render(spec)
            save_image(image, out_dir / name)
        manifest.append({
            "file": name,
            "circles": [{"x0": c.x0, "y0": c.y0, "r": c.r} for c in truth],
            "scene": scene_to_dict(spec),
        })
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps({"images": manifest}, sort_keys=True, indent=2) + "\n")
    print(f"wrote {len(manifest)} scene(s) and {manifest_path}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    cfg["edges"] = True
    config = _build_detector_config(cfg)
    edge_map = load_edge_map(args.input)
    start = time.perf_counter()
    try:
        best = brute_force_oracle(edge_map, config, size_cap=args.cap)
        circles = [best]
    except (NoCircleFoundError, InsufficientEdgesError):
        circles = []
    duration_ms = (time.perf_counter() - start) * 1000.0
    report = RunReport(args.input, {**cfg, "size_cap": args.cap}, circles, duration_ms)
    text = report.to_json()
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if circles else EXIT_NO_CIRCLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emo-circles",
        description="Detect circles in raster images via an "
                    "electromagnetism-like search over edge-point triples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="detect circles in images or edge maps")
    detect.add_argument("inputs", nargs="+", help="PNG/PGM images, or edge maps with --edges")
    detect.add_argument("--edges", action="store_true",
                        help="inputs are edge maps (PBM, or PNG/PGM where nonzero = edge)")
    detect.add_argument("--max-circles", dest="max_circles", type=int, default=None)
    detect.add_argument("--seed", type=int, default=None)
    detect.add_argument("--iters", type=int, default=None, help="optimizer iterations per circle")
    detect.add_argument("--pop", type=int, default=None, help="population size")
    detect.add_argument("--ls-iters", dest="ls_iters", type=int, default=None,
                        help="local-search trials per dimension + 1")
    detect.add_argument("--ls-step", dest="ls_step", type=float, default=None,
                        help="local-search step length")
    detect.add_argument("--rmin", type=float, default=None)
    detect.add_argument("--rmax", type=float, default=None)
    detect.add_argument("--mask-tol", dest="mask_tol", type=float, default=None)
    detect.add_argument("--annotate", metavar="PATH", default=None,
                        help="write an annotated PNG overlay")
    detect.add_argument("--config", metavar="PATH", default=None, help="JSON config file")
    detect.add_argument("--jobs", type=int, default=None,
                        help="parallel workers across input files")
    detect.add_argument("--output", metavar="PATH", default=None,
                        help="write the JSON report here instead of stdout")
    detect.set_defaults(func=cmd_detect)

    generate = sub.add_parser("generate", help="render synthetic scenes with ground truth")
    generate.add_argument("spec", help="JSON file with a 'scenes' list")
    generate.add_argument("out_dir", help="output directory")
    generate.add_argument("--edges", action="store_true",
                          help="write PBM edge maps instead of PNG images")
    generate.set_defaults(func=cmd_generate)

    oracle = sub.add_parser("oracle", help="exhaustive optimum over an edge map")
    oracle.add_argument("input", help="edge map (PBM, or PNG/PGM where nonzero = edge)")
    oracle.add_argument("--cap", type=int, default=60,
                        help="max edge points for exhaustive enumeration")
    oracle.add_argument("--rmin", type=float, default=None)
    oracle.add_argument("--rmax", type=float, default=None)
    oracle.add_argument("--seed", type=int, default=None)
    oracle.add_argument("--config", metavar="PATH", default=None)
    oracle.add_argument("--output", metavar="PATH", default=None)
    oracle.set_defaults(func=cmd_oracle)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_CAP
    except (EdgeMapFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
