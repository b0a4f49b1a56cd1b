"""Detector pipeline: decode, fitness, validation, search, oracle."""

import numpy as np
import pytest

from emo_circles.detector import (
    CandidateEncoding,
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
from emo_circles.edges import EdgeMap
from emo_circles.emo import EmoParams
from emo_circles.geometry import Circle, rasterize_mca
from emo_circles.synth import ArcShape, CircleShape, SceneSpec, render_edge_map


def circle_map(x0, y0, r, w=200, h=200):
    pts = rasterize_mca(Circle(x0, y0, r), w, h)
    return EdgeMap.from_points(pts.points, w, h)


def indices_of(em, pts):
    """Row indices of the given (x, y) pairs in the edge list."""
    out = []
    for x, y in pts:
        rows = np.nonzero((em.edges[:, 0] == x) & (em.edges[:, 1] == y))[0]
        assert rows.size == 1
        out.append(float(rows[0]))
    return np.array(out)


class TestDecode:
    def test_rounding_collision_infeasible(self):
        em = EdgeMap.from_points([(0, 0), (10, 0), (0, 10)], 20, 20)
        enc = CandidateEncoding(np.array([0.4, 1.6, 2.1]))
        assert decode(enc, em) is None

    def test_needs_three_points(self):
        em = EdgeMap.from_points([(0, 0), (10, 0)], 20, 20)
        with pytest.raises(InsufficientEdgesError):
            decode(CandidateEncoding(np.zeros(3)), em)

    def test_collinear_infeasible(self):
        em = EdgeMap.from_points([(0, 0), (5, 5), (10, 10)], 20, 20)
        assert decode(CandidateEncoding(np.array([0.0, 1.0, 2.0])), em) is None

    def test_radius_filter(self):
        em = circle_map(100, 100, 40)
        n = em.n_points
        enc = CandidateEncoding(np.array([0.0, n / 3.0, 2.0 * n / 3.0]))
        assert decode(enc, em, r_min=50.0, r_max=80.0) is None
        c = decode(enc, em, r_min=5.0, r_max=100.0)
        assert c is not None and 5.0 <= c.r <= 100.0

    def test_rounding_containment(self):
        em = EdgeMap.from_points([(0, 0), (10, 0), (0, 10), (7, 7)], 20, 20)
        n = em.n_points
        for raw in ([-0.49, 0.0, n - 0.51], [0.2, 1.4, n - 1.0]):
            decode(CandidateEncoding(np.array(raw)), em)  # must not raise

    def test_decode_recovers_circle(self):
        em = circle_map(100, 100, 40)
        n = em.n_points
        enc = CandidateEncoding(np.array([0.0, n / 3.0, 2.0 * n / 3.0]))
        c = decode(enc, em)
        assert abs(c.x0 - 100) <= 1.0 and abs(c.y0 - 100) <= 1.0
        assert abs(c.r - 40) <= 1.0


class TestFitness:
    def test_infeasible_scores_one(self):
        em = EdgeMap.from_points([(0, 0), (10, 0), (0, 10)], 20, 20)
        enc = CandidateEncoding(np.array([0.0, 0.0, 1.0]))
        assert fitness(enc, em, DetectorConfig()) == 1.0

    def test_true_circle_scores_low(self):
        # cardinal points sit exactly on the ideal circle, so the candidate
        # re-rasterizes to the very same cell set
        em = circle_map(100, 100, 40)
        enc = CandidateEncoding(indices_of(em, [(100, 60), (60, 100), (140, 100)]))
        assert fitness(enc, em, DetectorConfig()) <= 0.05

    def test_deterministic(self):
        em = circle_map(100, 100, 30)
        enc = CandidateEncoding(np.array([1.0, 50.0, 120.0]))
        cfg = DetectorConfig()
        assert fitness(enc, em, cfg) == fitness(enc, em, cfg)


class TestValidate:
    def test_full_circumference(self):
        c = Circle(100, 100, 30)
        em = circle_map(100, 100, 30)
        ok, support = validate(c, em, DetectorConfig())
        assert ok
        assert support == rasterize_mca(c, 200, 200).total

    def test_half_arc_passes_half_gap(self):
        c = Circle(100, 100, 30)
        spec = SceneSpec(200, 200, (ArcShape(100, 100, 30, 0, 180),))
        em, _ = render_edge_map(spec)
        cfg = DetectorConfig(min_support_fraction=0.4,
                             continuity_max_gap_fraction=0.5)
        ok, support = validate(c, em, cfg)
        assert ok
        assert 0 < support < rasterize_mca(c, 200, 200).total

    def test_antipodal_quarters_rejected(self):
        c = Circle(100, 100, 30)
        spec = SceneSpec(200, 200, (ArcShape(100, 100, 30, 0, 90),
                                    ArcShape(100, 100, 30, 180, 270)))
        em, _ = render_edge_map(spec)
        cfg = DetectorConfig(min_support_fraction=0.4,
                             continuity_max_gap_fraction=0.2)
        ok, _ = validate(c, em, cfg)
        assert not ok

    def test_empty_map_invalid(self):
        em = EdgeMap.from_membership(np.zeros((50, 50), dtype=bool))
        ok, support = validate(Circle(25, 25, 10), em, DetectorConfig())
        assert (ok, support) == (False, 0)

    def test_border_clipped_circle_counts_hidden_arc_as_gap(self):
        # center on the left edge: only half the circumference is on canvas,
        # and even perfect support there is half of the full walk
        c = Circle(0, 50, 30)
        em = circle_map(0, 50, 30, w=100, h=100)
        ok, support = validate(c, em, DetectorConfig())
        assert not ok
        assert support == rasterize_mca(c, 100, 100).total
        relaxed = DetectorConfig(min_support_fraction=0.4,
                                 continuity_max_gap_fraction=0.5)
        ok, _ = validate(c, em, relaxed)
        assert ok

    def test_sparse_chord_rejected_by_default(self):
        em = EdgeMap.from_points([(10, 100), (100, 10), (190, 100)], 200, 200)
        c = Circle(100, 100, 90)
        ok, _ = validate(c, em, DetectorConfig())
        assert not ok


class TestDetectSingle:
    def test_clean_circle_recovered(self):
        em = circle_map(100, 100, 40)
        for seed in range(10):
            det = detect_single(em, DetectorConfig(emo=EmoParams(rng_seed=seed)))
            assert abs(det.circle.x0 - 100) <= 1.0
            assert abs(det.circle.y0 - 100) <= 1.0
            assert abs(det.circle.r - 40) <= 1.0
            assert det.validated
            assert 0.0 <= det.score <= 1.0

    def test_insufficient_edges(self):
        em = EdgeMap.from_membership(np.zeros((50, 50), dtype=bool))
        with pytest.raises(InsufficientEdgesError):
            detect_single(em, DetectorConfig())

    def test_all_infeasible_raises(self):
        # three collinear points: every triple is degenerate
        em = EdgeMap.from_points([(0, 0), (5, 5), (10, 10)], 20, 20)
        with pytest.raises(NoCircleFoundError):
            detect_single(em, DetectorConfig())

    def test_seed_determinism(self):
        em = circle_map(80, 120, 35)
        cfg = DetectorConfig(emo=EmoParams(rng_seed=7))
        assert detect_single(em, cfg) == detect_single(em, cfg)

    def test_radius_bounds_respected(self):
        em = circle_map(100, 100, 40)
        det = detect_single(em, DetectorConfig(emo=EmoParams(rng_seed=1)))
        cfg = DetectorConfig()
        assert cfg.r_min <= det.circle.r <= cfg.resolved_r_max(em)


class TestDetectMultiple:
    def _three_circle_map(self):
        spec = SceneSpec(200, 200, (CircleShape(50, 50, 25),
                                    CircleShape(145, 60, 30),
                                    CircleShape(90, 145, 28)))
        em, truth = render_edge_map(spec)
        return em, truth

    def test_three_disjoint_recovered(self):
        em, truth = self._three_circle_map()
        cfg = DetectorConfig(
            emo=EmoParams(population_size=20, max_iterations=150, rng_seed=0),
            fitness_threshold=0.3, max_circles=3,
        )
        dets = detect_multiple(em, cfg)
        assert len(dets) == 3
        for t in truth:
            assert any(
                abs(d.circle.x0 - t.x0) <= 1.0
                and abs(d.circle.y0 - t.y0) <= 1.0
                and abs(d.circle.r - t.r) <= 1.0
                for d in dets
            )

    def test_single_circle_no_spurious_extras(self):
        em = circle_map(100, 100, 40)
        cfg = DetectorConfig(emo=EmoParams(rng_seed=2), max_circles=3)
        dets = detect_multiple(em, cfg)
        assert len(dets) == 1
        assert dets[0].validated

    def test_base_case_matches_detect_single(self):
        em = circle_map(100, 100, 40)
        cfg = DetectorConfig(emo=EmoParams(rng_seed=5), max_circles=1)
        assert detect_multiple(em, cfg) == [detect_single(em, cfg)]

    def test_ascending_score_order(self):
        em, _ = self._three_circle_map()
        cfg = DetectorConfig(
            emo=EmoParams(population_size=20, max_iterations=150, rng_seed=1),
            fitness_threshold=0.3, max_circles=3,
        )
        dets = detect_multiple(em, cfg)
        scores = [d.score for d in dets]
        assert scores == sorted(scores)

    def test_determinism(self):
        em, _ = self._three_circle_map()
        cfg = DetectorConfig(
            emo=EmoParams(population_size=20, max_iterations=150, rng_seed=9),
            fitness_threshold=0.3, max_circles=3,
        )
        assert detect_multiple(em, cfg) == detect_multiple(em, cfg)

    def test_map_shrinks_between_detections(self):
        em, _ = self._three_circle_map()
        from emo_circles.edges import mask_circle
        cfg = DetectorConfig(
            emo=EmoParams(population_size=20, max_iterations=150, rng_seed=0),
            fitness_threshold=0.3, max_circles=3,
        )
        dets = detect_multiple(em, cfg)
        current = em
        for det in sorted(dets, key=lambda d: d.score):
            nxt = mask_circle(current, det.circle, cfg.mask_tolerance_px)
            assert nxt.n_points < current.n_points
            current = nxt


class TestBruteForceOracle:
    def _small_map(self, keep=30, seed=0):
        rng = np.random.default_rng(seed)
        pts = rasterize_mca(Circle(30, 30, 15), 64, 64).points
        idx = rng.choice(len(pts), size=keep, replace=False)
        return EdgeMap.from_points(pts[idx], 64, 64)

    def test_oracle_on_subsampled_circle(self):
        em = self._small_map()
        best = brute_force_oracle(em, DetectorConfig())
        assert abs(best.circle.x0 - 30) <= 1.5
        assert abs(best.circle.y0 - 30) <= 1.5
        assert abs(best.circle.r - 15) <= 1.5

    def test_cap_enforced(self):
        em = circle_map(100, 100, 40)
        with pytest.raises(OracleSizeError):
            brute_force_oracle(em, DetectorConfig(), size_cap=60)

    def test_three_points_single_triple(self):
        em = EdgeMap.from_points([(10, 30), (30, 10), (50, 30)], 64, 64)
        best = brute_force_oracle(em, DetectorConfig())
        expected = 1.0 - 3.0 / rasterize_mca(best.circle, 64, 64).total
        assert best.score == pytest.approx(expected, abs=1e-12)

    def test_all_infeasible(self):
        em = EdgeMap.from_points([(0, 0), (5, 5), (10, 10)], 20, 20)
        with pytest.raises(NoCircleFoundError):
            brute_force_oracle(em, DetectorConfig())

    def test_dominates_search(self):
        em = self._small_map(keep=35, seed=3)
        oracle = brute_force_oracle(em, DetectorConfig())
        for seed in range(5):
            det = detect_single(em, DetectorConfig(emo=EmoParams(rng_seed=seed)))
            assert oracle.score <= det.score + 1e-12

    def test_deterministic(self):
        em = self._small_map(keep=25, seed=4)
        cfg = DetectorConfig()
        assert brute_force_oracle(em, cfg) == brute_force_oracle(em, cfg)


class TestDetectorConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            DetectorConfig(r_min=0.0)
        with pytest.raises(ValueError):
            DetectorConfig(r_min=10.0, r_max=5.0)
        with pytest.raises(ValueError):
            DetectorConfig(continuity_max_gap_fraction=0.0)
        with pytest.raises(ValueError):
            DetectorConfig(max_circles=0)
        with pytest.raises(ValueError):
            DetectorConfig(min_support_fraction=1.5)

    def test_r_max_resolution(self):
        em = EdgeMap.from_points([(0, 0)], 300, 100)
        assert DetectorConfig().resolved_r_max(em) == 150.0
        assert DetectorConfig(r_max=42.0).resolved_r_max(em) == 42.0
