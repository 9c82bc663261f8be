import numpy as np
import pytest

from pami import (
    BlobScorer,
    ConstantScorer,
    ExplanationError,
    Image,
    LinearScorer,
    MaskStyle,
    ScoreVector,
    Scorer,
    ScoringError,
    SegmenterConfig,
    WindowConfig,
    explain,
    explain_segment,
    explain_segment_once,
    explain_window,
    felzenszwalb,
    segment,
    sweep_configs,
)
from tests.conftest import BLOB_COLOR, make_blob_image


def brute_force_window_reference(img_arr, background_arr, scorer, class_id,
                                 radius, step):
    """Independent straight-line sliding-window pipeline (circle windows)."""
    h, w = img_arr.shape[:2]
    centers = []
    for cy in range(0, h, step):
        for cx in range(0, w, step):
            centers.append((cx, cy))
    masks, scores = [], []
    for cx, cy in centers:
        bits = np.zeros((h, w), dtype=bool)
        for y in range(h):
            for x in range(w):
                if (x - cx) ** 2 + (y - cy) ** 2 <= radius ** 2:
                    bits[y, x] = True
        masked = np.empty_like(img_arr)
        for y in range(h):
            for x in range(w):
                masked[y, x] = img_arr[y, x] if bits[y, x] else background_arr[y, x]
        masks.append(bits)
        scores.append(float(scorer.score(Image(masked)).scores[class_id]))
    values = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            total, count = 0.0, 0
            for bits, score in zip(masks, scores):
                if bits[y, x]:
                    total += score
                    count += 1
            if count:
                values[y, x] = total / count
    return values


class TestExplainWindow:
    def test_constant_scorer_constant_map(self, rng):
        img = Image(rng.uniform(0, 1, (12, 12, 3)))
        out = explain_window(img, ConstantScorer(0.5), 0,
                             WindowConfig("circle", 4, 3))
        np.testing.assert_allclose(out.values, 0.5, atol=1e-12)

    def test_isolated_blob_lights_only_its_window(self):
        # rectangle windows at (0,0),(3,0),(0,3),(3,3) with half-extent 2;
        # the single target pixel (4,4) falls in the (3,3) window only
        arr = np.zeros((6, 6, 3))
        arr[4, 4] = BLOB_COLOR
        img = Image(arr)
        scorer = BlobScorer(BLOB_COLOR, expected_area=1)
        out = explain_window(img, scorer, 0, WindowConfig("rectangle", 2, 3),
                             MaskStyle("black"))
        window_bits = np.zeros((6, 6), dtype=bool)
        window_bits[1:6, 1:6] = True
        assert (out.values[window_bits] > 0).all() == (
            out.values[window_bits] > 0).any()
        positive = out.values > 0
        assert (positive == window_bits).all()

    @pytest.mark.parametrize("trial", range(5))
    def test_matches_brute_force_reference(self, trial):
        rng = np.random.default_rng(1000 + trial)
        img_arr = rng.uniform(0, 1, (16, 16, 3))
        img = Image(img_arr)
        scorer = LinearScorer(rng.uniform(0.1, 1, (16, 16, 3)))
        style = MaskStyle("blurred", 5, 2.0)
        out = explain_window(img, scorer, 0, WindowConfig("circle", 4, 2), style)
        from pami import make_background
        background = make_background(img, style)
        expected = brute_force_window_reference(
            img_arr, background.data, scorer, 0, radius=4, step=2)
        assert np.abs(out.values - expected).max() <= 1e-12

    def test_scoring_error_carries_window_center(self, rng):
        class Bomb(Scorer):
            def __init__(self):
                self.calls = 0

            def score(self, img):
                self.calls += 1
                if self.calls == 3:
                    raise ScoringError("boom", request_id=99)
                return ScoreVector(np.array([0.5]))

        img = Image(rng.uniform(0, 1, (8, 8, 3)))
        with pytest.raises(ScoringError) as info:
            explain_window(img, Bomb(), 0, WindowConfig("circle", 2, 4),
                           MaskStyle("black"))
        assert info.value.context["window_center"] == (0, 4)


class TestExplainSegmentOnce:
    def test_single_part_equals_full_image_score(self, rng):
        img = Image(np.full((10, 10, 3), 0.5))
        scorer = LinearScorer(rng.uniform(0.1, 1, (10, 10, 3)))
        cfg = SegmenterConfig("felzenszwalb", {"scale": 50, "sigma": 0.8, "min_size": 1})
        assert segment(img, cfg).num_parts == 1  # uniform image, one part
        out = explain_segment_once(img, img, scorer, 0, [cfg])
        expected = float(scorer.score(img).scores[0])
        np.testing.assert_allclose(out.values, expected, atol=1e-15)

    def test_duplicate_configs_average_to_single_map(self, rng):
        img = Image(rng.uniform(0, 1, (12, 12, 3)))
        scorer = BlobScorer(BLOB_COLOR)
        cfg = SegmenterConfig("slic", {"n_segments": 6, "compactness": 20})
        one = explain_segment_once(img, img, scorer, 0, [cfg])
        two = explain_segment_once(img, img, scorer, 0, [cfg, cfg])
        np.testing.assert_allclose(one.values, two.values, atol=1e-15)

    def test_isolated_blob_part_scores_one(self):
        arr = np.zeros((12, 12, 3))
        arr[:, :] = (0.1, 0.7, 0.7)
        arr[3:7, 3:7] = BLOB_COLOR
        img = Image(arr)
        cfg = SegmenterConfig("felzenszwalb", {"scale": 0.5, "sigma": 0.1, "min_size": 4})
        seg = segment(img, cfg)
        blob_label = seg.labels[4, 4]
        assert (seg.labels[3:7, 3:7] == blob_label).all()
        scorer = BlobScorer(BLOB_COLOR, expected_area=16)
        out = explain_segment_once(img, img, scorer, 0, [cfg], MaskStyle("black"))
        assert out.values[4, 4] == 1.0
        assert out.values[0, 0] == 0.0

    def test_failing_config_skipped_with_warning(self, rng):
        img = Image(rng.uniform(0, 1, (8, 8, 3)))
        good = SegmenterConfig("slic", {"n_segments": 4, "compactness": 20})
        # n_segments beyond the 8x8 pixel count makes this config fail
        bad = SegmenterConfig("slic", {"n_segments": 65, "compactness": 20})
        with pytest.warns(RuntimeWarning, match="failed"):
            out = explain_segment_once(img, img, ConstantScorer(0.4), 0, [good, bad])
        np.testing.assert_allclose(out.values, 0.4)

    def test_all_configs_failing_is_an_error(self, rng):
        img = Image(rng.uniform(0, 1, (4, 4, 3)))
        bad = SegmenterConfig("slic", {"n_segments": 17, "compactness": 20})
        with pytest.warns(RuntimeWarning):
            with pytest.raises(ExplanationError):
                explain_segment_once(img, img, ConstantScorer(0.4), 0, [bad])


class TestExplainSegment:
    def test_single_run_equals_once(self, rng):
        img = Image(rng.uniform(0, 1, (12, 12, 3)))
        scorer = BlobScorer(BLOB_COLOR)
        cfgs = [SegmenterConfig("watershed", {"markers": 4, "compactness": 0.0001})]
        a = explain_segment(img, scorer, 0, cfgs, runs=1)
        b = explain_segment_once(img, img, scorer, 0, cfgs)
        assert np.array_equal(a.values, b.values)

    def test_constant_first_run_short_circuits(self, rng):
        img = Image(rng.uniform(0, 1, (10, 10, 3)))
        cfgs = [SegmenterConfig("slic", {"n_segments": 4, "compactness": 20})]
        with pytest.warns(RuntimeWarning, match="constant"):
            out = explain_segment(img, ConstantScorer(0.6), 0, cfgs, runs=2)
        np.testing.assert_allclose(out.values, 0.6)

    def test_second_run_keeps_blob_argmax(self):
        rng = np.random.default_rng(7)
        cfgs = [
            SegmenterConfig("felzenszwalb", {"scale": 1.0, "sigma": 0.8, "min_size": 8}),
            SegmenterConfig("slic", {"n_segments": 12, "compactness": 20}),
            SegmenterConfig("watershed", {"markers": 9, "compactness": 0.0001}),
        ]
        hits = 0
        for _ in range(5):
            img, (x0, y0, x1, y1) = make_blob_image(rng, size=32, blob=8)
            scorer = BlobScorer(BLOB_COLOR, expected_area=64)
            out = explain_segment(img, scorer, 0, cfgs, runs=2)
            x, y = out.argmax_pixel()
            hits += int(x0 <= x <= x1 and y0 <= y <= y1)
        assert hits == 5

    def test_bad_runs_rejected(self, rng):
        img = Image(rng.uniform(0, 1, (6, 6, 3)))
        with pytest.raises(ValueError):
            explain_segment(img, ConstantScorer(0.5), 0, None, runs=3)


class TestExplainDispatch:
    def test_window_call_accounting(self, rng):
        img = Image(rng.uniform(0, 1, (20, 20, 3)))
        result = explain(img, ConstantScorer(0.5), strategy="window", class_id=0,
                         window=WindowConfig("circle", 4, 4))
        assert result.scorer_calls == len(range(0, 20, 4)) ** 2
        assert result.strategy == "window"

    def test_segment_call_accounting_matches_part_counts(self, rng):
        img = Image(rng.uniform(0, 1, (16, 16, 3)))
        cfgs = [
            SegmenterConfig("felzenszwalb", {"scale": 1.0, "sigma": 0.5, "min_size": 4}),
            SegmenterConfig("slic", {"n_segments": 5, "compactness": 20}),
            SegmenterConfig("watershed", {"markers": 4, "compactness": 0.0001}),
        ]
        scorer = BlobScorer((0.9, 0.2, 0.2))
        run1_parts = sum(segment(img, cfg).num_parts for cfg in cfgs)
        first = explain(img, scorer, strategy="segment", class_id=0,
                        configs=cfgs, runs=1)
        assert first.scorer_calls == run1_parts
        # second-run part count from re-segmenting the normalized run-1 map
        values = first.map.values
        norm = (values - values.min()) / (values.max() - values.min())
        seg_input = Image(np.repeat(norm[:, :, np.newaxis], 3, axis=2))
        run2_parts = sum(segment(seg_input, cfg).num_parts for cfg in cfgs)
        both = explain(img, scorer, strategy="segment", class_id=0,
                       configs=cfgs, runs=2)
        assert both.scorer_calls == run1_parts + run2_parts

    def test_defaults_to_argmax_class(self):
        class TwoClass(Scorer):
            def score(self, img):
                return ScoreVector(np.array([0.2, 0.8]))

        img = Image(np.full((8, 8, 3), 0.5))
        result = explain(img, TwoClass(), strategy="window", class_id=None,
                         window=WindowConfig("circle", 3, 3))
        assert result.class_id == 1

    def test_window_defaults_are_standard(self, rng):
        img = Image(rng.uniform(0, 1, (8, 8, 3)))
        # only verify the dispatch wiring: defaults come from WindowConfig()
        assert WindowConfig().radius == 40 and WindowConfig().step == 6

    def test_segment_defaults_use_full_sweep(self):
        assert len(sweep_configs()) == 17

    def test_unknown_strategy_rejected(self, rng):
        img = Image(rng.uniform(0, 1, (4, 4, 3)))
        with pytest.raises(ValueError):
            explain(img, ConstantScorer(0.5), strategy="mosaic")

    def test_config_order_does_not_change_map(self, rng):
        img = Image(rng.uniform(0, 1, (16, 16, 3)))
        cfgs = [
            SegmenterConfig("slic", {"n_segments": 5, "compactness": 20}),
            SegmenterConfig("watershed", {"markers": 4, "compactness": 0.0001}),
            SegmenterConfig("felzenszwalb", {"scale": 1.0, "sigma": 0.5, "min_size": 4}),
        ]
        scorer = BlobScorer((0.9, 0.2, 0.2))
        a = explain(img, scorer, strategy="segment", class_id=0, configs=cfgs, runs=1)
        b = explain(img, scorer, strategy="segment", class_id=0,
                    configs=cfgs[::-1], runs=1)
        np.testing.assert_allclose(a.map.values, b.map.values, atol=1e-12)

    def test_dedup_reduces_distinct_inputs(self, rng):
        img = Image(rng.uniform(0, 1, (12, 12, 3)))
        cfg = SegmenterConfig("slic", {"n_segments": 4, "compactness": 20})
        result = explain(img, ConstantScorer(0.5), strategy="segment", class_id=0,
                         configs=[cfg, cfg], runs=1)
        assert result.scorer_calls == 2 * result.distinct_inputs

    def test_class_out_of_range_rejected(self, rng):
        img = Image(rng.uniform(0, 1, (6, 6, 3)))
        with pytest.raises(ValueError, match="out of range"):
            explain(img, ConstantScorer(0.5, n_classes=2), strategy="window",
                    class_id=5, window=WindowConfig("circle", 3, 3))


def test_felzenszwalb_isolates_solid_blob():
    # keep a direct regression for the construction the engine tests rely on
    arr = np.zeros((12, 12, 3))
    arr[:, :] = (0.1, 0.7, 0.7)
    arr[3:7, 3:7] = BLOB_COLOR
    seg = felzenszwalb(Image(arr), 0.5, 0.1, 4)
    labels_in_blob = np.unique(seg.labels[3:7, 3:7])
    assert len(labels_in_blob) == 1
    assert (seg.labels == labels_in_blob[0]).sum() == 16
