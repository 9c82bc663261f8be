import numpy as np
import pytest
from sklearn.base import clone

from pami import (
    BlobScorer,
    ConstantScorer,
    SegmentExplainer,
    SegmenterConfig,
    WindowExplainer,
)
from tests.conftest import BLOB_COLOR, make_blob_image

SMALL_CONFIGS = [
    SegmenterConfig("slic", {"n_segments": 8, "compactness": 20}),
    SegmenterConfig("watershed", {"markers": 6, "compactness": 0.0001}),
]


class TestSklearnContract:
    def test_get_params_round_trip(self):
        est = WindowExplainer(radius=12, step=5)
        params = est.get_params()
        assert params["radius"] == 12 and params["step"] == 5
        est.set_params(radius=20)
        assert est.radius == 20

    def test_clone(self):
        est = SegmentExplainer(scorer=ConstantScorer(0.5), runs=1,
                               configs=SMALL_CONFIGS)
        cloned = clone(est)
        assert cloned.runs == 1
        assert cloned.configs == SMALL_CONFIGS

    def test_fit_returns_self_and_validates(self):
        est = WindowExplainer(scorer=ConstantScorer(0.5), radius=4, step=2)
        assert est.fit() is est
        bad = WindowExplainer(radius=2, step=10)  # step > 2 * radius
        with pytest.raises(ValueError):
            bad.fit()

    def test_missing_scorer_rejected(self, rng):
        est = WindowExplainer(radius=4, step=2)
        with pytest.raises(ValueError, match="scorer"):
            est.explain(rng.uniform(0, 1, (8, 8, 3)))


class TestTransform:
    def test_batch_of_arrays(self, rng):
        est = WindowExplainer(scorer=ConstantScorer(0.5), class_id=0,
                              radius=4, step=3)
        batch = rng.uniform(0, 1, (3, 10, 10, 3))
        maps = est.fit_transform(batch)
        assert maps.shape == (3, 10, 10)
        np.testing.assert_allclose(maps, 0.5, atol=1e-12)

    def test_uint8_input_accepted(self, rng):
        est = WindowExplainer(scorer=ConstantScorer(0.3), class_id=0,
                              radius=4, step=3)
        raw = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
        maps = est.transform(raw)
        assert maps.shape == (1, 8, 8)

    def test_segment_explainer_finds_blob(self, rng):
        img, (x0, y0, x1, y1) = make_blob_image(rng, size=32, blob=8)
        est = SegmentExplainer(
            scorer=BlobScorer(BLOB_COLOR, expected_area=64),
            class_id=0,
            configs=[
                SegmenterConfig("felzenszwalb", {"scale": 1.0, "sigma": 0.8, "min_size": 8}),
                SegmenterConfig("slic", {"n_segments": 12, "compactness": 20}),
            ],
            runs=2,
        )
        result = est.explain(img)
        x, y = result.map.argmax_pixel()
        assert x0 <= x <= x1 and y0 <= y <= y1
        assert result.strategy == "segment"

    def test_explain_class_override(self, rng):
        est = WindowExplainer(scorer=ConstantScorer(0.5, n_classes=3),
                              class_id=0, radius=4, step=3)
        result = est.explain(rng.uniform(0, 1, (8, 8, 3)), class_id=2)
        assert result.class_id == 2
