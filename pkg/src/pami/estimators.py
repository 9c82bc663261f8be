"""Estimator-style wrappers around the explanation engine.

Both explainers are stateless transformers: ``fit`` only validates the
configuration, ``transform`` maps a batch of images to a stack of importance
maps, and hyperparameters round-trip through ``get_params``/``set_params``
so they compose with pipelines and parameter search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import engine
from .masking import DEFAULT_KERNEL_SIZE, DEFAULT_SIGMA, MaskStyle
from .types import WindowConfig
from .validation import as_image, iter_images

__all__ = ["WindowExplainer", "SegmentExplainer"]


class _BaseExplainer(BaseEstimator, TransformerMixin):
    def fit(self, X=None, y=None):
        self._resolved()
        return self

    def transform(self, X) -> np.ndarray:
        """Importance maps for a batch of images, stacked as (N, H, W)."""
        return np.stack([self.explain(img).map.values for img in iter_images(X)])

    def explain(self, image, class_id=None) -> engine.ExplainResult:
        raise NotImplementedError

    def _scorer(self):
        if self.scorer is None:
            raise ValueError("a scorer must be configured before explaining")
        return self.scorer

    def _style(self) -> MaskStyle:
        return MaskStyle(self.mask, self.kernel_size, self.sigma)

    def _resolved(self):
        self._style()
        return self


class WindowExplainer(_BaseExplainer):
    """Sliding-window explainer with the standard circular-window defaults."""

    def __init__(self, scorer=None, class_id=None, window_shape="circle",
                 radius=40, step=6, mask="blurred",
                 kernel_size=DEFAULT_KERNEL_SIZE, sigma=DEFAULT_SIGMA,
                 max_in_flight=8):
        self.scorer = scorer
        self.class_id = class_id
        self.window_shape = window_shape
        self.radius = radius
        self.step = step
        self.mask = mask
        self.kernel_size = kernel_size
        self.sigma = sigma
        self.max_in_flight = max_in_flight

    def _resolved(self):
        self._window()
        return super()._resolved()

    def _window(self) -> WindowConfig:
        return WindowConfig(self.window_shape, self.radius, self.step)

    def explain(self, image, class_id=None) -> engine.ExplainResult:
        return engine.explain(
            as_image(image),
            self._scorer(),
            strategy="window",
            class_id=self.class_id if class_id is None else class_id,
            window=self._window(),
            style=self._style(),
            max_in_flight=self.max_in_flight,
        )


class SegmentExplainer(_BaseExplainer):
    """Pre-segmentation explainer; defaults to the 17-config sweep, two runs."""

    def __init__(self, scorer=None, class_id=None, configs=None, runs=2,
                 include_seeds=False, mask="blurred",
                 kernel_size=DEFAULT_KERNEL_SIZE, sigma=DEFAULT_SIGMA,
                 max_in_flight=8):
        self.scorer = scorer
        self.class_id = class_id
        self.configs = configs
        self.runs = runs
        self.include_seeds = include_seeds
        self.mask = mask
        self.kernel_size = kernel_size
        self.sigma = sigma
        self.max_in_flight = max_in_flight

    def explain(self, image, class_id=None) -> engine.ExplainResult:
        return engine.explain(
            as_image(image),
            self._scorer(),
            strategy="segment",
            class_id=self.class_id if class_id is None else class_id,
            configs=self.configs,
            style=self._style(),
            runs=self.runs,
            include_seeds=self.include_seeds,
            max_in_flight=self.max_in_flight,
        )
