"""Orchestration of both partition strategies.

Build parts, composite each one over the masked background, score every
masked input at the explained class, and aggregate the scores into an
importance map. The segment strategy averages maps over many segmenter
configs and can re-segment its own averaged map in a second run.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .masking import MaskStyle, compose_masked, make_background
from .scorers import Scorer, ScoringError
from .segmentation import SegmenterConfig, segment, sweep_configs
from .types import Image, ImportanceMap, WindowConfig, argmax_class
from .windows import aggregate_window, window_centers, window_mask

__all__ = [
    "ExplanationError",
    "ExplainResult",
    "explain",
    "explain_window",
    "explain_segment_once",
    "explain_segment",
]


class ExplanationError(RuntimeError):
    """No importance map could be produced (e.g. every segmenter failed)."""


@dataclass
class ExplainResult:
    """An importance map plus the accounting metadata of its computation.

    ``scorer_calls`` counts scoring requests for masked inputs (one per
    part, summed over configs and runs); cache hits for duplicate masked
    inputs are included, and the call that infers the explained class is
    not. ``distinct_inputs`` is the number of unique inputs actually sent.
    """

    map: ImportanceMap
    class_id: int
    strategy: str
    scorer_calls: int
    distinct_inputs: int
    config_digest: str

    def metadata(self) -> dict:
        return {
            "class": self.class_id,
            "strategy": self.strategy,
            "scorer_calls": self.scorer_calls,
            "distinct_inputs": self.distinct_inputs,
            "config_digest": self.config_digest,
        }


class _ScoreSession:
    """Chunked batch scoring with request counting and input deduplication.

    Deduplication is sound because scorers are required to be deterministic;
    the logical request count is unaffected by cache hits.
    """

    def __init__(self, scorer: Scorer, max_in_flight: int = 8):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.scorer = scorer
        self.max_in_flight = max_in_flight
        self.calls = 0
        self.sent = 0
        self._cache: dict[bytes, np.ndarray] = {}

    def class_scores(self, images, class_id, contexts=None, dedup=True):
        """Scores of ``class_id`` for each image, positionally aligned."""
        images = list(images)
        self.calls += len(images)
        if dedup:
            keys = [hashlib.blake2b(im.data.tobytes(), digest_size=16).digest()
                    for im in images]
            todo, todo_keys, seen = [], [], set()
            for i, key in enumerate(keys):
                if key not in self._cache and key not in seen:
                    seen.add(key)
                    todo.append(i)
                    todo_keys.append(key)
            vectors = self._score_batch([images[i] for i in todo],
                                        [contexts[i] if contexts else None for i in todo])
            for key, vec in zip(todo_keys, vectors):
                self._cache[key] = vec.scores
            return [self._class_score(self._cache[key], class_id) for key in keys]
        vectors = self._score_batch(images, contexts)
        return [self._class_score(v.scores, class_id) for v in vectors]

    def _score_batch(self, images, contexts):
        if not images:
            return []
        self.sent += len(images)
        try:
            return self.scorer.score_batch(images, self.max_in_flight)
        except ScoringError as err:
            if contexts and err.index is not None and contexts[err.index] is not None:
                err.context.update(contexts[err.index])
            raise

    @staticmethod
    def _class_score(scores: np.ndarray, class_id: int) -> float:
        if not 0 <= class_id < scores.size:
            raise ValueError(
                f"class {class_id} out of range for a {scores.size}-class scorer")
        return float(scores[class_id])

    @property
    def distinct_inputs(self) -> int:
        return len(self._cache) if self._cache else self.sent


def _chunks(seq, size):
    for start in range(0, len(seq), size):
        yield start, seq[start:start + size]


def explain_window(img: Image, scorer: Scorer, class_id: int,
                   wcfg: WindowConfig | None = None,
                   style: MaskStyle | None = None,
                   max_in_flight: int = 8,
                   _session: _ScoreSession | None = None) -> ImportanceMap:
    """Sliding-window strategy: one masked input per window center."""
    wcfg = wcfg or WindowConfig()
    style = style or MaskStyle()
    session = _session or _ScoreSession(scorer, max_in_flight)
    background = make_background(img, style)
    centers = window_centers(img.width, img.height, wcfg.step)
    masks = [window_mask(c, wcfg, img.width, img.height) for c in centers]
    scores: list[float] = []
    chunk_size = max(session.max_in_flight, 16)
    for start, chunk in _chunks(masks, chunk_size):
        masked = [compose_masked(img, background, m) for m in chunk]
        contexts = [{"window_center": centers[start + i]} for i in range(len(chunk))]
        scores.extend(session.class_scores(masked, class_id, contexts, dedup=False))
    return aggregate_window(masks, scores)


def explain_segment_once(input_img: Image, source_img: Image, scorer: Scorer,
                         class_id: int,
                         cfgs: list[SegmenterConfig] | None = None,
                         style: MaskStyle | None = None,
                         max_in_flight: int = 8,
                         _session: _ScoreSession | None = None) -> ImportanceMap:
    """One pre-segmentation pass: segment ``input_img``, mask ``source_img``.

    Each config yields one map (every pixel of part j gets that part's
    score); the result is the per-pixel mean over configs. A failing
    segmenter is skipped with a warning; if every config fails the
    explanation is an error.
    """
    if (input_img.height, input_img.width) != (source_img.height, source_img.width):
        raise ValueError("segmentation input and masking source dimensions must match")
    cfgs = sweep_configs() if cfgs is None else list(cfgs)
    if not cfgs:
        raise ValueError("at least one segmenter config is required")
    style = style or MaskStyle()
    session = _session or _ScoreSession(scorer, max_in_flight)
    background = make_background(source_img, style)
    maps = []
    chunk_size = max(session.max_in_flight, 16)
    for cfg in cfgs:
        try:
            seg = segment(input_img, cfg)
        except Exception as err:  # noqa: BLE001 - degrade to the remaining configs
            warnings.warn(f"segmenter {cfg.describe()} failed: {err}",
                          RuntimeWarning, stacklevel=2)
            continue
        labels = list(range(seg.num_parts))
        part_scores: list[float] = []
        for start, chunk in _chunks(labels, chunk_size):
            masked = [compose_masked(source_img, background, seg.part_mask(j))
                      for j in chunk]
            contexts = [{"config": cfg.describe(), "part": j} for j in chunk]
            part_scores.extend(session.class_scores(masked, class_id, contexts))
        maps.append(np.asarray(part_scores)[seg.labels])
    if not maps:
        raise ExplanationError("every segmenter config failed")
    return ImportanceMap(np.mean(maps, axis=0))


def explain_segment(img: Image, scorer: Scorer, class_id: int,
                    cfgs: list[SegmenterConfig] | None = None,
                    style: MaskStyle | None = None,
                    runs: int = 2,
                    max_in_flight: int = 8,
                    _session: _ScoreSession | None = None) -> ImportanceMap:
    """Pre-segmentation strategy with an optional second run.

    The second run re-segments the min-max-normalized first-run map
    (replicated to three channels) while still masking the original image.
    A constant first-run map makes re-segmentation meaningless; it is
    returned unchanged with a warning.
    """
    if runs not in (1, 2):
        raise ValueError("runs must be 1 or 2")
    session = _session or _ScoreSession(scorer, max_in_flight)
    first = explain_segment_once(img, img, scorer, class_id, cfgs, style,
                                 max_in_flight, _session=session)
    if runs == 1:
        return first
    lo = float(first.values.min())
    hi = float(first.values.max())
    if hi == lo:
        warnings.warn("first-run importance map is constant; skipping second run",
                      RuntimeWarning, stacklevel=2)
        return first
    norm = (first.values - lo) / (hi - lo)
    seg_input = Image(np.repeat(norm[:, :, np.newaxis], 3, axis=2))
    return explain_segment_once(seg_input, img, scorer, class_id, cfgs, style,
                                max_in_flight, _session=session)


def _config_digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def explain(img: Image, scorer: Scorer, strategy: str = "segment",
            class_id: int | None = None,
            window: WindowConfig | None = None,
            configs: list[SegmenterConfig] | None = None,
            style: MaskStyle | None = None,
            runs: int = 2,
            include_seeds: bool = False,
            max_in_flight: int = 8) -> ExplainResult:
    """Explain one prediction; dispatches to the chosen partition strategy.

    When ``class_id`` is omitted the full image is scored once and the
    top-scoring class is explained (that extra call is not part of the
    reported ``scorer_calls``).
    """
    if strategy not in ("window", "segment"):
        raise ValueError(f"unknown strategy {strategy!r}")
    style = style or MaskStyle()
    if class_id is None:
        class_id = argmax_class(scorer.score(img))
    session = _ScoreSession(scorer, max_in_flight)
    if strategy == "window":
        wcfg = window or WindowConfig()
        imap = explain_window(img, scorer, class_id, wcfg, style,
                              _session=session)
        digest = _config_digest({
            "strategy": "window",
            "window": [wcfg.shape, wcfg.radius, wcfg.step],
            "mask": [style.variant, style.kernel_size, style.sigma],
        })
    else:
        cfgs = sweep_configs(include_seeds) if configs is None else list(configs)
        imap = explain_segment(img, scorer, class_id, cfgs, style, runs,
                               _session=session)
        digest = _config_digest({
            "strategy": "segment",
            "configs": [c.describe() for c in cfgs],
            "mask": [style.variant, style.kernel_size, style.sigma],
            "runs": runs,
        })
    return ExplainResult(
        map=imap,
        class_id=class_id,
        strategy=strategy,
        scorer_calls=session.calls,
        distinct_inputs=session.distinct_inputs,
        config_digest=digest,
    )
