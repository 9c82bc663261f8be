"""Quantitative evaluation: pointing game and insertion curve.

The pointing game asks whether the map's strongest pixel lands inside the
object's ground-truth region; the insertion metric progressively unblurs
pixels in importance order and integrates the class probability over the
restored fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masking import MaskStyle, make_background
from .scorers import Scorer, ScoringError
from .types import Image, ImportanceMap

__all__ = [
    "GroundTruthRegion",
    "InsertionResult",
    "pointing_game",
    "hit_rate",
    "insertion",
]


@dataclass(frozen=True)
class GroundTruthRegion:
    """Object location as an inclusive bbox or a boolean mask."""

    kind: str
    class_id: int
    bbox: tuple[int, int, int, int] | None = None
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "bbox":
            if self.bbox is None:
                raise ValueError("bbox region requires bbox coordinates")
            x0, y0, x1, y1 = self.bbox
            if x0 < 0 or y0 < 0 or x0 > x1 or y0 > y1:
                raise ValueError(f"invalid bbox {self.bbox}")
        elif self.kind == "mask":
            if self.mask is None:
                raise ValueError("mask region requires a mask array")
            arr = np.asarray(self.mask, dtype=bool)
            if arr.ndim != 2 or not arr.any():
                raise ValueError("mask must be HxW with at least one true pixel")
            object.__setattr__(self, "mask", arr)
        else:
            raise ValueError(f"unknown ground-truth kind {self.kind!r}")

    @classmethod
    def from_bbox(cls, x0: int, y0: int, x1: int, y1: int, class_id: int):
        return cls("bbox", class_id, bbox=(x0, y0, x1, y1))

    @classmethod
    def from_mask(cls, mask, class_id: int):
        return cls("mask", class_id, mask=np.asarray(mask, dtype=bool))

    def contains(self, x: int, y: int) -> bool:
        if self.kind == "bbox":
            x0, y0, x1, y1 = self.bbox
            return x0 <= x <= x1 and y0 <= y <= y1
        return bool(self.mask[y, x])


@dataclass(frozen=True)
class InsertionResult:
    """Probability-vs-restored-fraction curve and its area."""

    fractions: np.ndarray
    probabilities: np.ndarray
    auc: float

    def __post_init__(self):
        fr = np.asarray(self.fractions, dtype=np.float64)
        pr = np.asarray(self.probabilities, dtype=np.float64)
        if fr.shape != pr.shape or fr.ndim != 1:
            raise ValueError("fractions and probabilities must be 1-D and aligned")
        if fr.min() < 0 or fr.max() > 1 or np.any(np.diff(fr) < 0):
            raise ValueError("fractions must ascend within [0, 1]")
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError("auc must lie in [0, 1]")
        object.__setattr__(self, "fractions", fr)
        object.__setattr__(self, "probabilities", pr)


def pointing_game(imap: ImportanceMap, gt: GroundTruthRegion) -> bool:
    """Hit iff the argmax pixel (row-major first on ties) is inside ``gt``."""
    if gt.kind == "mask" and gt.mask.shape != imap.values.shape:
        raise ValueError("ground-truth mask dimensions must match the map")
    if gt.kind == "bbox":
        x0, y0, x1, y1 = gt.bbox
        if x1 >= imap.width or y1 >= imap.height:
            raise ValueError("bbox exceeds the map bounds")
    x, y = imap.argmax_pixel()
    return gt.contains(x, y)


def hit_rate(results) -> float:
    """Mean per-class hit fraction (classes weigh equally, not by count)."""
    hits: dict[int, list[bool]] = {}
    for class_id, hit in results:
        hits.setdefault(class_id, []).append(bool(hit))
    if not hits:
        raise ValueError("at least one pointing result is required")
    per_class = [sum(flags) / len(flags) for flags in hits.values()]
    return float(sum(per_class) / len(per_class))


def insertion(img: Image, imap: ImportanceMap, scorer: Scorer, class_id: int,
              steps: int = 100, style: MaskStyle | None = None) -> InsertionResult:
    """Insertion curve: restore pixels in importance order onto the blur.

    Stage i restores the top floor(i/steps * W*H) pixels (row-major order
    breaks importance ties), so fraction 0 scores the fully masked image and
    fraction 1 the original. The area uses the trapezoid rule over the
    fraction axis.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if imap.values.shape != (img.height, img.width):
        raise ValueError("map dimensions must match the image")
    style = style or MaskStyle()
    background = make_background(img, style)
    order = np.argsort(-imap.values.ravel(), kind="stable")
    total = img.width * img.height
    fractions = np.arange(steps + 1, dtype=np.float64) / steps
    probabilities = np.empty(steps + 1, dtype=np.float64)
    restored = np.zeros(total, dtype=bool)
    for i, fraction in enumerate(fractions):
        keep = (i * total) // steps  # exact floor(fraction * total)
        restored.fill(False)
        restored[order[:keep]] = True
        stage = np.where(restored.reshape(img.height, img.width)[:, :, np.newaxis],
                         img.data, background.data)
        try:
            vector = scorer.score(Image(stage))
        except ScoringError as err:
            err.context["stage"] = i
            err.context["fraction"] = float(fraction)
            raise
        if not 0 <= class_id < len(vector):
            raise ValueError(
                f"class {class_id} out of range for a {len(vector)}-class scorer")
        probabilities[i] = vector.scores[class_id]
    auc = float(np.trapezoid(probabilities, fractions))
    return InsertionResult(fractions, probabilities, auc)
