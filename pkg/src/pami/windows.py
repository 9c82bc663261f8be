"""Sliding-window partitioning and per-window score aggregation.

Windows overlap, so a pixel's importance is the mean score of every window
covering it. The center grid is anchored at (0, 0); windows are clipped at
the image border.
"""

from __future__ import annotations

import warnings

import numpy as np

from .types import ImportanceMap, PartMask, WindowConfig

__all__ = ["window_centers", "window_mask", "aggregate_window"]


def window_centers(width: int, height: int, step: int) -> list[tuple[int, int]]:
    """Grid of window centers (x, y) at the given step, row-major order."""
    if step < 1:
        raise ValueError("step must be >= 1")
    return [(x, y) for y in range(0, height, step) for x in range(0, width, step)]


def window_mask(
    center: tuple[int, int], cfg: WindowConfig, width: int, height: int
) -> PartMask:
    """Boolean membership of one window, clipped at the image border."""
    cx, cy = center
    if not (0 <= cx < width and 0 <= cy < height):
        raise ValueError(f"center {center} outside a {width}x{height} image")
    ys = np.arange(height)[:, np.newaxis]
    xs = np.arange(width)[np.newaxis, :]
    if cfg.shape == "circle":
        bits = (xs - cx) ** 2 + (ys - cy) ** 2 <= cfg.radius**2
    else:
        bits = (np.abs(xs - cx) <= cfg.radius) & (np.abs(ys - cy) <= cfg.radius)
    return PartMask(bits)


def aggregate_window(parts: list[PartMask], scores: list[float]) -> ImportanceMap:
    """Per-pixel mean of the scores of every part covering the pixel.

    Pixels covered by no part get value 0; a warning reports how many. The
    result is invariant under permutation of the (parts, scores) pairs up to
    float summation order.
    """
    if len(parts) != len(scores):
        raise ValueError(f"{len(parts)} parts but {len(scores)} scores")
    if not parts:
        raise ValueError("at least one part is required")
    h, w = parts[0].height, parts[0].width
    total = np.zeros((h, w), dtype=np.float64)
    count = np.zeros((h, w), dtype=np.int64)
    for part, score in zip(parts, scores):
        if (part.height, part.width) != (h, w):
            raise ValueError("all parts must share dimensions")
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"scores must lie in [0, 1], got {score}")
        total[part.bits] += score
        count[part.bits] += 1
    uncovered = int((count == 0).sum())
    if uncovered:
        warnings.warn(
            f"{uncovered} pixels covered by no window; they score 0",
            RuntimeWarning,
            stacklevel=2,
        )
    covered = count > 0
    values = np.zeros((h, w), dtype=np.float64)
    np.divide(total, count, out=values, where=covered)
    return ImportanceMap(values)
