"""PNG rendering: heatmap overlays and segmentation debug images.

The colormap is a fixed integer-valued 256-entry blue-to-yellow table so
renders are byte-stable across platforms.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .types import Image, ImportanceMap, Segmentation, image_from_8bit

__all__ = [
    "COLORMAP",
    "colorize_map",
    "render_heatmap",
    "render_segments",
    "segment_counts",
    "load_image_png",
    "save_png",
]

_ramp = np.arange(256, dtype=np.uint8)
COLORMAP = np.stack([_ramp, _ramp, 255 - _ramp], axis=1)  # blue -> yellow


def colorize_map(imap: ImportanceMap) -> np.ndarray:
    """Min-max normalize and map through the color table; (H, W, 3) uint8."""
    values = imap.values
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        idx = np.zeros(values.shape, dtype=np.uint8)
    else:
        idx = np.round((values - lo) / (hi - lo) * 255.0).astype(np.uint8)
    return COLORMAP[idx]


def render_heatmap(img: Image, imap: ImportanceMap) -> np.ndarray:
    """Colorized map alpha-blended 0.5 over the input; (H, W, 3) uint8."""
    if imap.values.shape != (img.height, img.width):
        raise ValueError("map dimensions must match the image")
    base = img.to_8bit()
    if base.shape[2] == 1:
        base = np.repeat(base, 3, axis=2)
    color = colorize_map(imap)
    return np.round(0.5 * base + 0.5 * color).astype(np.uint8)


def render_segments(seg: Segmentation) -> np.ndarray:
    """Per-label colors from a fixed seed; (H, W, 3) uint8."""
    rng = np.random.default_rng(0x50414D49)
    palette = rng.integers(0, 256, size=(seg.num_parts, 3), dtype=np.uint8)
    return palette[seg.labels]


def segment_counts(seg: Segmentation) -> list[tuple[int, int]]:
    """(label, pixel count) pairs, ascending label order."""
    counts = np.bincount(seg.labels.ravel(), minlength=seg.num_parts)
    return [(int(label), int(count)) for label, count in enumerate(counts)]


def load_image_png(path) -> Image:
    """Read a PNG/JPEG file as a float image (grayscale or RGB)."""
    with PILImage.open(path) as pil:
        if pil.mode not in ("L", "RGB"):
            pil = pil.convert("RGB")
        arr = np.asarray(pil)
    return image_from_8bit(arr)


def save_png(array: np.ndarray, path) -> None:
    """Write an (H, W, 3) or (H, W) uint8 array as PNG."""
    arr = np.asarray(array, dtype=np.uint8)
    mode = "L" if arr.ndim == 2 else "RGB"
    PILImage.fromarray(arr, mode=mode).save(Path(path), format="PNG")
