"""Domain types shared by every other module.

All types are immutable value objects wrapping numpy arrays: construction
validates the data and freezes it, after which instances are safe to share
between threads. Pixel values live in [0, 1]; 8-bit is an I/O format only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Image",
    "ScoreVector",
    "PartMask",
    "Segmentation",
    "ImportanceMap",
    "WindowConfig",
    "image_from_8bit",
    "argmax_class",
]


def _freeze(arr: np.ndarray, source) -> np.ndarray:
    """Return a read-only contiguous array that does not alias ``source``."""
    arr = np.ascontiguousarray(arr)
    if isinstance(source, np.ndarray) and np.shares_memory(arr, source):
        arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Image:
    """Dense H x W x C raster with float values in [0, 1].

    ``data`` has shape (height, width, channels) with channels 1 or 3.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ValueError(f"image data must be HxWxC, got shape {arr.shape}")
        if arr.shape[2] not in (1, 3):
            raise ValueError(f"image must have 1 or 3 channels, got {arr.shape[2]}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(arr, self.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def to_8bit(self) -> np.ndarray:
        """Quantize back to uint8; exact inverse of :func:`image_from_8bit`."""
        return np.round(self.data * 255.0).astype(np.uint8)


@dataclass(frozen=True)
class ScoreVector:
    """Per-class model outputs, the only thing ever read from the model.

    ``kind`` is "softmax" when the scores form a distribution (sum ~ 1) and
    "independent" for per-class probabilities such as sigmoid heads.
    """

    scores: np.ndarray
    kind: str = "independent"

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64).ravel()
        if arr.size == 0:
            raise ValueError("score vector must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("scores must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("scores must lie in [0, 1]")
        if self.kind not in ("softmax", "independent"):
            raise ValueError(f"unknown score kind {self.kind!r}")
        if self.kind == "softmax":
            total = float(arr.sum())
            if not (1.0 - 1e-3 <= total <= 1.0 + 1e-3):
                raise ValueError(f"softmax scores must sum to 1, got {total}")
        object.__setattr__(self, "scores", _freeze(arr, self.scores))

    def __len__(self) -> int:
        return int(self.scores.size)

    def __getitem__(self, class_id: int) -> float:
        return float(self.scores[class_id])


@dataclass(frozen=True)
class PartMask:
    """Boolean per-pixel membership of one partitioned part."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"mask must be HxW, got shape {arr.shape}")
        if not arr.any():
            raise ValueError("a part mask must cover at least one pixel")
        object.__setattr__(self, "bits", _freeze(arr, self.bits))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def pixel_count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class Segmentation:
    """Per-pixel integer labels defining non-overlapped parts.

    Labels are dense: every label in [0, num_parts) is assigned to at least
    one pixel, and the parts jointly cover the image.
    """

    labels: np.ndarray
    num_parts: int = field(default=-1)

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("labels must be integers")
        arr = arr.astype(np.int64, copy=False)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"labels must be a non-empty HxW array, got shape {arr.shape}")
        n = int(arr.max()) + 1
        if self.num_parts == -1:
            object.__setattr__(self, "num_parts", n)
        if arr.min() < 0 or int(arr.max()) >= self.num_parts:
            raise ValueError("every label must lie in [0, num_parts)")
        present = np.unique(arr)
        if present.size != self.num_parts:
            raise ValueError("labels must be dense: every part non-empty")
        object.__setattr__(self, "labels", _freeze(arr, self.labels))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def part_mask(self, label: int) -> PartMask:
        """Boolean mask of one part."""
        if not 0 <= label < self.num_parts:
            raise ValueError(f"label {label} out of range [0, {self.num_parts})")
        return PartMask(self.labels == label)


@dataclass(frozen=True)
class ImportanceMap:
    """Per-pixel float contribution estimates, the method's output."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"map must be HxW, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("importance values must be finite")
        object.__setattr__(self, "values", _freeze(arr, self.values))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def argmax_pixel(self) -> tuple[int, int]:
        """(x, y) of the maximum value; ties broken row-major first."""
        flat = int(np.argmax(self.values))
        y, x = divmod(flat, self.width)
        return x, y


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window geometry: shape, radius (half-extent) and step.

    ``step <= 2 * radius`` guarantees every pixel is covered by a window.
    """

    shape: str = "circle"
    radius: int = 40
    step: int = 6

    def __post_init__(self):
        if self.shape not in ("circle", "rectangle"):
            raise ValueError(f"unknown window shape {self.shape!r}")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if self.step > 2 * self.radius:
            raise ValueError("step must be <= 2 * radius to guarantee coverage")


def image_from_8bit(raw: np.ndarray) -> Image:
    """Convert an HxWxC array of 0-255 integers to a float image.

    Each value v maps to v / 255 exactly; round-tripping through
    :meth:`Image.to_8bit` reproduces the original bytes.
    """
    arr = np.asarray(raw)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise ValueError(f"expected HxWxC bytes, got shape {arr.shape}")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("8-bit values must lie in [0, 255]")
    return Image(arr.astype(np.float64) / 255.0)


def argmax_class(s: ScoreVector) -> int:
    """Index of the maximum score; ties broken by smallest index."""
    return int(np.argmax(s.scores))
