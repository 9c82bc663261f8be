"""Input coercion helpers so the estimators accept plain arrays."""

from __future__ import annotations

import numpy as np

from .types import Image, image_from_8bit

__all__ = ["as_image", "iter_images"]


def as_image(x) -> Image:
    """Coerce one sample to an :class:`Image`.

    Integer arrays are treated as 8-bit data; float arrays must already lie
    in [0, 1]. 2-D arrays become single-channel images.
    """
    if isinstance(x, Image):
        return x
    arr = np.asarray(x)
    if np.issubdtype(arr.dtype, np.integer) or arr.dtype == np.uint8:
        return image_from_8bit(arr)
    return Image(arr)


def iter_images(X) -> list[Image]:
    """Coerce a batch: an (N, H, W, C) array, a sequence, or one sample."""
    if isinstance(X, Image):
        return [X]
    if isinstance(X, np.ndarray):
        if X.ndim == 4:
            return [as_image(sample) for sample in X]
        if X.ndim in (2, 3):
            return [as_image(X)]
        raise ValueError(f"cannot interpret array of shape {X.shape} as images")
    if isinstance(X, (list, tuple)):
        return [as_image(sample) for sample in X]
    raise TypeError(f"cannot interpret {type(X).__name__} as images")
