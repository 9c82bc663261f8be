"""Masked-input construction: fill everything outside one preserved part.

The background is computed once per image (blurred copy, black, or white)
and a masked input is the preserved part composited over that background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import Image, PartMask

__all__ = [
    "MaskStyle",
    "gaussian_kernel_1d",
    "blur",
    "make_background",
    "compose_masked",
]

DEFAULT_KERNEL_SIZE = 49
DEFAULT_SIGMA = 100.0


@dataclass(frozen=True)
class MaskStyle:
    """How hidden regions are filled: blurred original, black, or white."""

    variant: str = "blurred"
    kernel_size: int = DEFAULT_KERNEL_SIZE
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if self.variant not in ("blurred", "black", "white"):
            raise ValueError(f"unknown mask variant {self.variant!r}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd and >= 1")
        if self.variant == "blurred" and self.sigma <= 0:
            raise ValueError("sigma must be > 0 for blurred masking")


def gaussian_kernel_1d(size: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian weights of odd length ``size``.

    Weight i is proportional to exp(-d^2 / (2 sigma^2)) with d the offset
    from the center tap; the weights sum to 1 within 1e-9.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be odd and >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    weights = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return weights / weights.sum()


def reflect_indices(n: int, pad: int) -> np.ndarray:
    """Source indices for reflect padding of a length-``n`` axis.

    Half-sample reflection: the border sample is repeated (..c b a|a b c..)
    and the pattern keeps bouncing for pads wider than the axis itself. This
    convention preserves the global mean exactly under symmetric kernels.
    """
    idx = np.arange(-pad, n + pad) % (2 * n)
    return np.where(idx >= n, 2 * n - 1 - idx, idx)


def _convolve_axis(data: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    """Convolve one spatial axis of an (H, W, C) array with reflect padding."""
    size = kernel.size
    pad = size // 2
    n = data.shape[axis]
    padded = np.take(data, reflect_indices(n, pad), axis=axis)
    out = np.zeros_like(data)
    window = [slice(None)] * data.ndim
    for tap in range(size):
        window[axis] = slice(tap, tap + n)
        out += kernel[tap] * padded[tuple(window)]
    return out


def blur(img: Image, style: MaskStyle) -> Image:
    """Separable Gaussian blur: horizontal then vertical pass per channel.

    Borders are handled by reflect padding and the result is clamped to
    [0, 1] to absorb floating-point drift.
    """
    if style.variant != "blurred":
        raise ValueError("blur requires a blurred mask style")
    kernel = gaussian_kernel_1d(style.kernel_size, style.sigma)
    out = _convolve_axis(img.data, kernel, axis=1)
    out = _convolve_axis(out, kernel, axis=0)
    return Image(np.clip(out, 0.0, 1.0))


def make_background(img: Image, style: MaskStyle) -> Image:
    """The fill used for masked regions under the given style."""
    if style.variant == "blurred":
        return blur(img, style)
    fill = 0.0 if style.variant == "black" else 1.0
    return Image(np.full_like(img.data, fill))


def compose_masked(original: Image, background: Image, keep: PartMask) -> Image:
    """Preserve one part of ``original`` and take ``background`` elsewhere."""
    if original.data.shape != background.data.shape:
        raise ValueError("original and background dimensions must match")
    if (keep.height, keep.width) != (original.height, original.width):
        raise ValueError("mask dimensions must match the image")
    return Image(np.where(keep.bits[:, :, np.newaxis], original.data, background.data))
