import numpy as np
import pytest

from pami import Image

BLOB_COLOR = (1.0, 0.1, 0.1)
BLOB_SIDE = 12


def textured_background(rng: np.random.Generator, size: int) -> np.ndarray:
    """Smooth color noise that never matches the blob color within tolerance."""
    coarse = rng.uniform(0.0, 1.0, (size // 8 + 1, size // 8 + 1, 3))
    fine = np.kron(coarse, np.ones((8, 8, 1)))[:size, :size]
    out = np.empty((size, size, 3))
    out[:, :, 0] = 0.05 + 0.5 * fine[:, :, 0]   # red stays below 0.55
    out[:, :, 1] = 0.3 + 0.6 * fine[:, :, 1]    # green/blue stay above 0.3
    out[:, :, 2] = 0.3 + 0.6 * fine[:, :, 2]
    return out


def make_blob_image(rng: np.random.Generator, size: int = 64,
                    blob: int = BLOB_SIDE):
    """A solid-color blob on textured background plus its inclusive bbox."""
    arr = textured_background(rng, size)
    x0 = int(rng.integers(2, size - blob - 2))
    y0 = int(rng.integers(2, size - blob - 2))
    arr[y0:y0 + blob, x0:x0 + blob] = BLOB_COLOR
    return Image(arr), (x0, y0, x0 + blob - 1, y0 + blob - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
