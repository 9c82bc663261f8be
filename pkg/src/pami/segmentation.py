"""Superpixel pre-segmentation: felzenszwalb, SLIC, compact watershed, SEEDS.

All segmenters are deterministic (same input and parameters give the same
label map), return dense labels 0..K-1 with every part non-empty, and jointly
cover the image. They are implemented from their original descriptions rather
than matching any particular library's boundaries bit-for-bit; averaging over
many segmentations makes the downstream maps robust to boundary differences.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .masking import _convolve_axis, gaussian_kernel_1d
from .types import Image, Segmentation

__all__ = [
    "SegmenterConfig",
    "felzenszwalb",
    "slic",
    "watershed",
    "seeds",
    "segment",
    "sweep_configs",
    "seed_grid",
]

_REQUIRED_PARAMS = {
    "felzenszwalb": frozenset({"scale", "sigma", "min_size"}),
    "slic": frozenset({"n_segments", "compactness"}),
    "watershed": frozenset({"markers", "compactness"}),
    "seeds": frozenset({"num_superpixels", "num_levels", "n_iter"}),
}

FELZENSZWALB_SCALES = (250, 200, 150, 100, 70, 50)
SLIC_SEGMENT_COUNTS = (10, 20, 30, 40, 50, 60, 70, 80)
WATERSHED_MARKER_COUNTS = (10, 20, 30)
SEEDS_SUPERPIXEL_COUNTS = (10, 20, 30)


@dataclass(frozen=True)
class SegmenterConfig:
    """One segmentation algorithm plus its parameter assignment."""

    algorithm: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        required = _REQUIRED_PARAMS.get(self.algorithm)
        if required is None:
            raise ValueError(f"unknown segmentation algorithm {self.algorithm!r}")
        if set(self.params) != required:
            raise ValueError(
                f"{self.algorithm} requires exactly params {sorted(required)}, "
                f"got {sorted(self.params)}"
            )
        if any(v <= 0 for v in self.params.values()):
            raise ValueError("all segmenter parameters must be positive")

    def describe(self) -> str:
        inner = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"{self.algorithm}({inner})"


def sweep_configs(include_seeds: bool = False) -> list[SegmenterConfig]:
    """The standard multi-scale sweep: 17 configs, 20 with SEEDS enabled."""
    configs = [
        SegmenterConfig("felzenszwalb", {"scale": s, "sigma": 0.8, "min_size": 784})
        for s in FELZENSZWALB_SCALES
    ]
    configs += [
        SegmenterConfig("slic", {"n_segments": n, "compactness": 20})
        for n in SLIC_SEGMENT_COUNTS
    ]
    configs += [
        SegmenterConfig("watershed", {"markers": m, "compactness": 0.0001})
        for m in WATERSHED_MARKER_COUNTS
    ]
    if include_seeds:
        configs += [
            SegmenterConfig("seeds", {"num_superpixels": n, "num_levels": 5, "n_iter": 10})
            for n in SEEDS_SUPERPIXEL_COUNTS
        ]
    return configs


def segment(img: Image, cfg: SegmenterConfig) -> Segmentation:
    """Run the segmenter a config describes."""
    p = cfg.params
    if cfg.algorithm == "felzenszwalb":
        return felzenszwalb(img, p["scale"], p["sigma"], int(p["min_size"]))
    if cfg.algorithm == "slic":
        return slic(img, int(p["n_segments"]), p["compactness"])
    if cfg.algorithm == "watershed":
        return watershed(img, int(p["markers"]), p["compactness"])
    return seeds(img, int(p["num_superpixels"]), int(p["num_levels"]), int(p["n_iter"]))


# ---------------------------------------------------------------------------
# shared helpers


class _UnionFind:
    """Disjoint sets over integer ids with size-weighted union."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        """Merge the sets of a and b; returns the surviving root."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


def seed_grid(width: int, height: int, count: int) -> list[tuple[float, float]]:
    """Regular grid of up to ``count`` seed positions (x, y), row-major.

    The per-axis counts derive from the nominal spacing sqrt(W*H/count) and
    are trimmed (larger axis first, y on ties) so the grid never exceeds the
    requested count.
    """
    if count < 1:
        raise ValueError("seed count must be >= 1")
    count = min(count, width * height)
    spacing = math.sqrt(width * height / count)
    nx = max(1, math.ceil(width / spacing))
    ny = max(1, math.ceil(height / spacing))
    while nx * ny > count:
        if nx > ny and nx > 1:
            nx -= 1
        elif ny > 1:
            ny -= 1
        else:
            nx -= 1
    xs = [(i + 0.5) * width / nx for i in range(nx)]
    ys = [(j + 0.5) * height / ny for j in range(ny)]
    return [(x, y) for y in ys for x in xs]


def luminance(data: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of an (H, W, C) array; grayscale passes through."""
    if data.shape[2] == 1:
        return data[:, :, 0]
    return 0.299 * data[:, :, 0] + 0.587 * data[:, :, 1] + 0.114 * data[:, :, 2]


def _smooth(data: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return data
    size = max(3, 2 * math.ceil(3.0 * sigma) + 1)
    kernel = gaussian_kernel_1d(size, sigma)
    return _convolve_axis(_convolve_axis(data, kernel, axis=1), kernel, axis=0)


def _sobel_magnitude(lum: np.ndarray) -> np.ndarray:
    """Gradient magnitude of an (H, W) array via separable Sobel filters."""
    arr = lum[:, :, np.newaxis]
    smooth = np.array([0.25, 0.5, 0.25])
    diff = np.array([0.5, 0.0, -0.5])
    gx = _convolve_axis(_convolve_axis(arr, diff, axis=1), smooth, axis=0)
    gy = _convolve_axis(_convolve_axis(arr, diff, axis=0), smooth, axis=1)
    return np.hypot(gx[:, :, 0], gy[:, :, 0])


def _dense_labels(labels: np.ndarray) -> Segmentation:
    _, inverse = np.unique(labels, return_inverse=True)
    return Segmentation(inverse.reshape(labels.shape).astype(np.int64))


def _grid_edges(height: int, width: int):
    """8-connected grid edges as (a, b) id arrays, fixed enumeration order."""
    ids = np.arange(height * width).reshape(height, width)
    pairs = [
        (ids[:, :-1], ids[:, 1:]),        # right
        (ids[:-1, :], ids[1:, :]),        # down
        (ids[:-1, :-1], ids[1:, 1:]),     # down-right
        (ids[:-1, 1:], ids[1:, :-1]),     # down-left
    ]
    a = np.concatenate([p[0].ravel() for p in pairs])
    b = np.concatenate([p[1].ravel() for p in pairs])
    return a, b


# ---------------------------------------------------------------------------
# felzenszwalb


def felzenszwalb(img: Image, scale: float, sigma: float = 0.8,
                 min_size: int = 20) -> Segmentation:
    """Graph-based segmentation with adaptive merge thresholds.

    After per-channel Gaussian pre-smoothing, pixels form an 8-connected
    graph weighted by Euclidean color distance. Edges are processed in
    ascending weight order, merging two components when the edge weight is
    within min(Int(C) + scale/|C|) of both, where Int(C) is the largest edge
    weight already merged inside C. A final pass absorbs any component
    smaller than ``min_size`` into its lowest-weight neighbor.
    """
    if scale <= 0:
        raise ValueError("scale must be > 0")
    data = _smooth(img.data, sigma)
    h, w = data.shape[:2]
    n = h * w
    edge_a, edge_b = _grid_edges(h, w)
    flat = data.reshape(n, -1)
    weights = np.sqrt(((flat[edge_a] - flat[edge_b]) ** 2).sum(axis=1))
    order = np.argsort(weights, kind="stable")
    edge_a = edge_a[order].tolist()
    edge_b = edge_b[order].tolist()
    weights = weights[order].tolist()

    uf = _UnionFind(n)
    find, union = uf.find, uf.union
    size = uf.size
    threshold = [float(scale)] * n  # Int(C) + scale/|C| per root, Int starts at 0
    for a, b, wgt in zip(edge_a, edge_b, weights):
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        if wgt <= threshold[ra] and wgt <= threshold[rb]:
            root = union(ra, rb)
            threshold[root] = wgt + scale / size[root]
    for a, b in zip(edge_a, edge_b):
        ra, rb = find(a), find(b)
        if ra != rb and (size[ra] < min_size or size[rb] < min_size):
            union(ra, rb)
    labels = np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)
    return _dense_labels(labels.reshape(h, w))


# ---------------------------------------------------------------------------
# SLIC

_SLIC_ITERATIONS = 10
_COLOR_SCALE = 100.0  # matches the scale compactness values are tuned for


def slic(img: Image, n_segments: int, compactness: float = 20.0) -> Segmentation:
    """Local k-means over (color, x, y) with grid-initialized centers.

    Distances are sqrt(d_color^2 + compactness^2 * (d_xy / S)^2) with S the
    nominal center spacing; each center only competes for pixels within S of
    itself. A connectivity pass relabels orphaned islands to the largest
    adjacent segment.
    """
    h, w = img.height, img.width
    if not 1 <= n_segments <= w * h:
        raise ValueError(f"n_segments must lie in [1, {w * h}]")
    data = img.data * _COLOR_SCALE
    spacing = math.sqrt(w * h / n_segments)
    ratio = (compactness / spacing) ** 2
    centers = []
    for x, y in seed_grid(w, h, n_segments):
        px, py = min(w - 1, int(x)), min(h - 1, int(y))
        centers.append((x, y, data[py, px].copy()))

    ys = np.arange(h, dtype=np.float64)[:, np.newaxis]
    xs = np.arange(w, dtype=np.float64)[np.newaxis, :]
    grid_x = np.broadcast_to(xs, (h, w))
    grid_y = np.broadcast_to(ys, (h, w))
    labels = np.full((h, w), -1, dtype=np.int64)
    for _ in range(_SLIC_ITERATIONS):
        best = np.full((h, w), np.inf)
        labels.fill(-1)
        for ci, (cx, cy, color) in enumerate(centers):
            x0, x1 = max(0, int(cx - spacing)), min(w, int(cx + spacing) + 1)
            y0, y1 = max(0, int(cy - spacing)), min(h, int(cy + spacing) + 1)
            if x0 >= x1 or y0 >= y1:
                continue
            patch = data[y0:y1, x0:x1]
            d2 = ((patch - color) ** 2).sum(axis=2)
            d2 = d2 + ratio * ((xs[:, x0:x1] - cx) ** 2 + (ys[y0:y1] - cy) ** 2)
            region = best[y0:y1, x0:x1]
            closer = d2 < region
            region[closer] = d2[closer]
            labels[y0:y1, x0:x1][closer] = ci
        if (labels < 0).any():
            _assign_nearest(labels, centers)
        for ci in range(len(centers)):
            member = labels == ci
            if member.any():
                centers[ci] = (
                    float(grid_x[member].mean()),
                    float(grid_y[member].mean()),
                    data[member].mean(axis=0),
                )
    return _dense_labels(_enforce_connectivity(labels))


def _assign_nearest(labels: np.ndarray, centers) -> None:
    """Fallback for pixels outside every center's search window."""
    h, w = labels.shape
    missing = np.argwhere(labels < 0)
    pos = np.array([(cx, cy) for cx, cy, _ in centers])
    for y, x in missing:
        d2 = (pos[:, 0] - x) ** 2 + (pos[:, 1] - y) ** 2
        labels[y, x] = int(np.argmin(d2))


def _enforce_connectivity(labels: np.ndarray) -> np.ndarray:
    """Relabel orphaned islands to the largest adjacent segment.

    The largest connected component of each label keeps it; every other
    component is merged into whichever neighboring label currently covers
    the most pixels (smallest label on ties).
    """
    h, w = labels.shape
    n = h * w
    flat = labels.ravel()
    uf = _UnionFind(n)
    ids = np.arange(n).reshape(h, w)
    for a, b in (
        (ids[:, :-1].ravel(), ids[:, 1:].ravel()),
        (ids[:-1, :].ravel(), ids[1:, :].ravel()),
    ):
        same = flat[a] == flat[b]
        for pa, pb in zip(a[same].tolist(), b[same].tolist()):
            uf.union(pa, pb)
    comp = np.fromiter((uf.find(i) for i in range(n)), dtype=np.int64, count=n)
    comp_sizes = np.bincount(comp, minlength=n)

    # main component per label = the largest (first root on ties)
    main = {}
    for root in np.unique(comp):
        label = int(flat[root])
        best = main.get(label)
        if best is None or comp_sizes[root] > comp_sizes[best]:
            main[label] = root
    label_sizes = np.bincount(flat, minlength=int(flat.max()) + 1).astype(np.int64)

    islands = [int(r) for r in np.unique(comp) if main[int(flat[r])] != r]
    islands.sort(key=lambda r: (comp_sizes[r], r))
    out = labels.copy()
    comp2d = comp.reshape(h, w)
    for root in islands:
        member = comp2d == root
        grown = member.copy()
        grown[:-1, :] |= member[1:, :]
        grown[1:, :] |= member[:-1, :]
        grown[:, :-1] |= member[:, 1:]
        grown[:, 1:] |= member[:, :-1]
        ring = grown & ~member
        current = int(out[member][0])
        neighbors = [int(v) for v in np.unique(out[ring]) if v != current]
        if not neighbors:
            continue
        target = max(neighbors, key=lambda v: (label_sizes[v], -v))
        count = int(member.sum())
        label_sizes[current] -= count
        label_sizes[target] += count
        out[member] = target
    return out


# ---------------------------------------------------------------------------
# compact watershed


def watershed(img: Image, markers: int, compactness: float = 0.0001) -> Segmentation:
    """Priority-flood watershed from grid seeds over the gradient image.

    A pixel's flooding priority is gradient(p) plus compactness times its
    squared distance to the claiming seed; ties resolve by insertion order,
    so the result is deterministic. With zero gradient the regions are the
    spatial Voronoi cells of the seed grid.
    """
    if markers < 1:
        raise ValueError("markers must be >= 1")
    if compactness < 0:
        raise ValueError("compactness must be >= 0")
    h, w = img.height, img.width
    grad = _sobel_magnitude(luminance(img.data))
    positions = seed_grid(w, h, markers)
    labels = np.full((h, w), -1, dtype=np.int64)
    heap = []
    counter = 0
    for lab, (sx, sy) in enumerate(positions):
        px, py = min(w - 1, int(sx)), min(h - 1, int(sy))
        heapq.heappush(heap, (float(grad[py, px]), counter, py, px, lab))
        counter += 1
    while heap:
        _, _, y, x, lab = heapq.heappop(heap)
        if labels[y, x] >= 0:
            continue
        labels[y, x] = lab
        sx, sy = positions[lab]
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] < 0:
                priority = float(grad[ny, nx]) + compactness * ((nx - sx) ** 2 + (ny - sy) ** 2)
                heapq.heappush(heap, (priority, counter, ny, nx, lab))
                counter += 1
    return _dense_labels(labels)


# ---------------------------------------------------------------------------
# SEEDS (simplified)

_SEEDS_COLOR_BINS = 5


def seeds(img: Image, num_superpixels: int, num_levels: int = 5,
          n_iter: int = 10) -> Segmentation:
    """Hill-climbing superpixels on quantized color histograms.

    Starts from the Voronoi cells of a seed grid, then proposes boundary
    moves at shrinking block sizes (2^(num_levels-1) down to single pixels):
    a block hops to a neighboring superpixel when its colors fit that
    superpixel's histogram better. Connectivity is restored afterwards the
    same way as for SLIC.
    """
    if num_superpixels < 1 or num_levels < 1 or n_iter < 1:
        raise ValueError("num_superpixels, num_levels and n_iter must be >= 1")
    h, w = img.height, img.width
    bins = _SEEDS_COLOR_BINS
    quant = np.minimum((img.data * bins).astype(np.int64), bins - 1)
    binmap = quant[:, :, 0]
    for c in range(1, img.channels):
        binmap = binmap * bins + quant[:, :, c]
    n_bins = bins**img.channels

    positions = np.array(seed_grid(w, h, num_superpixels))
    k = len(positions)
    ys = np.arange(h)[:, np.newaxis]
    xs = np.arange(w)[np.newaxis, :]
    d2 = (xs[np.newaxis] - positions[:, 0, None, None]) ** 2 + (
        ys[np.newaxis] - positions[:, 1, None, None]
    ) ** 2
    labels = np.argmin(d2, axis=0).astype(np.int64)

    hist = np.zeros((k, n_bins), dtype=np.float64)
    np.add.at(hist, (labels.ravel(), binmap.ravel()), 1.0)
    sizes = np.bincount(labels.ravel(), minlength=k).astype(np.float64)

    # one coarse-to-fine sweep, then pixel-level refinement passes
    schedule = [2**level for level in range(num_levels - 1, 0, -1)]
    schedule += [1] * n_iter
    for block in schedule:
        _seeds_pass(labels, binmap, hist, sizes, block)
    return _dense_labels(_enforce_connectivity(labels))


def _seeds_pass(labels, binmap, hist, sizes, block):
    h, w = labels.shape
    for by in range(0, h, block):
        for bx in range(0, w, block):
            tile = labels[by:by + block, bx:bx + block]
            current = int(tile.flat[0])
            if (tile != current).any():
                continue
            candidates = set()
            if by > 0:
                candidates.update(np.unique(labels[by - 1, bx:bx + block]).tolist())
            if by + block < h:
                candidates.update(np.unique(labels[by + block, bx:bx + block]).tolist())
            if bx > 0:
                candidates.update(np.unique(labels[by:by + block, bx - 1]).tolist())
            if bx + block < w:
                candidates.update(np.unique(labels[by:by + block, bx + block]).tolist())
            candidates.discard(current)
            if not candidates:
                continue
            tile_bins = binmap[by:by + block, bx:bx + block].ravel()
            area = tile_bins.size
            if sizes[current] <= area:  # never empty a superpixel
                continue
            tile_hist = np.bincount(tile_bins, minlength=hist.shape[1])
            own = float((hist[current] - tile_hist)[tile_bins].sum()) / (sizes[current] - area)
            best_label, best_score = -1, own
            for cand in sorted(candidates):
                score = float(hist[cand][tile_bins].sum()) / sizes[cand]
                if score > best_score:
                    best_label, best_score = cand, score
            if best_label >= 0:
                labels[by:by + block, bx:bx + block] = best_label
                hist[current] -= tile_hist
                hist[best_label] += tile_hist
                sizes[current] -= area
                sizes[best_label] += area
