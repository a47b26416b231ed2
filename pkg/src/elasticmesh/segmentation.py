"""Sign distribution of mesh heights and same-sign region clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError

#: Heights within this distance of zero count as "no definite sign yet".
DEFAULT_ZERO_TOLERANCE = 1e-9


def sign_map(heights: np.ndarray, zero_tolerance: float = DEFAULT_ZERO_TOLERANCE) -> np.ndarray:
    """Ternary sign of each height: +1 above ``tol``, -1 below ``-tol``, else 0."""
    if zero_tolerance < 0:
        raise ValueError("zero_tolerance must be non-negative")
    z = np.asarray(heights, dtype=np.float64)
    signs = np.zeros(z.shape, dtype=np.int8)
    signs[z > zero_tolerance] = 1
    signs[z < -zero_tolerance] = -1
    return signs


def cluster_regions(signs: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 4-connected groups of pixels that share the same value.

    Labels start at 0 and follow raster-scan order of each region's first
    pixel. Zero-sign pixels form regions of their own like any other value.

    Parameters
    ----------
    signs : ndarray, shape (H, W)
        Any integer class map; normally a sign map with values in {-1, 0, 1}.

    Returns
    -------
    labels : ndarray of int32, shape (H, W)
    region_count : int
    """
    s = np.asarray(signs)
    if s.ndim != 2:
        raise GridError(f"sign map must be 2-D, got shape {s.shape}")
    h, w = s.shape
    flat = s.ravel().tolist()
    labels = [-1] * (h * w)
    n = 0
    for start in range(h * w):
        if labels[start] != -1:
            continue
        value = flat[start]
        labels[start] = n
        stack = [start]
        while stack:
            i = stack.pop()
            y, x = divmod(i, w)
            if y > 0 and labels[i - w] == -1 and flat[i - w] == value:
                labels[i - w] = n
                stack.append(i - w)
            if y < h - 1 and labels[i + w] == -1 and flat[i + w] == value:
                labels[i + w] = n
                stack.append(i + w)
            if x > 0 and labels[i - 1] == -1 and flat[i - 1] == value:
                labels[i - 1] = n
                stack.append(i - 1)
            if x < w - 1 and labels[i + 1] == -1 and flat[i + 1] == value:
                labels[i + 1] = n
                stack.append(i + 1)
        n += 1
    return np.array(labels, dtype=np.int32).reshape(h, w), n


@dataclass
class RegionTable:
    """Per-region statistics, indexed by label id."""

    pixel_count: np.ndarray
    grey_sum: np.ndarray
    sign: np.ndarray

    @property
    def mean_grey(self) -> np.ndarray:
        return self.grey_sum / self.pixel_count

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self.pixel_count))

    def __len__(self):
        return len(self.pixel_count)

    def rows(self):
        """Yield ``(id, pixel_count, mean_grey, sign)`` per region."""
        for i, (c, m, s) in enumerate(zip(self.pixel_count, self.mean_grey, self.sign)):
            yield i, int(c), float(m), int(s)


def region_stats(labels: np.ndarray, grid: np.ndarray, signs: np.ndarray | None = None) -> RegionTable:
    """Pixel count, mean greyscale and sign of every labeled region.

    ``signs`` may be omitted, in which case every region's sign is 0.
    """
    labels = np.asarray(labels)
    grid = np.asarray(grid, dtype=np.float64)
    if labels.shape != grid.shape or (signs is not None and np.shape(signs) != labels.shape):
        raise GridError("labels, grid and signs must share the same shape")
    flat = labels.ravel()
    n = int(flat.max()) + 1 if flat.size else 0
    counts = np.bincount(flat, minlength=n)
    if np.any(counts == 0):
        raise GridError("labels must form a contiguous range starting at 0")
    sums = np.bincount(flat, weights=grid.ravel(), minlength=n)
    sign = np.zeros(n, dtype=np.int8)
    if signs is not None:
        # first pixel of each region carries its (uniform) sign
        _, first = np.unique(flat, return_index=True)
        sign = np.asarray(signs).ravel()[first].astype(np.int8)
    return RegionTable(counts, sums, sign)
