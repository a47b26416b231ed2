"""K-means clustering of pixel intensities, used as a comparison baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .segmentation import cluster_regions


@dataclass
class KMeansResult:
    k: int
    centroids: np.ndarray
    assignment: np.ndarray
    iterations: int
    converged: bool
    inertia_history: list[float] = field(default_factory=list)

    @property
    def inertia(self) -> float:
        """Within-cluster sum of squared intensity deviations."""
        return self.inertia_history[-1]


def _assign(values: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # argmin returns the first minimum, so ties go to the lower index
    return np.argmin(np.abs(values[:, None] - centroids[None, :]), axis=1)


def _inertia(values, centroids, assignment) -> float:
    return float(np.sum((values - centroids[assignment]) ** 2))


def _quantile_init(values: np.ndarray, levels: np.ndarray, k: int) -> np.ndarray:
    qs = (np.arange(k) + 0.5) / k
    init = np.quantile(values, qs, method="inverted_cdf")
    if len(np.unique(init)) == k:
        return init.astype(np.float64)
    # heavy modes collapse quantiles: fall back to evenly spaced distinct levels
    idx = np.floor((np.arange(k) + 0.5) * len(levels) / k).astype(int)
    return levels[idx].astype(np.float64)


def kmeans_grayscale(grid: np.ndarray, k: int, max_iter: int = 100, seed: int | None = None) -> KMeansResult:
    """Lloyd's algorithm on the 1-D pixel intensities.

    Parameters
    ----------
    grid : ndarray, shape (H, W)
    k : int
        Number of clusters, at most the number of distinct grey levels.
    max_iter : int
        Maximum number of Lloyd iterations.
    seed : int, optional
        ``None`` uses the deterministic quantile initialisation; an integer
        draws ``k`` distinct grey levels at random instead (for restarts).

    Returns
    -------
    KMeansResult
        Centroids sorted ascending, with ``assignment`` giving each pixel's
        centroid index.
    """
    g = np.asarray(grid, dtype=np.float64)
    values = g.ravel()
    levels = np.unique(values)
    if not 1 <= k <= len(levels):
        raise ValueError(f"k must lie in [1, {len(levels)}] (distinct grey levels), got {k}")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")

    if seed is None:
        centroids = _quantile_init(values, levels, k)
    else:
        rng = np.random.default_rng(seed)
        centroids = np.sort(rng.choice(levels, size=k, replace=False)).astype(np.float64)

    assignment = _assign(values, centroids)
    history = [_inertia(values, centroids, assignment)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        sums = np.bincount(assignment, weights=values, minlength=k)
        counts = np.bincount(assignment, minlength=k)
        # an emptied cluster keeps its previous centroid
        centroids = np.where(counts > 0, sums / np.maximum(counts, 1), centroids)
        new_assignment = _assign(values, centroids)
        history.append(_inertia(values, centroids, new_assignment))
        if np.array_equal(new_assignment, assignment):
            converged = True
            break
        assignment = new_assignment

    order = np.argsort(centroids, kind="stable")
    rank = np.empty(k, dtype=np.int64)
    rank[order] = np.arange(k)
    return KMeansResult(
        k=k,
        centroids=centroids[order],
        assignment=rank[assignment].reshape(g.shape).astype(np.int32),
        iterations=iterations,
        converged=converged,
        inertia_history=history,
    )


def split_components(assignment: np.ndarray) -> tuple[np.ndarray, int]:
    """Split intensity classes into spatially 4-connected regions."""
    return cluster_regions(assignment)
