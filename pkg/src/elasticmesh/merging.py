"""Greedy merging of adjacent regions by mean greyscale similarity.

Repeatedly fuse the pair of adjacent regions whose mean greyscale values are
closest, recomputing the merged region's mean from its pixels, until the
requested number of regions remains. Ties go to the lexicographically
smallest ``(i, j)`` pair and the smaller id survives.
"""

from __future__ import annotations

import csv
import heapq
import io
from typing import NamedTuple

import numpy as np

from .errors import GridError


def build_adjacency(labels: np.ndarray, region_count: int | None = None) -> np.ndarray:
    """Symmetric boolean "flag matrix" of 4-adjacent region pairs.

    ``a[i, j]`` is true iff some pixel of region ``i`` shares an edge with
    some pixel of region ``j``. The diagonal is always false.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise GridError(f"label map must be 2-D, got shape {labels.shape}")
    n = int(labels.max()) + 1 if region_count is None else int(region_count)
    a = np.zeros((n, n), dtype=bool)
    for u, v in ((labels[:-1, :], labels[1:, :]), (labels[:, :-1], labels[:, 1:])):
        differ = u != v
        a[u[differ], v[differ]] = True
    a |= a.T
    return a


class MergeEvent(NamedTuple):
    survivor: int
    absorbed: int
    mean_diff: float


def merge_plan_csv(plan: list[MergeEvent]) -> bytes:
    """Serialise a merge plan as ``survivor,absorbed,mean_diff`` CSV."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["survivor", "absorbed", "mean_diff"])
    for ev in plan:
        writer.writerow([ev.survivor, ev.absorbed, repr(float(ev.mean_diff))])
    return buf.getvalue().encode("utf-8")


def merge_to_count(labels: np.ndarray, grid: np.ndarray, target: int) -> tuple[np.ndarray, list[MergeEvent]]:
    """Merge regions greedily until ``target`` remain.

    Parameters
    ----------
    labels : ndarray of int, shape (H, W)
        Contiguous labels ``0..n-1``, e.g. from ``cluster_regions``.
    grid : ndarray, shape (H, W)
        The greyscale image the means are taken from.
    target : int
        Number of regions to keep, ``1 <= target <= n``.

    Returns
    -------
    merged : ndarray of int32
        Labels compacted to ``0..target-1``, ordered by each merged region's
        smallest original id.
    plan : list of MergeEvent
        One event per merge, ids referring to the original labels.
    """
    labels = np.asarray(labels)
    grid = np.asarray(grid, dtype=np.float64)
    if labels.shape != grid.shape:
        raise GridError("labels and grid must share the same shape")
    flat = labels.ravel()
    n = int(flat.max()) + 1
    if target < 1:
        raise ValueError(f"target region count must be >= 1, got {target}")
    if target > n:
        raise ValueError(f"target region count {target} exceeds current count {n}")

    counts = np.bincount(flat, minlength=n).astype(np.int64).tolist()
    sums = np.bincount(flat, weights=grid.ravel(), minlength=n).tolist()
    adj = build_adjacency(labels, n)
    neighbours = [set(np.flatnonzero(row).tolist()) for row in adj]
    parent = list(range(n))
    alive = [True] * n
    version = [0] * n

    def mean(i):
        return sums[i] / counts[i]

    heap = [(abs(mean(i) - mean(j)), i, j, 0, 0) for i in range(n) for j in neighbours[i] if i < j]
    heapq.heapify(heap)

    plan = []
    remaining = n
    while remaining > target and heap:
        diff, i, j, vi, vj = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or version[i] != vi or version[j] != vj:
            continue
        # j joins i (i < j always holds for heap entries)
        alive[j] = False
        parent[j] = i
        counts[i] += counts[j]
        sums[i] += sums[j]
        neighbours[i] |= neighbours[j]
        neighbours[i] -= {i, j}
        for k in neighbours[j]:
            neighbours[k].discard(j)
            if k != i:
                neighbours[k].add(i)
        neighbours[j] = set()
        version[i] += 1
        plan.append(MergeEvent(i, j, diff))
        remaining -= 1
        for k in neighbours[i]:
            a, b = (i, k) if i < k else (k, i)
            heapq.heappush(heap, (abs(mean(a) - mean(b)), a, b, version[a], version[b]))

    if remaining > target:
        raise ValueError(
            f"cannot reach {target} regions: only {remaining} mutually non-adjacent regions remain"
        )

    def root(i):
        while parent[i] != i:
            i = parent[i]
        return i

    roots = np.array([root(i) for i in range(n)])
    survivors = np.flatnonzero(alive)
    compact = np.empty(n, dtype=np.int32)
    compact[survivors] = np.arange(len(survivors), dtype=np.int32)
    return compact[roots][labels], plan
