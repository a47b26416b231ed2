import numpy as np
import pytest

from elasticmesh.baselines import kmeans_grayscale, split_components
from elasticmesh.testgen import gen_halves

from oracles import optimal_1d_sse


def test_bimodal_split():
    g = gen_halves(16, 8, 60, 180)
    result = kmeans_grayscale(g, 2)
    np.testing.assert_array_equal(result.centroids, [60.0, 180.0])
    assert result.converged
    assert np.all(result.assignment[:, :8] == 0) and np.all(result.assignment[:, 8:] == 1)


def test_skewed_modes_still_split():
    # 90% of pixels share one level, so the quantile starts coincide
    g = np.full((10, 10), 50.0)
    g[0, :] = 200.0
    result = kmeans_grayscale(g, 2)
    np.testing.assert_array_equal(result.centroids, [50.0, 200.0])


def test_k1_is_mean():
    g = np.random.default_rng(41).integers(0, 256, (8, 8)).astype(float)
    result = kmeans_grayscale(g, 1)
    assert result.centroids[0] == pytest.approx(g.mean())
    assert np.all(result.assignment == 0)


def test_k_exceeds_levels():
    with pytest.raises(ValueError):
        kmeans_grayscale(gen_halves(8, 8), 3)
    with pytest.raises(ValueError):
        kmeans_grayscale(gen_halves(8, 8), 0)


def test_invariants_and_monotone_inertia():
    rng = np.random.default_rng(42)
    for seed in [None, 1, 2, 3]:
        g = rng.integers(0, 256, (12, 12)).astype(float)
        result = kmeans_grayscale(g, 4, seed=seed)
        assert np.all(np.diff(result.centroids) > 0)
        hist = result.inertia_history
        assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))
        # every pixel sits with its nearest centroid, ties to the lower index
        d = np.abs(g.ravel()[:, None] - result.centroids[None, :])
        np.testing.assert_array_equal(result.assignment.ravel(), np.argmin(d, axis=1))


def test_deterministic_quantile_init():
    g = np.random.default_rng(43).integers(0, 256, (10, 10)).astype(float)
    a, b = kmeans_grayscale(g, 3), kmeans_grayscale(g, 3)
    assert np.array_equal(a.centroids, b.centroids) and np.array_equal(a.assignment, b.assignment)


def test_against_exhaustive_threshold_oracle():
    g = np.random.default_rng(44).integers(0, 256, (16, 16)).astype(float)
    best = optimal_1d_sse(g.ravel(), 3)
    single = kmeans_grayscale(g, 3)
    assert single.inertia >= best - 1e-6
    restarts = [single.inertia] + [kmeans_grayscale(g, 3, seed=s).inertia for s in range(200)]
    assert min(restarts) == pytest.approx(best, rel=1e-9)


def test_split_components():
    result = kmeans_grayscale(gen_halves(8, 8, 60, 180), 2)
    _, n = split_components(result.assignment)
    assert n == 2
    checker = np.indices((5, 5)).sum(axis=0) % 2
    _, n = split_components(checker)
    assert n == 25


def test_components_at_least_k():
    rng = np.random.default_rng(45)
    for _ in range(30):
        assignment = rng.integers(0, 4, (7, 9))
        k = len(np.unique(assignment))
        _, n = split_components(assignment)
        assert n >= k
