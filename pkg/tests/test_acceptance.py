"""Exit criteria for the package, one test per criterion.

Run ``pytest tests/test_acceptance.py`` to get a PASS/FAIL line for each
criterion in the terminal summary.
"""

import itertools
import time

import numpy as np
import pytest

from elasticmesh.cli import main
from elasticmesh.errors import InstabilityError
from elasticmesh.imageio import write_pgm
from elasticmesh.merging import merge_to_count
from elasticmesh.mesh import SimParams, balance_heights, simulate
from elasticmesh.segmentation import cluster_regions, sign_map
from elasticmesh.testgen import gen_halves, gen_rect, gen_shapes, shape_masks

from oracles import rescan_greedy_merge, same_partition, uf_label

CONVERGE = SimParams(max_iterations=200000)


def test_01_fixed_point_oracle(criterion):
    g = np.random.default_rng(101).integers(0, 256, (32, 32)).astype(float)
    t0 = time.perf_counter()
    result = simulate(g, SimParams(k1=1, k2=1, k3=0.1, epsilon=1e-12, max_iterations=1_000_000))
    elapsed = time.perf_counter() - t0
    err = float(np.abs(result.heights - balance_heights(g, 1.0, 1.0)).max())
    ok = result.converged and err < 1e-6 and elapsed < 10
    criterion(1, "fixed-point oracle", ok, f"max err {err:.2e}, {result.iterations_run} iters, {elapsed:.2f}s")
    assert ok


def test_02_conservation(criterion):
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(20):
        h, w = rng.integers(8, 33, 2)
        g = rng.integers(0, 256, (h, w)).astype(float)
        result = simulate(g, SimParams(epsilon=1e-300, max_iterations=1000), snapshot_iterations=range(1, 1001))
        assert len(result.snapshots) == 1000
        n = g.size
        for z in result.snapshots.values():
            worst = max(worst, abs(z.sum()) / (1e-9 * n * (1 + np.abs(z).max())))
    ok = worst <= 1.0
    criterion(2, "height conservation", ok, f"worst |sum z| at {worst:.2e} of its bound")
    assert ok


def test_03_halves(criterion):
    g = gen_halves(64, 64, 180, 60)
    result = simulate(g, CONVERGE)
    z = result.heights
    labels, n = cluster_regions(sign_map(z))
    ok = result.converged and np.all(z[:, :32] > 0) and np.all(z[:, 32:] < 0) and n == 2
    criterion(3, "test image 1: halves", ok, f"{n} regions after {result.iterations_run} iters")
    assert ok


def test_04_rectangle(criterion):
    g = gen_rect(64, 64, (16, 16, 48, 48), 60, 180)
    result = simulate(g, CONVERGE)
    z = result.heights
    inside = g == 60
    labels, n = cluster_regions(sign_map(z))
    ok = result.converged and np.all(z[inside] < 0) and np.all(z[~inside] > 0) and n == 2
    criterion(4, "test image 2: rectangle", ok, f"{n} regions after {result.iterations_run} iters")
    assert ok


def test_05_shapes(criterion):
    g = gen_shapes(64, 64)
    result = simulate(g, CONVERGE)
    signs = sign_map(result.heights)
    labels, n = cluster_regions(signs)
    masks = shape_masks(64, 64)
    background = ~(masks["circle"] | masks["triangle"] | masks["rect"])
    shapes_negative = all(np.all(signs[m] == -1) for m in masks.values())
    # each shape is exactly one region
    one_each = all(len(np.unique(labels[m])) == 1 for m in masks.values())
    ok = result.converged and n == 4 and shapes_negative and one_each and np.all(signs[background] == 1)
    criterion(5, "test image 3: three shapes", ok, f"{n} regions after {result.iterations_run} iters")
    assert ok


def test_06_propagation_speed(criterion):
    g = gen_halves(64, 64, 180, 60)
    result = simulate(g, SimParams(epsilon=1e-300, max_iterations=10), snapshot_iterations=[1, 5, 10])
    cols = np.arange(64)
    # columns 31 and 32 straddle the boundary
    dist = np.where(cols < 32, 31 - cols, cols - 32)
    ok = True
    for t, z in result.snapshots.items():
        ok &= bool(np.all(z[:, dist > t] == 0.0))
    criterion(6, "finite propagation speed", ok, "t in {1, 5, 10}")
    assert ok and sorted(result.snapshots) == [1, 5, 10]


def test_07_convergence_curve(criterion):
    result = simulate(gen_shapes(64, 64), SimParams(epsilon=1e-300, max_iterations=80))
    v = result.trace.values
    pairs = {t: (v[t - 1], v[2 * t - 1]) for t in (5, 10, 20, 40)}
    ok = all(late < early for early, late in pairs.values())
    detail = ", ".join(f"{t}:{a:.3g}->{b:.3g}" for t, (a, b) in pairs.items())
    criterion(7, "decreasing convergence curve", ok, detail)
    assert ok


def test_08_stability(criterion):
    g = np.random.default_rng(108).integers(0, 256, (16, 16)).astype(float)
    diverged_at = None
    try:
        simulate(g, SimParams(k2=1.0, k3=0.3, allow_unstable=True, epsilon=1e-300, max_iterations=200))
    except InstabilityError as exc:
        diverged_at = str(exc)
    stable = simulate(g, SimParams(k2=1.0, k3=0.1, epsilon=1e-300, max_iterations=10000))
    ok = diverged_at is not None and stable.iterations_run == 10000 and np.all(np.isfinite(stable.heights))
    criterion(8, "stability bound", ok, diverged_at or "no divergence at 0.3")
    assert ok


def _random_merge_case(rng):
    h, w = rng.integers(2, 8, 2)
    while True:
        labels, n = cluster_regions(rng.integers(0, 3, (h, w)))
        if n <= 8:
            break
    if rng.random() < 0.5:
        # flat regions drawn from few levels: many exactly equal means
        levels = rng.integers(0, 4, n) * 20.0
        grid = levels[labels]
    else:
        grid = rng.integers(0, 5, (h, w)) * 10.0
    return labels, n, grid


def test_09_merge_oracle(criterion):
    rng = np.random.default_rng(109)
    mismatches = 0
    stats = {}
    for _ in range(100):
        labels, n, grid = _random_merge_case(rng)
        target = int(rng.integers(1, n + 1))
        merged, plan = merge_to_count(labels, grid, target)
        ref, events = rescan_greedy_merge(labels, grid, target, stats)
        if not (same_partition(merged, ref) and [tuple(e) for e in plan] == events and merged.max() + 1 == target):
            mismatches += 1
    ties = stats.get("ties", 0)
    ok = mismatches == 0 and ties > 0
    criterion(9, "greedy merge oracle", ok, f"100 cases, {mismatches} mismatches, {ties} tied merge steps")
    assert ok


def test_10_labeling_oracle(criterion):
    bad = 0
    for values in itertools.product((-1, 0, 1), repeat=9):
        signs = np.array(values).reshape(3, 3)
        labels, n = cluster_regions(signs)
        ref, n_ref = uf_label(signs)
        bad += n != n_ref or not np.array_equal(labels, ref)
    rng = np.random.default_rng(110)
    for _ in range(1000):
        signs = rng.integers(-1, 2, (16, 16))
        labels, n = cluster_regions(signs)
        ref, n_ref = uf_label(signs)
        bad += n != n_ref or not np.array_equal(labels, ref)
    ok = bad == 0
    criterion(10, "connected-component oracle", ok, f"{3 ** 9} exhaustive + 1000 random, {bad} mismatches")
    assert ok


def test_11_performance(criterion):
    g = np.random.default_rng(111).integers(0, 256, (256, 256)).astype(float)
    t0 = time.perf_counter()
    result = simulate(g, SimParams(epsilon=1e-300, max_iterations=1000), workers=1)
    elapsed = time.perf_counter() - t0
    ok = result.iterations_run == 1000 and elapsed <= 5.0
    criterion(11, "performance 256x256 x1000", ok, f"{elapsed:.2f}s")
    assert ok


def test_12_determinism(criterion, tmp_path, monkeypatch, capsys):
    src = tmp_path / "shapes.pgm"
    src.write_bytes(write_pgm(gen_shapes(128, 128)))
    flags = ["--max-iter", "3000", "--merge-to", "3", "--snapshots", "5,10,20,40,80"]
    runs = {}
    for name, threads in (("a", "1"), ("b", "1"), ("c", "8")):
        monkeypatch.setenv("ELASTICMESH_THREADS", threads)
        out = tmp_path / name
        assert main(["segment", str(src), "--out", str(out)] + flags) == 0
        runs[name] = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    capsys.readouterr()
    ok = runs["a"] == runs["b"] == runs["c"] and len(runs["a"]) == 15
    criterion(12, "deterministic artefacts", ok, f"{len(runs['a'])} files, threads 1/1/8")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
