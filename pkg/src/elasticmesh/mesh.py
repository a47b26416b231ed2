"""Virtual 3D elastic mesh over a greyscale image.

Every pixel is a mesh node that can only move along z. Between each pair of
4-connected neighbours act two forces:

* a repulsive force ``k1 * (g - g_a)`` that pushes the brighter pixel up and
  the darker one down, constant for the whole run;
* an elastic force ``k2 * (z_a - z)`` that pulls the pair back toward equal
  height.

Each iteration moves every node by ``k3`` times its net force (synchronous
update), until the mean absolute height change drops below ``epsilon``.

Images and height fields are plain ``float64`` arrays of shape
``(height, width)``, row-major with the origin at the top-left pixel.
Pixel coordinates are given as ``(x, y)`` = ``(column, row)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Iterable

import numpy as np

from .errors import CoordinateError, GridError, InstabilityError

logger = logging.getLogger(__name__)

#: k3 * k2 must stay below this for the synchronous update to contract.
STABILITY_BOUND = 0.25

#: Mean |dz| above this (or non-finite) is treated as divergence.
BLOWUP_BOUND = 1e12

# Row blocks smaller than this are not worth handing to a worker thread.
_MIN_ROWS_PER_WORKER = 16


def as_grid(values) -> np.ndarray:
    """Validate a greyscale image and return it as a float64 2-D array.

    Raises
    ------
    GridError
        If the array is not 2-D and non-empty, or any value is non-finite or
        outside [0, 255].
    """
    g = np.array(values, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
        raise GridError(f"grid must be a non-empty 2-D array, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise GridError("grid contains non-finite greyscale values")
    if g.min() < 0.0 or g.max() > 255.0:
        raise GridError("greyscale values must lie in [0, 255]")
    return g


def as_heights(values, grid: np.ndarray) -> np.ndarray:
    """Validate a height field against its companion grid."""
    z = np.array(values, dtype=np.float64)
    if z.shape != grid.shape:
        raise GridError(f"height field shape {z.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(z)):
        raise GridError("height field contains non-finite values")
    return z


class StabilityVerdict(NamedTuple):
    ok: bool
    message: str


def check_stability(params: "SimParams") -> StabilityVerdict:
    """Check that the synchronous update contracts on a 4-connected grid.

    The update map has eigenvalues ``1 - k3*k2*lam`` with the grid Laplacian
    spectrum ``lam`` in [0, 8), so the iteration is stable iff
    ``k3*k2 < 0.25``.
    """
    product = params.k3 * params.k2
    if product < STABILITY_BOUND:
        return StabilityVerdict(True, f"k3*k2 = {product:g} < {STABILITY_BOUND}")
    return StabilityVerdict(
        False,
        f"unstable parameters: k3*k2 = {product:g} must be < {STABILITY_BOUND} "
        f"(update eigenvalues 1 - k3*k2*lam with lam in [0, 8] leave the unit disk)",
    )


@dataclass(frozen=True)
class SimParams:
    """Coefficients and stopping rule for the relaxation.

    ``allow_unstable`` skips the ``k3*k2 < 0.25`` guard; the run will then
    usually end in :class:`InstabilityError`.
    """

    k1: float = 1.0
    k2: float = 1.0
    k3: float = 0.1
    epsilon: float = 1e-4
    max_iterations: int = 10000
    allow_unstable: bool = False

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "epsilon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations!r}")
        if not self.allow_unstable:
            verdict = check_stability(self)
            if not verdict.ok:
                raise InstabilityError(verdict.message)


def repulsive_force(g: float, g_a: float, k1: float) -> float:
    """Force on a pixel of greyscale ``g`` from a neighbour of greyscale ``g_a``."""
    return k1 * (g - g_a)


def elastic_force(z: float, z_a: float, k2: float) -> float:
    """Force on a node at height ``z`` from a neighbour at height ``z_a``."""
    return k2 * (z_a - z)


class ForceSample(NamedTuple):
    f_r: float
    f_s: float
    f_net: float
    delta_z: float


def net_force(grid: np.ndarray, heights: np.ndarray, p: tuple[int, int], params: SimParams) -> ForceSample:
    """Sum the forces acting on pixel ``p = (x, y)`` from its in-bounds 4-neighbours."""
    h, w = grid.shape
    if heights.shape != grid.shape:
        raise GridError(f"height field shape {heights.shape} does not match grid {grid.shape}")
    x, y = p
    if not (0 <= x < w and 0 <= y < h):
        raise CoordinateError(f"pixel {p} outside {w}x{h} grid")
    f_r = 0.0
    f_s = 0.0
    for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
        xa, ya = x + dx, y + dy
        if 0 <= xa < w and 0 <= ya < h:
            f_r += repulsive_force(grid[y, x], grid[ya, xa], params.k1)
            f_s += elastic_force(heights[y, x], heights[ya, xa], params.k2)
    f_net = f_r + f_s
    return ForceSample(float(f_r), float(f_s), float(f_net), float(params.k3 * f_net))


class _Stepper:
    """Vectorised synchronous update with a precomputed repulsion field.

    Forces are accumulated per edge: the force one edge exerts on its upper
    (left) node is exactly the negation of the force on its lower (right)
    node, so the per-pixel sums cancel pairwise. Every output pixel is built
    from the same sequence of elementwise operations whichever row block it
    falls in, so any worker count yields bit-identical heights.
    """

    def __init__(self, grid: np.ndarray, params: SimParams, workers: int = 1):
        self.grid = grid
        self.params = params
        self.shape = grid.shape
        k1 = params.k1
        # repulsion on the top/left node of each vertical/horizontal edge
        self.rep_v = k1 * (grid[:-1, :] - grid[1:, :])
        self.rep_h = k1 * (grid[:, :-1] - grid[:, 1:])
        h = grid.shape[0]
        workers = max(1, min(int(workers), h // _MIN_ROWS_PER_WORKER or 1))
        bounds = np.linspace(0, h, workers + 1).astype(int)
        self.blocks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        self.pool = ThreadPoolExecutor(len(self.blocks)) if len(self.blocks) > 1 else None

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()
            self.pool = None

    def _forces_block(self, z: np.ndarray, out: np.ndarray, r0: int, r1: int):
        h = self.shape[0]
        k2 = self.params.k2
        lo = max(r0 - 1, 0)
        hi = min(r1 + 1, h)
        zs = z[lo:hi]
        f = np.zeros_like(zs)
        # vertical edges inside the slab: rows lo..hi-1
        ev = self.rep_v[lo:hi - 1] + k2 * (zs[1:] - zs[:-1])
        f[:-1] += ev
        f[1:] -= ev
        eh = self.rep_h[lo:hi] + k2 * (zs[:, 1:] - zs[:, :-1])
        f[:, :-1] += eh
        f[:, 1:] -= eh
        out[r0:r1] = f[r0 - lo:r1 - lo]

    def forces(self, z: np.ndarray) -> np.ndarray:
        out = np.empty(self.shape)
        if self.pool is None:
            self._forces_block(z, out, 0, self.shape[0])
        else:
            futures = [self.pool.submit(self._forces_block, z, out, r0, r1) for r0, r1 in self.blocks]
            for fut in futures:
                fut.result()
        return out

    def step(self, z: np.ndarray) -> tuple[np.ndarray, float]:
        dz = self.params.k3 * self.forces(z)
        avg = float(np.sum(np.abs(dz)) / dz.size)
        return z + dz, avg


def step(grid: np.ndarray, heights: np.ndarray, params: SimParams, workers: int = 1) -> tuple[np.ndarray, float]:
    """Apply one synchronous update and return ``(new_heights, avg_abs_dz)``.

    Raises
    ------
    InstabilityError
        If any new height is non-finite.
    """
    grid = as_grid(grid)
    z = as_heights(heights, grid)
    stepper = _Stepper(grid, params, workers)
    try:
        z_new, avg = stepper.step(z)
    finally:
        stepper.close()
    if not (math.isfinite(avg) and np.all(np.isfinite(z_new))):
        raise InstabilityError(_divergence_message(params, 1))
    return z_new, avg


def fixed_point_residual(grid: np.ndarray, heights: np.ndarray, params: SimParams) -> float:
    """Largest absolute net force over all pixels; zero at exact balance."""
    grid = as_grid(grid)
    z = as_heights(heights, grid)
    stepper = _Stepper(grid, params)
    return float(np.max(np.abs(stepper.forces(z))))


def balance_heights(grid: np.ndarray, k1: float, k2: float) -> np.ndarray:
    """Closed-form balance state reached from a zero-sum start.

    The net force is ``k1*L(g) - k2*L(z)`` for the grid Laplacian ``L``,
    which vanishes iff ``z = (k1/k2)*g + c``; the zero total height pins
    ``c``.
    """
    g = as_grid(grid)
    return (k1 / k2) * (g - g.mean())


@dataclass
class ConvergenceTrace:
    """Mean |dz| per iteration; ``values[i]`` belongs to iteration ``i + 1``."""

    values: list[float] = field(default_factory=list)

    def append(self, avg_abs_dz: float):
        self.values.append(avg_abs_dz)

    @property
    def iterations(self) -> list[int]:
        return list(range(1, len(self.values) + 1))

    def __iter__(self):
        return iter(zip(self.iterations, self.values))

    def __len__(self):
        return len(self.values)


@dataclass
class SimulationResult:
    heights: np.ndarray
    trace: ConvergenceTrace
    iterations_run: int
    converged: bool
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def final_avg_abs_dz(self) -> float:
        return self.trace.values[-1] if self.trace.values else math.nan


def _divergence_message(params: SimParams, iteration: int) -> str:
    return (
        f"relaxation diverged at iteration {iteration}: k3*k2 = {params.k3 * params.k2:g} "
        f"(stable only for k3*k2 < {STABILITY_BOUND})"
    )


def simulate(
    grid: np.ndarray,
    params: SimParams | None = None,
    snapshot_iterations: Iterable[int] = (),
    workers: int = 1,
    blowup_bound: float = BLOWUP_BOUND,
) -> SimulationResult:
    """Relax the mesh from the flat state until balance or the iteration cap.

    Parameters
    ----------
    grid : array_like, shape (H, W)
        Greyscale image in [0, 255].
    params : SimParams, optional
        Defaults to ``SimParams()``.
    snapshot_iterations : iterable of int
        Iteration numbers after which a copy of the heights is kept in
        ``result.snapshots``. Iterations never reached are skipped.
    workers : int
        Threads used for each update. Results do not depend on it.
    blowup_bound : float
        Mean |dz| above which the run is declared divergent.

    Returns
    -------
    SimulationResult

    Raises
    ------
    InstabilityError
        If mean |dz| becomes non-finite or exceeds ``blowup_bound``.
    """
    params = params or SimParams()
    grid = as_grid(grid)
    wanted = {int(k) for k in snapshot_iterations}
    z = np.zeros(grid.shape)
    trace = ConvergenceTrace()
    snapshots = {}
    converged = False
    stepper = _Stepper(grid, params, workers)
    try:
        for it in range(1, params.max_iterations + 1):
            z, avg = stepper.step(z)
            if not math.isfinite(avg) or avg > blowup_bound:
                raise InstabilityError(_divergence_message(params, it))
            trace.append(avg)
            if it in wanted:
                snapshots[it] = z.copy()
            if avg < params.epsilon:
                converged = True
                break
    finally:
        stepper.close()
    logger.debug("simulate: %d iterations, converged=%s, last avg|dz|=%g", len(trace), converged, trace.values[-1])
    return SimulationResult(z, trace, len(trace), converged, snapshots)
