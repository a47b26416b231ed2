"""Command-line front end: ``segment``, ``gen-test`` and ``kmeans``.

Exit codes: 0 success, 1 unreadable/malformed image, 2 unstable or
divergent relaxation, 3 invalid flags or missing input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import kmeans_grayscale, split_components
from .errors import InstabilityError, PgmParseError
from .imageio import (
    export_heightmap_csv,
    export_labels_csv,
    export_mesh_obj,
    read_pgm,
    render_labels,
    render_sign_map,
    write_convergence_csv,
    write_pgm,
)
from .merging import merge_plan_csv, merge_to_count
from .mesh import SimParams, simulate
from .segmentation import DEFAULT_ZERO_TOLERANCE, cluster_regions, sign_map
from .testgen import VARIANTS, generate

logger = logging.getLogger(__name__)

EXIT_PARSE = 1
EXIT_UNSTABLE = 2
EXIT_USAGE = 3

THREADS_ENV = "ELASTICMESH_THREADS"
DEFAULT_SNAPSHOTS = (5, 10, 20, 40, 80)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("snapshot iterations must be positive")
    return values


def _size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}")
    return w, h


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="elasticmesh", description="Elastic-mesh image segmentation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    seg = sub.add_parser("segment", help="relax the mesh, cluster signs, optionally merge")
    seg.add_argument("input", help="PGM image (P2 or P5); '-' reads stdin")
    seg.add_argument("--out", required=True, help="output directory")
    seg.add_argument("--k1", type=float, default=1.0, help="repulsion coefficient (default 1.0)")
    seg.add_argument("--k2", type=float, default=1.0, help="elasticity coefficient (default 1.0)")
    seg.add_argument("--k3", type=float, default=0.1, help="step gain (default 0.1)")
    seg.add_argument("--eps", type=float, default=1e-4, help="stop when mean |dz| falls below this")
    seg.add_argument("--max-iter", type=_positive_int, default=10000)
    seg.add_argument("--snapshots", type=_int_list, default=list(DEFAULT_SNAPSHOTS),
                     help="comma-separated iterations to save sign maps at (default 5,10,20,40,80)")
    seg.add_argument("--merge-to", type=_positive_int, help="merge regions down to this count")
    seg.add_argument("--zero-tol", type=float, default=DEFAULT_ZERO_TOLERANCE)
    seg.add_argument("--z-scale", type=float, default=1.0, help="vertical scale of mesh.obj")
    seg.add_argument("--allow-unstable", action="store_true",
                     help="skip the k3*k2 < 0.25 stability guard")

    gen = sub.add_parser("gen-test", help="write a synthetic test image")
    gen.add_argument("variant", choices=VARIANTS)
    gen.add_argument("--size", type=_size, default=(64, 64), help="WIDTHxHEIGHT (default 64x64)")
    gen.add_argument("--levels", type=_int_list, help="comma-separated greyscale levels")
    gen.add_argument("--binary", action="store_true", help="write P5 instead of P2")
    gen.add_argument("--out", default="-", help="output file; '-' writes stdout")

    km = sub.add_parser("kmeans", help="k-means intensity baseline")
    km.add_argument("input", help="PGM image; '-' reads stdin")
    km.add_argument("--k", type=_positive_int, required=True)
    km.add_argument("--max-iter", type=_positive_int, default=100)
    km.add_argument("--seed", type=int, help="random initialisation seed (default: quantile init)")
    km.add_argument("--out", required=True, help="output directory")
    return parser


def _read_input(path: str) -> np.ndarray:
    if path == "-":
        data = sys.stdin.buffer.read()
    else:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"input file not found: {path}")
        data = p.read_bytes()
    return read_pgm(data)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _emit(summary: dict, out: Path):
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for key, value in summary.items():
        print(f"{key}={value}")


def cmd_segment(args) -> int:
    try:
        params = SimParams(args.k1, args.k2, args.k3, args.eps, args.max_iter, args.allow_unstable)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.zero_tol < 0:
        raise UsageError("--zero-tol must be non-negative")
    if not args.z_scale > 0:
        raise UsageError("--z-scale must be positive")
    workers = _threads()
    grid = _read_input(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    config = {
        "input": args.input,
        "k1": params.k1,
        "k2": params.k2,
        "k3": params.k3,
        "eps": params.epsilon,
        "max_iter": params.max_iterations,
        "snapshots": sorted(set(args.snapshots)),
        "merge_to": args.merge_to,
        "zero_tol": args.zero_tol,
        "z_scale": args.z_scale,
        "allow_unstable": params.allow_unstable,
    }
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")

    result = simulate(grid, params, args.snapshots, workers=workers)
    for it, z in sorted(result.snapshots.items()):
        (out / f"sign_iter{it}.pgm").write_bytes(write_pgm(render_sign_map(sign_map(z, args.zero_tol))))

    signs = sign_map(result.heights, args.zero_tol)
    labels, n = cluster_regions(signs)
    (out / "sign.pgm").write_bytes(write_pgm(render_sign_map(signs)))
    (out / "labels.csv").write_bytes(export_labels_csv(labels))
    (out / "labels_render.pgm").write_bytes(write_pgm(render_labels(labels, n)))
    (out / "heights.csv").write_bytes(export_heightmap_csv(result.heights))
    if min(grid.shape) >= 2:
        (out / "mesh.obj").write_bytes(export_mesh_obj(result.heights, args.z_scale))
    else:
        logger.warning("image is one pixel thin; mesh.obj not written")
    (out / "convergence.csv").write_bytes(write_convergence_csv(result.trace))

    summary = {
        "width": grid.shape[1],
        "height": grid.shape[0],
        "iterations": result.iterations_run,
        "converged": result.converged,
        "final_avg_abs_dz": repr(result.final_avg_abs_dz),
        "regions": n,
    }
    if args.merge_to is not None:
        if args.merge_to > n:
            raise UsageError(f"--merge-to {args.merge_to} exceeds the {n} regions found")
        merged, plan = merge_to_count(labels, grid, args.merge_to)
        (out / "merged_render.pgm").write_bytes(write_pgm(render_labels(merged, args.merge_to)))
        (out / "merge_plan.csv").write_bytes(merge_plan_csv(plan))
        summary["merged_regions"] = args.merge_to
    _emit(summary, out)
    return 0


def cmd_gen_test(args) -> int:
    w, h = args.size
    try:
        grid = generate(args.variant, w, h, args.levels)
    except ValueError as exc:
        raise UsageError(str(exc))
    data = write_pgm(grid, binary=args.binary)
    if args.out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(args.out).write_bytes(data)
    return 0


def cmd_kmeans(args) -> int:
    grid = _read_input(args.input)
    try:
        result = kmeans_grayscale(grid, args.k, args.max_iter, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    regions, n = split_components(result.assignment)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "kmeans_classes.pgm").write_bytes(write_pgm(render_labels(result.assignment, args.k)))
    (out / "kmeans_regions.pgm").write_bytes(write_pgm(render_labels(regions, n)))
    (out / "kmeans_labels.csv").write_bytes(export_labels_csv(result.assignment))
    summary = {
        "k": result.k,
        "classes": int(len(np.unique(result.assignment))),
        "centroids": " ".join(repr(float(c)) for c in result.centroids),
        "iterations": result.iterations,
        "converged": result.converged,
        "inertia": repr(result.inertia),
        "regions": n,
    }
    _emit(summary, out)
    return 0


COMMANDS = {"segment": cmd_segment, "gen-test": cmd_gen_test, "kmeans": cmd_kmeans}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"elasticmesh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PgmParseError as exc:
        print(f"elasticmesh: cannot parse image: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InstabilityError as exc:
        print(f"elasticmesh: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
