"""Synthetic test images made of flat greyscale regions.

``halves``  left and right halves at different levels
``rect``    a rectangle inside a background ring
``shapes``  circle (upper left), triangle (upper right) and rectangle
            (lower centre), each darker than the background
"""

from __future__ import annotations

import numpy as np

from .errors import GridError

VARIANTS = ("halves", "rect", "shapes")
MIN_SIZE = 8
MIN_SHAPES_SIZE = 24

DEFAULT_LEVELS = {
    "halves": (180, 60),
    "rect": (60, 180),
    "shapes": (200, 60, 90, 120),
}


def _check_level(*levels):
    for g in levels:
        if not 0 <= g <= 255:
            raise GridError(f"greyscale level {g} outside [0, 255]")


def _check_size(w, h, minimum=MIN_SIZE):
    if w < minimum or h < minimum:
        raise GridError(f"image must be at least {minimum}x{minimum}, got {w}x{h}")


def gen_halves(w: int, h: int, g_left: float = 180, g_right: float = 60) -> np.ndarray:
    if w % 2:
        raise GridError(f"halves pattern needs an even width, got {w}")
    _check_size(w, h)
    _check_level(g_left, g_right)
    grid = np.full((h, w), float(g_right))
    grid[:, : w // 2] = g_left
    return grid


def default_rect(w: int, h: int) -> tuple[int, int, int, int]:
    """Centred rectangle covering the middle half of each axis."""
    return w // 4, h // 4, w - w // 4, h - h // 4


def gen_rect(w: int, h: int, rect: tuple[int, int, int, int] | None = None,
             g_rect: float = 60, g_bg: float = 180) -> np.ndarray:
    """Background with one rectangle ``rect = (x0, y0, x1, y1)``, half-open.

    The rectangle must leave at least one background pixel on every side.
    """
    _check_size(w, h)
    _check_level(g_rect, g_bg)
    x0, y0, x1, y1 = default_rect(w, h) if rect is None else rect
    if x1 <= x0 or y1 <= y0:
        raise GridError(f"rectangle {rect} has zero area")
    if x0 < 1 or y0 < 1 or x1 > w - 1 or y1 > h - 1:
        raise GridError(f"rectangle {rect} must lie strictly inside the {w}x{h} image")
    grid = np.full((h, w), float(g_bg))
    grid[y0:y1, x0:x1] = g_rect
    return grid


def shape_masks(w: int, h: int) -> dict[str, np.ndarray]:
    """Boolean masks of the three shapes in the fixed layout."""
    _check_size(w, h, MIN_SHAPES_SIZE)
    ys, xs = np.mgrid[0:h, 0:w]
    # pixel centres
    px = xs + 0.5
    py = ys + 0.5

    r = 0.15 * min(w, h)
    circle = (px - 0.27 * w) ** 2 + (py - 0.30 * h) ** 2 <= r * r

    # isosceles triangle, apex up
    ax, ay = 0.725 * w, 0.12 * h
    base_y, half_base = 0.50 * h, 0.175 * w
    t = (py - ay) / (base_y - ay)
    triangle = (t >= 0) & (t <= 1) & (np.abs(px - ax) <= t * half_base)

    rect = (px >= 0.30 * w) & (px <= 0.70 * w) & (py >= 0.62 * h) & (py <= 0.85 * h)
    return {"circle": circle, "triangle": triangle, "rect": rect}


def gen_shapes(w: int, h: int, g_bg: float = 200, g_circle: float = 60,
               g_triangle: float = 90, g_rect: float = 120) -> np.ndarray:
    _check_level(g_bg, g_circle, g_triangle, g_rect)
    masks = shape_masks(w, h)
    grid = np.full((h, w), float(g_bg))
    for name, level in (("circle", g_circle), ("triangle", g_triangle), ("rect", g_rect)):
        if not masks[name].any():
            raise GridError(f"image {w}x{h} too small for the {name}")
        grid[masks[name]] = level
    return grid


def generate(variant: str, w: int, h: int, levels=None) -> np.ndarray:
    """Dispatch by variant name; ``levels`` overrides the default greyscales."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown test pattern {variant!r}; choose from {', '.join(VARIANTS)}")
    levels = tuple(DEFAULT_LEVELS[variant] if levels is None else levels)
    if len(levels) != len(DEFAULT_LEVELS[variant]):
        raise ValueError(f"{variant} takes {len(DEFAULT_LEVELS[variant])} levels, got {len(levels)}")
    if variant == "halves":
        return gen_halves(w, h, *levels)
    if variant == "rect":
        return gen_rect(w, h, None, *levels)
    return gen_shapes(w, h, *levels)
