"""PGM codec and export of simulation artefacts (renderings, CSV, OBJ).

All encoders return ``bytes`` and are deterministic: the same input always
produces the same output.
"""

from __future__ import annotations

import numpy as np

from .errors import GridError, PgmEncodeError, PgmParseError

MAXVAL = 255
_WHITESPACE = b" \t\n\r\v\f"


def _header_tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens with their offsets and the position just after the
    last token.
    """
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        if pos >= n:
            raise PgmParseError("truncated header", pos)
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        tokens.append((data[start:pos], start))
    return tokens, pos


def _header_int(token: bytes, offset: int, what: str) -> int:
    if not token.isdigit():
        raise PgmParseError(f"invalid {what} {token!r}", offset)
    return int(token)


def read_pgm(data: bytes) -> np.ndarray:
    """Decode a P2 (ASCII) or P5 (binary) greymap with maxval 255.

    Returns
    -------
    ndarray of float64, shape (height, width)

    Raises
    ------
    PgmParseError
        On a bad magic number, malformed header, maxval other than 255,
        out-of-range samples or a truncated raster. The error carries the
        byte offset of the problem.
    """
    data = bytes(data)
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmParseError(f"unsupported magic number {magic!r}", 0)
    if len(data) > 2 and data[2] not in _WHITESPACE and data[2] != ord("#"):
        raise PgmParseError("missing whitespace after magic number", 2)
    (w_tok, h_tok, m_tok), pos = _header_tokens(data, 3, 2)
    width = _header_int(*w_tok, "width")
    height = _header_int(*h_tok, "height")
    maxval = _header_int(*m_tok, "maxval")
    if width < 1 or height < 1:
        raise PgmParseError(f"empty image {width}x{height}", w_tok[1])
    if maxval != MAXVAL:
        raise PgmParseError(f"maxval must be {MAXVAL}, got {maxval}", m_tok[1])
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise PgmParseError("missing whitespace before raster", pos)
        pos += 1
        raster = data[pos:pos + count]
        if len(raster) < count:
            raise PgmParseError(f"truncated raster: expected {count} bytes, got {len(raster)}", pos + len(raster))
        samples = np.frombuffer(raster, dtype=np.uint8)
    else:
        values = []
        n = len(data)
        while len(values) < count:
            while pos < n and data[pos] in _WHITESPACE:
                pos += 1
            if pos < n and data[pos] == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
                continue
            if pos >= n:
                raise PgmParseError(f"truncated raster: expected {count} samples, got {len(values)}", pos)
            start = pos
            while pos < n and data[pos] not in _WHITESPACE:
                pos += 1
            value = _header_int(data[start:pos], start, "sample")
            if value > maxval:
                raise PgmParseError(f"sample {value} exceeds maxval {maxval}", start)
            values.append(value)
        samples = np.array(values)
    return samples.reshape(height, width).astype(np.float64)


def write_pgm(grid: np.ndarray, binary: bool = False) -> bytes:
    """Encode a greyscale grid as PGM, rounding values to the nearest integer.

    ASCII output puts one image row per line.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2 or g.size == 0:
        raise PgmEncodeError(f"cannot encode array of shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise PgmEncodeError("grid contains non-finite values")
    samples = np.floor(g + 0.5)
    if samples.min() < 0 or samples.max() > MAXVAL:
        raise PgmEncodeError(f"samples must round into [0, {MAXVAL}]")
    samples = samples.astype(np.uint8)
    h, w = samples.shape
    magic = "P5" if binary else "P2"
    header = f"{magic}\n{w} {h}\n{MAXVAL}\n".encode("ascii")
    if binary:
        return header + samples.tobytes()
    body = "".join(" ".join(map(str, row)) + "\n" for row in samples.tolist())
    return header + body.encode("ascii")


def render_sign_map(signs: np.ndarray) -> np.ndarray:
    """Signs as greyscale: positive white (255), negative black (0), zero grey (128)."""
    s = np.asarray(signs)
    out = np.full(s.shape, 128.0)
    out[s > 0] = 255.0
    out[s < 0] = 0.0
    return out


def render_labels(labels: np.ndarray, region_count: int | None = None) -> np.ndarray:
    """Spread region labels evenly over the greyscale range.

    Label ``k`` maps to ``round(k * 255 / max(n - 1, 1))`` for up to 256
    regions; beyond that, levels repeat cyclically as ``k mod 256``.
    """
    labels = np.asarray(labels)
    n = int(labels.max()) + 1 if region_count is None else int(region_count)
    if n < 1:
        raise GridError("render_labels needs at least one region")
    if n <= 256:
        return np.floor(labels * 255.0 / max(n - 1, 1) + 0.5)
    return (labels % 256).astype(np.float64)


def _fmt(value: float) -> str:
    # 9 significant digits; adding 0.0 folds -0.0 into 0
    return f"{float(value) + 0.0:.9g}"


def export_heightmap_csv(heights: np.ndarray) -> bytes:
    """Rows of ``x,y,z`` for every pixel, in row-major order."""
    z = np.asarray(heights, dtype=np.float64)
    lines = ["x,y,z"]
    h, w = z.shape
    for y in range(h):
        for x in range(w):
            lines.append(f"{x},{y},{_fmt(z[y, x])}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def export_labels_csv(labels: np.ndarray) -> bytes:
    """The label matrix as CSV, one image row per line."""
    rows = np.asarray(labels).tolist()
    return "".join(",".join(map(str, row)) + "\n" for row in rows).encode("utf-8")


def export_mesh_obj(heights: np.ndarray, z_scale: float = 1.0) -> bytes:
    """Triangulated height field as Wavefront OBJ (``v`` and ``f`` records).

    Vertex ``(x, y)`` has index ``y*W + x + 1``; every lattice cell is split
    into two triangles along its top-left/bottom-right diagonal.
    """
    z = np.asarray(heights, dtype=np.float64)
    if z.ndim != 2 or min(z.shape) < 2:
        raise GridError(f"mesh export needs at least 2x2 pixels, got shape {z.shape}")
    if not z_scale > 0:
        raise ValueError("z_scale must be positive")
    h, w = z.shape
    lines = [f"# elastic mesh {w}x{h}"]
    for y in range(h):
        for x in range(w):
            lines.append(f"v {x} {y} {_fmt(z[y, x] * z_scale)}")
    for y in range(h - 1):
        for x in range(w - 1):
            a = y * w + x + 1
            b, c, d = a + 1, a + w, a + w + 1
            lines.append(f"f {a} {c} {d}")
            lines.append(f"f {a} {d} {b}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_convergence_csv(trace) -> bytes:
    """``iteration,avg_abs_dz`` rows; values use shortest round-trip repr."""
    lines = ["iteration,avg_abs_dz"]
    for it, value in trace:
        lines.append(f"{int(it)},{float(value)!r}")
    return ("\n".join(lines) + "\n").encode("utf-8")
