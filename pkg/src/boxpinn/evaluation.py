"""Grid evaluation of trained models plus field serialization.

Fields travel as CSV (header ``x,y,u``, row-major with y outer, 9
significant digits) and as plain-text PGM heatmaps (magic ``P2``, maxval
255, image top row = the y = 1 grid row).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from boxpinn import networks
from boxpinn.errors import FieldFormatError
from boxpinn.oracle import GridField, grid_coords

EVAL_BAND_Y = 0.95  # stats are also reported restricted to y <= this


@dataclass
class DiffStats:
    max_abs: float
    mean_abs: float
    max_abs_below_y95: float
    argmax: tuple[int, int]  # (i, j) node index of the full-grid maximum


def eval_grid(model: networks.NetworkModel, n: int) -> GridField:
    """Scalar forward pass of the model at every node of the n-by-n grid."""
    if n < 2:
        raise ValueError("grid size must be at least 2")
    coords = grid_coords(n)
    xg, yg = np.meshgrid(coords, coords)
    values = networks.forward_values(model, xg.ravel(), yg.ravel()).reshape(n, n)
    return GridField(n, values)


def abs_diff(a: GridField, b: GridField) -> tuple[GridField, DiffStats]:
    """Nodewise absolute difference plus summary statistics."""
    if a.n != b.n:
        raise ValueError(f"grid sizes differ: {a.n} vs {b.n}")
    diff = np.abs(a.values - b.values)
    flat_arg = int(np.argmax(diff))  # first occurrence = smallest (j, i)
    j, i = divmod(flat_arg, a.n)
    band = grid_coords(a.n) <= EVAL_BAND_Y
    stats = DiffStats(
        max_abs=float(diff.max()),
        mean_abs=float(diff.mean()),
        max_abs_below_y95=float(diff[band, :].max()),
        argmax=(i, j),
    )
    return GridField(a.n, diff), stats


# ---------------------------------------------------------------------------
# CSV


def write_csv(field: GridField, destination) -> None:
    """Row-major dump (y outer, x inner), 9 significant digits per value."""
    coords = [f"{c:.8e}" for c in grid_coords(field.n)]
    with open(destination, "w", encoding="ascii") as handle:
        handle.write("x,y,u\n")
        for j in range(field.n):
            row = field.values[j]
            for i in range(field.n):
                handle.write(f"{coords[i]},{coords[j]},{row[i]:.8e}\n")


def read_csv(source) -> GridField:
    """Parse a field CSV back into a GridField; validates the node lattice."""
    with open(source, "r", encoding="ascii") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0].strip() != "x,y,u":
        raise FieldFormatError("expected header 'x,y,u'", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise FieldFormatError("blank line inside field data", line=lineno)
        parts = line.split(",")
        if len(parts) != 3:
            raise FieldFormatError(f"expected 3 columns, found {len(parts)}", line=lineno)
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError:
            raise FieldFormatError(f"unparseable number in {line!r}", line=lineno) from None
    count = len(rows)
    n = math.isqrt(count)
    if n * n != count or n < 2:
        raise FieldFormatError(
            f"{count} data rows do not form a square grid", line=len(lines)
        )
    data = np.asarray(rows, dtype=np.float64)
    coords = grid_coords(n)
    for idx in range(count):
        j, i = divmod(idx, n)
        if abs(data[idx, 0] - coords[i]) > 1e-6 or abs(data[idx, 1] - coords[j]) > 1e-6:
            raise FieldFormatError(
                f"row out of lattice order: expected x={coords[i]:.8e} y={coords[j]:.8e}",
                line=idx + 2,
            )
    return GridField(n, data[:, 2].reshape(n, n))


# ---------------------------------------------------------------------------
# PGM heatmaps


def _wrap_tokens(tokens, width=70):
    lines = []
    current = ""
    for token in tokens:
        if current and len(current) + 1 + len(token) > width:
            lines.append(current)
            current = token
        else:
            current = token if not current else current + " " + token
    if current:
        lines.append(current)
    return lines


def write_heatmap(field: GridField, destination, vrange=(0.0, 1.0)) -> None:
    """Plain-text PGM (P2) render; ``vrange`` is (lo, hi) or "auto".

    Values map monotonically to round(255 * clamp((v - lo) / (hi - lo))).
    The image's top row is the y = 1 grid row.
    """
    if vrange == "auto":
        lo = float(field.values.min())
        hi = float(field.values.max())
    else:
        lo, hi = float(vrange[0]), float(vrange[1])
        if not lo < hi:
            raise ValueError("fixed heatmap range needs lo < hi")
    span = hi - lo
    if span > 0:
        scaled = np.clip((field.values - lo) / span, 0.0, 1.0)
        pixels = np.rint(255.0 * scaled).astype(np.int64)
    else:
        pixels = np.zeros_like(field.values, dtype=np.int64)
    with open(destination, "w", encoding="ascii") as handle:
        handle.write("P2\n")
        handle.write(f"{field.n} {field.n}\n")
        handle.write("255\n")
        for j in range(field.n - 1, -1, -1):
            tokens = [str(v) for v in pixels[j]]
            for line in _wrap_tokens(tokens):
                handle.write(line + "\n")


def read_heatmap_pixels(source) -> np.ndarray:
    """Pixel matrix of a plain PGM written by ``write_heatmap`` (test aid)."""
    with open(source, "r", encoding="ascii") as handle:
        tokens = handle.read().split()
    if tokens[0] != "P2":
        raise FieldFormatError("not a plain PGM file", line=1)
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pixels = np.asarray([int(t) for t in tokens[4:]], dtype=np.int64)
    if pixels.size != width * height:
        raise FieldFormatError("pixel count does not match header")
    if maxval != 255:
        raise FieldFormatError("expected maxval 255")
    return pixels.reshape(height, width)
