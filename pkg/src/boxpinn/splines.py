"""Uniform B-spline bases underlying the learnable edge activations.

The knot vector is uniform over the grid range and extended by ``order``
extra spacings on each side (no clamping), which gives
``grid_size + order`` basis functions. Evaluation uses the local de Boor
triangle on the knot interval containing the point; for points outside the
grid range the boundary interval is reused, so the basis continues as the
natural polynomial extension of the edge pieces.

Derivatives come from the uniform-knot difference identity
``B'_{j,k}(t) = (B_{j,k-1}(t) - B_{j+1,k-1}(t)) / h`` applied repeatedly,
which only needs the lower-order triangles that the evaluation kernel
already produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from boxpinn import kernels
from boxpinn.errors import ConfigError


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """Uniform knot grid for ``grid_size + order`` basis functions."""

    grid_size: int
    order: int
    lo: float
    hi: float
    knots: np.ndarray = field(repr=False)

    @classmethod
    def uniform(cls, grid_size: int, order: int, lo: float = -1.0, hi: float = 1.0):
        if grid_size < 1:
            raise ConfigError("grid_size must be at least 1")
        if order < 1:
            raise ConfigError("spline order must be at least 1")
        if not lo < hi:
            raise ConfigError("grid range must satisfy lo < hi")
        h = (hi - lo) / grid_size
        knots = lo + (np.arange(grid_size + 2 * order + 1) - order) * h
        return cls(grid_size, order, float(lo), float(hi), knots)

    @property
    def num_basis(self) -> int:
        return self.grid_size + self.order

    @property
    def spacing(self) -> float:
        return float(self.knots[self.order + 1] - self.knots[self.order])


def _derivative_compact(lower: np.ndarray, m: int, k: int, h: float) -> np.ndarray:
    """m-th derivative of the order-k local values from order-(k-m) values."""
    npts = lower.shape[0]
    padded = np.zeros((npts, k + m + 1))
    padded[:, m : k + 1] = lower
    out = np.zeros((npts, k + 1))
    sign = 1.0
    for i in range(m + 1):
        out += (sign * math.comb(m, i)) * padded[:, i : i + k + 1]
        sign = -sign
    return out / h**m


def _scatter(compact: np.ndarray, span: np.ndarray, k: int, num_basis: int) -> np.ndarray:
    npts = compact.shape[0]
    dense = np.zeros((npts, num_basis))
    cols = (span - k)[:, None] + np.arange(k + 1)[None, :]
    dense[np.arange(npts)[:, None], cols] = compact
    return dense


def evaluate_basis(t: np.ndarray, basis: SplineBasis, nder: int = 0) -> list[np.ndarray]:
    """Dense basis values and derivatives at each point of a flat array.

    Returns ``nder + 1`` arrays of shape ``(len(t), num_basis)`` holding the
    basis values and their first ``nder`` derivatives. Derivative orders
    above the spline order are identically zero.
    """
    t = np.ascontiguousarray(t, dtype=np.float64)
    k = basis.order
    span, tris = kernels.bspline_triangles(t, basis.knots, k, basis.grid_size, nder)
    h = basis.spacing
    out = [_scatter(tris[0], span, k, basis.num_basis)]
    for m in range(1, nder + 1):
        if m > k:
            out.append(np.zeros((t.shape[0], basis.num_basis)))
            continue
        compact = _derivative_compact(tris[m], m, k, h)
        out.append(_scatter(compact, span, k, basis.num_basis))
    return out


def bspline_basis(t: float, basis: SplineBasis) -> np.ndarray:
    """All ``grid_size + order`` basis values at one point."""
    return evaluate_basis(np.array([float(t)]), basis, nder=0)[0][0]
