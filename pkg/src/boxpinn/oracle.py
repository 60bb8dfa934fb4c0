"""Reference solutions for the unit-square potential problem.

Two independent routes to the same field:

* ``series_solution`` / ``oracle_grid``: the separated-variables series
  u(x, y) = sum over odd n of (4 / (n pi)) sin(n pi x) sinh(n pi y) / sinh(n pi),
  with each sinh ratio evaluated in exponent-shifted form so large
  harmonics cannot overflow;
* ``fd_solve``: successive over-relaxation of the 5-point discrete
  Laplacian with the same boundary data.

Boundary data: potential 1 on the y = 1 side, 0 on the other three sides.
The two top corners carry the discontinuity; grid nodes there take the
side-wall value 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from boxpinn import kernels
from boxpinn.errors import ConfigError, ConvergenceError


@dataclass
class GridField:
    """Scalar field on an n-by-n uniform grid over the unit square.

    ``values[j, i]`` sits at x = i / (n - 1), y = j / (n - 1).
    """

    n: int
    values: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("grid values must form a square matrix")
        if values.shape[0] < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        return cls(values.shape[0], values)


def grid_coords(n: int) -> np.ndarray:
    """Node coordinates i / (n - 1) along one axis."""
    return np.arange(n) / float(n - 1)


def _series_values(x: np.ndarray, y: np.ndarray, n_terms: int) -> np.ndarray:
    total = np.zeros_like(x)
    shifted = y - 1.0
    for m in range(n_terms):
        a = (2 * m + 1) * math.pi
        ratio = np.exp(a * shifted) * (1.0 - np.exp(-2.0 * a * y)) / (1.0 - math.exp(-2.0 * a))
        total += (4.0 / a) * np.sin(a * x) * ratio
    # grounded sides carry the boundary datum exactly (sin(n pi x) at x = 1
    # only vanishes up to the rounding of pi); the excited side returns its
    # datum with the corner convention
    total[(x == 0.0) | (x == 1.0)] = 0.0
    top = y == 1.0
    if top.any():
        total[top] = np.where((x[top] > 0.0) & (x[top] < 1.0), 1.0, 0.0)
    return total


def series_solution(x: float, y: float, n_terms: int = 200) -> float:
    """Truncated series value at one point; ``n_terms`` counts odd harmonics.

    On the excited side (y = 1) the boundary datum itself is returned: 1
    strictly inside the side, 0 at the corners.
    """
    if n_terms < 1:
        raise ConfigError("n_terms must be at least 1")
    out = _series_values(
        np.array([x], dtype=np.float64), np.array([y], dtype=np.float64), n_terms
    )
    return float(out[0])


def oracle_grid(n: int, n_terms: int = 200) -> GridField:
    """The series solution sampled on the n-by-n node lattice."""
    if n < 2:
        raise ConfigError("grid size must be at least 2")
    if n_terms < 1:
        raise ConfigError("n_terms must be at least 1")
    coords = grid_coords(n)
    xg, yg = np.meshgrid(coords, coords)
    values = _series_values(xg.ravel(), yg.ravel(), n_terms).reshape(n, n)
    return GridField(n, values)


def fd_solve(n: int, max_sweeps: int = 100000, tol: float = 1e-10) -> GridField:
    """Relax the 5-point discrete Laplace system to the given tolerance.

    Uses SOR with the optimal uniform-grid factor
    omega = 2 / (1 + sin(pi / (n - 1))), sweeping rows in order until the
    largest nodal update drops to ``tol``.
    """
    if n < 3:
        raise ConfigError("finite-difference grid needs at least 3 nodes per axis")
    if max_sweeps < 1:
        raise ConfigError("max_sweeps must be at least 1")
    values = np.zeros((n, n))
    values[n - 1, 1 : n - 1] = 1.0  # excited side; corners stay at 0
    omega = 2.0 / (1.0 + math.sin(math.pi / (n - 1)))
    update = math.inf
    for _ in range(max_sweeps):
        update = kernels.sor_sweep(values, omega)
        if update <= tol:
            return GridField(n, values)
    raise ConvergenceError(
        f"SOR did not reach tol={tol:g} within {max_sweeps} sweeps "
        f"(last update {update:.3e})",
        residual=update,
    )
