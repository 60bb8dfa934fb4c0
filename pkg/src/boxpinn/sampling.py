"""Collocation sets: random interior points, even boundary lattice."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from boxpinn.errors import ConfigError

# side order and potentials: the y = 1 side is held at 1, the rest at 0
_SIDES = ("bottom", "top", "left", "right")
EXCITED_POTENTIAL = 1.0


@dataclass
class SampleSet:
    """Interior points plus boundary points with their target potentials."""

    interior: np.ndarray  # (n_i, 2), strictly inside the unit square
    boundary: np.ndarray  # (n_b, 2), on the sides, corners excluded
    targets: np.ndarray  # (n_b,)


def sample_interior(n_interior: int, seed: int) -> np.ndarray:
    """n_interior i.i.d. uniform points in the open unit square."""
    if n_interior < 1:
        raise ConfigError("need at least one interior point")
    rng = np.random.default_rng(seed)
    points = rng.random((n_interior, 2))
    # rng.random can in principle return 0.0, which would sit on the
    # boundary; redraw such entries (deterministic for a fixed seed)
    while True:
        on_edge = points == 0.0
        if not on_edge.any():
            return points
        points[on_edge] = rng.random(int(on_edge.sum()))


def sample_boundary(per_side: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint lattice of ``per_side`` points on each side, with targets.

    Positions are (j + 0.5) / per_side along each side, so corners (where
    the prescribed potential is discontinuous) never appear. Returns
    ``(points, targets)`` with 4 * per_side rows in the fixed side order
    bottom, top, left, right.
    """
    if per_side < 1:
        raise ConfigError("need at least one boundary point per side")
    along = (np.arange(per_side) + 0.5) / per_side
    zeros = np.zeros(per_side)
    ones = np.ones(per_side)
    points = np.concatenate(
        [
            np.column_stack([along, zeros]),  # bottom, y = 0
            np.column_stack([along, ones]),  # top, y = 1 (excited)
            np.column_stack([zeros, along]),  # left, x = 0
            np.column_stack([ones, along]),  # right, x = 1
        ]
    )
    targets = np.concatenate([zeros, np.full(per_side, EXCITED_POTENTIAL), zeros, zeros])
    return points, targets


def build_samples(n_interior: int, per_side: int, seed: int) -> SampleSet:
    """The full training collocation set for one run."""
    boundary, targets = sample_boundary(per_side)
    return SampleSet(sample_interior(n_interior, seed), boundary, targets)
