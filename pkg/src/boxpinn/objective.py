"""The physics-informed loss: Laplace residuals inside, mismatch on the rim.

``total = alpha * interior + boundary`` where

* ``interior`` is the mean squared negative Laplacian over the interior
  collocation points (zero for an exact solution),
* ``boundary`` is the mean squared difference between the network value and
  the prescribed potential on the boundary lattice.

Scalar reductions use exactly rounded summation, so both terms are
independent of the order of the sample points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from boxpinn import engine, networks
from boxpinn.jets import Jet2
from boxpinn.sampling import SampleSet


@dataclass
class LossBreakdown:
    interior: float
    boundary: float
    total: float
    alpha: float


def _mean_sq(v):
    """Mean of squares, generic over arrays and traced tensors."""
    if isinstance(v, engine.Tensor):
        return engine.mean_batch(v * v)
    return math.fsum(np.asarray(v) ** 2) / len(v)


def _batch_jets(model, p, points) -> Jet2:
    x = np.ascontiguousarray(points[:, 0])
    y = np.ascontiguousarray(points[:, 1])
    return networks.forward_jets(p, model, networks.seed_batch(x, y))


def pde_residual(model, point) -> float:
    """Negative Laplacian of the network output at one point."""
    out = networks.forward(
        model,
        Jet2(float(point[0]), 1.0, 0.0, 0.0, 0.0),
        Jet2(float(point[1]), 0.0, 1.0, 0.0, 0.0),
    )
    return -(out.dxx + out.dyy)


def residuals(model, points) -> np.ndarray:
    """Negative Laplacians at a batch of interior points."""
    out = _batch_jets(model, np.asarray(model.params), np.asarray(points, dtype=np.float64))
    return -(np.asarray(out.dxx) + np.asarray(out.dyy)).reshape(-1)


def interior_loss(model, interior_points) -> float:
    """Mean squared residual (without the alpha weight)."""
    return _mean_sq(residuals(model, interior_points))


def boundary_loss(model, boundary_points, targets) -> float:
    """Mean squared mismatch against the prescribed boundary potentials."""
    values = networks.forward_values(
        model,
        np.asarray(boundary_points, dtype=np.float64)[:, 0],
        np.asarray(boundary_points, dtype=np.float64)[:, 1],
    )
    return _mean_sq(values - np.asarray(targets, dtype=np.float64))


def total_loss(model, samples: SampleSet, alpha: float) -> LossBreakdown:
    interior = interior_loss(model, samples.interior)
    boundary = boundary_loss(model, samples.boundary, samples.targets)
    return LossBreakdown(interior, boundary, alpha * interior + boundary, alpha)


def traced_parts(p: engine.Tensor, model, samples: SampleSet, alpha: float):
    """Loss terms as graph nodes, from one forward pass over all points.

    Returns ``(interior, boundary, total)`` tensors; backpropagating from
    ``total`` yields the full parameter gradient.
    """
    n_int = samples.interior.shape[0]
    points = np.concatenate([samples.interior, samples.boundary])
    out = _batch_jets(model, p, points)
    lap = (out.dxx + out.dyy).reshape(-1)
    res = lap[:n_int] * -1.0
    interior = _mean_sq(res)
    values = out.val.reshape(-1)
    mismatch = values[n_int:] - samples.targets
    boundary = _mean_sq(mismatch)
    total = interior * alpha + boundary
    return interior, boundary, total


def loss_closure(model, samples: SampleSet, alpha: float):
    """A parameter-vector -> scalar-loss closure for gradient evaluation."""

    def closure(p: engine.Tensor):
        return traced_parts(p, model, samples, alpha)[2]

    return closure
