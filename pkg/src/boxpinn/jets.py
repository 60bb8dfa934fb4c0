"""Second-order forward-mode jets over the two spatial inputs.

A ``Jet2`` bundles a quantity with its first and pure second derivatives in
x and y; propagating jets through a network forward pass yields the output
value together with u_x, u_y, u_xx and u_yy in one sweep. The mixed
derivative is deliberately not carried - the Laplacian never needs it.

Jet components may be floats (scalar use), numpy arrays (batched
evaluation) or engine Tensors (when the pass is being traced for parameter
gradients); the arithmetic below is written to work with all three.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from boxpinn import engine

ACTIVATION_KINDS = ("tanh", "silu", "identity")


@dataclass
class Jet2:
    """Value plus first and pure second derivatives w.r.t. the two inputs."""

    val: Any
    dx: Any
    dy: Any
    dxx: Any
    dyy: Any


def seed_input(x, y) -> tuple[Jet2, Jet2]:
    """Jets for the two coordinates themselves: dx(x)=1, dy(y)=1, rest 0."""
    return (Jet2(x, 1.0, 0.0, 0.0, 0.0), Jet2(y, 0.0, 1.0, 0.0, 0.0))


def jet_const(c) -> Jet2:
    """A constant: all derivative components exactly zero."""
    return Jet2(c, 0.0, 0.0, 0.0, 0.0)


def jet_add(a: Jet2, b: Jet2) -> Jet2:
    return Jet2(a.val + b.val, a.dx + b.dx, a.dy + b.dy, a.dxx + b.dxx, a.dyy + b.dyy)


def jet_mul(a: Jet2, b: Jet2) -> Jet2:
    return Jet2(
        a.val * b.val,
        a.dx * b.val + a.val * b.dx,
        a.dy * b.val + a.val * b.dy,
        a.dxx * b.val + 2.0 * (a.dx * b.dx) + a.val * b.dxx,
        a.dyy * b.val + 2.0 * (a.dy * b.dy) + a.val * b.dyy,
    )


def jet_scale(a: Jet2, c) -> Jet2:
    return Jet2(a.val * c, a.dx * c, a.dy * c, a.dxx * c, a.dyy * c)


def compose_unary(a: Jet2, f, d1, d2) -> Jet2:
    """Chain rule for a scalar function given f(a.val), f'(a.val), f''(a.val)."""
    return Jet2(
        f,
        d1 * a.dx,
        d1 * a.dy,
        d2 * (a.dx * a.dx) + d1 * a.dxx,
        d2 * (a.dy * a.dy) + d1 * a.dyy,
    )


def jet_unary(a: Jet2, kind: str) -> Jet2:
    """Apply an activation with exact first and second derivatives."""
    if kind == "identity":
        return Jet2(a.val, a.dx, a.dy, a.dxx, a.dyy)
    if kind == "tanh":
        f = engine.tanh(a.val)
        d1 = 1.0 - f * f
        d2 = -2.0 * f * d1
    elif kind == "silu":
        s = engine.sigmoid(a.val)
        f = a.val * s
        sp = s * (1.0 - s)
        d1 = s + a.val * sp
        spp = sp * (1.0 - 2.0 * s)
        d2 = 2.0 * sp + a.val * spp
    else:
        raise ValueError(f"unknown activation kind {kind!r}")
    return compose_unary(a, f, d1, d2)
