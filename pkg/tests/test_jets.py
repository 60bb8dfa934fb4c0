"""Jet arithmetic against analytic derivatives and high-precision FD."""

import math

import mpmath
import numpy as np
import pytest

from boxpinn.jets import (
    Jet2,
    jet_add,
    jet_const,
    jet_mul,
    jet_scale,
    jet_unary,
    seed_input,
)


def test_seed_input_components():
    jx, jy = seed_input(0.5, 0.25)
    assert (jx.val, jx.dx, jx.dy, jx.dxx, jx.dyy) == (0.5, 1.0, 0.0, 0.0, 0.0)
    assert (jy.val, jy.dx, jy.dy, jy.dxx, jy.dyy) == (0.25, 0.0, 1.0, 0.0, 0.0)


def test_seeds_do_not_depend_on_value():
    jx, jy = seed_input(0.0, 0.0)
    assert jx.val == 0.0 and jy.val == 0.0
    assert (jx.dx, jx.dy) == (1.0, 0.0)
    assert (jy.dx, jy.dy) == (0.0, 1.0)


def test_bilinear_product():
    jx, jy = seed_input(0.5, 1.0)
    out = jet_mul(jx, jy)
    assert (out.val, out.dx, out.dy, out.dxx, out.dyy) == (0.5, 1.0, 0.5, 0.0, 0.0)


def test_square_second_derivative():
    jx, _ = seed_input(3.0, 0.0)
    out = jet_mul(jx, jx)
    assert (out.val, out.dx, out.dxx) == (9.0, 6.0, 2.0)
    assert (out.dy, out.dyy) == (0.0, 0.0)


def test_additive_inverse_is_zero_jet():
    jx, jy = seed_input(0.7, -0.2)
    a = jet_mul(jet_add(jx, jy), jx)
    zero = jet_add(a, jet_scale(a, -1.0))
    assert (zero.val, zero.dx, zero.dy, zero.dxx, zero.dyy) == (0.0,) * 5


def _harmonics(jx, jy):
    sq_x = jet_mul(jx, jx)
    sq_y = jet_mul(jy, jy)
    yield jet_add(sq_x, jet_scale(sq_y, -1.0))  # x^2 - y^2
    yield jet_mul(jx, jy)  # x*y
    # x^3 - 3*x*y^2
    yield jet_add(jet_mul(sq_x, jx), jet_scale(jet_mul(jx, sq_y), -3.0))


def test_harmonic_polynomials(rng):
    for _ in range(100):
        x, y = rng.uniform(-2.0, 2.0, 2)
        for jet in _harmonics(*seed_input(x, y)):
            assert abs(jet.dxx + jet.dyy) <= 1e-12


def test_tanh_jet_matches_analytic_derivatives():
    jx, jy = seed_input(0.5, 1.0)
    out = jet_unary(jet_mul(jx, jy), "tanh")
    t = math.tanh(0.5)
    assert out.val == pytest.approx(0.4621, abs=5e-5)
    assert out.val == t
    assert out.dx == pytest.approx(1.0 - t * t, rel=1e-15)  # d/dx = tanh'(xy) * y
    assert out.dx == pytest.approx(0.7864, abs=5e-5)
    assert out.dxx == pytest.approx(-2.0 * t * (1.0 - t * t), rel=1e-15)
    assert out.dxx == pytest.approx(-0.7269, abs=5e-5)


def test_identity_returns_jet_unchanged():
    jet = Jet2(0.3, 1.5, -0.25, 0.75, 2.0)
    out = jet_unary(jet, "identity")
    assert (out.val, out.dx, out.dy, out.dxx, out.dyy) == (0.3, 1.5, -0.25, 0.75, 2.0)


def test_unknown_activation_rejected():
    with pytest.raises(ValueError):
        jet_unary(jet_const(0.0), "relu")


# ---------------------------------------------------------------------------
# random compositions against high-precision central differences


def _random_tree(rng, depth):
    if depth == 0:
        return rng.choice(["x", "y", "c"])
    op = rng.choice(["add", "mul", "scale", "tanh", "silu", "identity"])
    if op in ("add", "mul"):
        return (op, _random_tree(rng, depth - 1), _random_tree(rng, depth - 1))
    if op == "scale":
        return (op, float(rng.uniform(-1.5, 1.5)), _random_tree(rng, depth - 1))
    return (op, _random_tree(rng, depth - 1))


def _eval_jet(tree, jx, jy, const):
    if tree == "x":
        return jx
    if tree == "y":
        return jy
    if tree == "c":
        return jet_const(const)
    op = tree[0]
    if op == "add":
        return jet_add(_eval_jet(tree[1], jx, jy, const), _eval_jet(tree[2], jx, jy, const))
    if op == "mul":
        return jet_mul(_eval_jet(tree[1], jx, jy, const), _eval_jet(tree[2], jx, jy, const))
    if op == "scale":
        return jet_scale(_eval_jet(tree[2], jx, jy, const), tree[1])
    return jet_unary(_eval_jet(tree[1], jx, jy, const), op)


def _eval_mp(tree, x, y, const):
    if tree == "x":
        return x
    if tree == "y":
        return y
    if tree == "c":
        return mpmath.mpf(const)
    op = tree[0]
    if op == "add":
        return _eval_mp(tree[1], x, y, const) + _eval_mp(tree[2], x, y, const)
    if op == "mul":
        return _eval_mp(tree[1], x, y, const) * _eval_mp(tree[2], x, y, const)
    if op == "scale":
        return mpmath.mpf(tree[1]) * _eval_mp(tree[2], x, y, const)
    if op == "tanh":
        return mpmath.tanh(_eval_mp(tree[1], x, y, const))
    if op == "silu":
        v = _eval_mp(tree[1], x, y, const)
        return v / (1 + mpmath.exp(-v))
    return _eval_mp(tree[1], x, y, const)


def test_random_compositions_match_central_differences(rng):
    """All five components vs FD (step 1e-5) of the same scalar function.

    The differences are evaluated in 50-digit arithmetic so the check is
    limited by FD truncation only; tolerance 1e-6 relative (floored at 1).
    """
    with mpmath.workdps(50):
        h = mpmath.mpf("1e-5")
        checked = 0
        while checked < 20:
            tree = _random_tree(rng, depth=int(rng.integers(1, 4)))
            x0, y0 = (float(v) for v in rng.uniform(-1.0, 1.0, 2))
            const = float(rng.uniform(0.3, 1.5))
            jet = _eval_jet(tree, *seed_input(x0, y0), const)
            if jet.dx == 0.0 and jet.dy == 0.0 and jet.val == 0.0:
                continue  # degenerate constant tree, try another
            checked += 1

            def f(xx, yy):
                return _eval_mp(tree, xx, yy, const)

            x, y = mpmath.mpf(x0), mpmath.mpf(y0)
            mid = f(x, y)
            fd = {
                "val": mid,
                "dx": (f(x + h, y) - f(x - h, y)) / (2 * h),
                "dy": (f(x, y + h) - f(x, y - h)) / (2 * h),
                "dxx": (f(x + h, y) - 2 * mid + f(x - h, y)) / h**2,
                "dyy": (f(x, y + h) - 2 * mid + f(x, y - h)) / h**2,
            }
            for name, reference in fd.items():
                got = getattr(jet, name)
                err = abs(got - float(reference))
                assert err <= 1e-6 * max(1.0, abs(got)), (tree, name, got, float(reference))


def test_constant_compositions_have_zero_derivatives(rng):
    for _ in range(25):
        tree = _random_tree(rng, depth=int(rng.integers(1, 4)))
        const = float(rng.uniform(-1.0, 1.0))
        a = jet_const(0.4)
        b = jet_const(-1.2)
        jet = _eval_jet(tree, a, b, const)
        assert (jet.dx, jet.dy, jet.dxx, jet.dyy) == (0.0, 0.0, 0.0, 0.0)


def test_jets_accept_arrays():
    x = np.array([0.1, 0.5, 0.9])
    y = np.array([0.2, 0.4, 0.6])
    jx = Jet2(x, np.ones(3), np.zeros(3), np.zeros(3), np.zeros(3))
    jy = Jet2(y, np.zeros(3), np.ones(3), np.zeros(3), np.zeros(3))
    out = jet_unary(jet_mul(jx, jy), "tanh")
    for i in range(3):
        sx, sy = seed_input(float(x[i]), float(y[i]))
        scalar = jet_unary(jet_mul(sx, sy), "tanh")
        assert out.val[i] == scalar.val
        assert out.dxx[i] == scalar.dxx
