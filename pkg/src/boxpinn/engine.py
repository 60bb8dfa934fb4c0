"""Reverse-mode automatic differentiation over batched numpy arrays.

The network forward passes (including their derivative-carrying jet
components) are ordinary compositions of the array operations below, so one
backward sweep over the recorded graph yields exact loss gradients with
respect to every network parameter - second input-derivatives included.

Reduction discipline:

* reductions over the batch axis (weight-gradient accumulation, broadcast
  unwinding) run sequentially from the first sample to the last, so results
  are reproducible and independent of any parallel execution strategy; the
  ``deterministic_mode`` switch only selects between the sequential kernels
  (default) and BLAS reductions for the weight gradients;
* scalar loss reductions (``mean_batch``) use exactly rounded summation
  (``math.fsum``), which makes batch means independent of sample order.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import numpy as np

from boxpinn import kernels
from boxpinn.errors import DivergenceError

_deterministic = True


def is_deterministic() -> bool:
    """Whether batch reductions must follow the sequential sample order."""
    return _deterministic


@contextmanager
def deterministic_mode(flag: bool):
    """Temporarily select sequential (True) or BLAS (False) batch reductions."""
    global _deterministic
    previous = _deterministic
    _deterministic = bool(flag)
    try:
        yield
    finally:
        _deterministic = previous


def _sigmoid_array(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce an upstream gradient back to a broadcast operand's shape."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = kernels.batch_sum(g)
    for axis, (have, want) in enumerate(zip(g.shape, shape)):
        if want == 1 and have != 1:
            g = np.add.reduce(g, axis=axis, keepdims=True)
    return g


class Tensor:
    """A node in the computation graph wrapping a float64 array."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")
    __array_ufunc__ = None  # make numpy defer binary ops to this class

    def __init__(self, data, requires_grad=False, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = parents
        self._vjp = vjp

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # ----- graph construction helpers -----

    def _add_grad(self, g, owned=False):
        """Accumulate a gradient contribution.

        ``owned=True`` donates ``g`` (the caller just allocated it and hands
        it over); otherwise the first contribution is copied, since ``g``
        may be shared with, or be a view into, another node's gradient.
        """
        if self.grad is None:
            self.grad = g if owned else np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self):
        """Accumulate gradients of this scalar into every reachable leaf."""
        if self.data.ndim != 0:
            raise ValueError("backward() expects a scalar output")
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._vjp is not None:
                node._vjp(node.grad)

    # ----- operators -----

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(as_tensor(other), -1.0))

    def __rsub__(self, other):
        return add(as_tensor(other), mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division by a Tensor is not supported")
        return mul(self, 1.0 / float(other))

    def __pow__(self, exponent):
        if exponent != 2:
            raise ValueError("only squaring is supported")
        return mul(self, self)

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def __rmatmul__(self, other):
        return matmul(as_tensor(other), self)

    def __getitem__(self, key):
        return take(self, key)

    def reshape(self, *shape):
        return reshape(self, *shape)

    def tanh(self):
        return tanh(self)

    def sigmoid(self):
        return sigmoid(self)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def custom_op(data, parents, vjp) -> Tensor:
    """Create a graph node with an explicit vector-Jacobian product.

    ``vjp(g)`` must accumulate into the parents' grads via ``_add_grad``.
    The node is detached when no parent requires gradients.
    """
    parents = tuple(parents)
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=parents, vjp=vjp)
    return Tensor(data)


# ---------------------------------------------------------------------------
# primitive operations


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def vjp(g):
        if a.requires_grad:
            ga = _unbroadcast(g, a.data.shape)
            a._add_grad(ga, owned=ga is not g)
        if b.requires_grad:
            gb = _unbroadcast(g, b.data.shape)
            b._add_grad(gb, owned=gb is not g)

    return custom_op(data, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def vjp(g):
        if a.requires_grad:
            a._add_grad(_unbroadcast(g * b.data, a.data.shape), owned=True)
        if b.requires_grad:
            b._add_grad(_unbroadcast(g * a.data, b.data.shape), owned=True)

    return custom_op(data, (a, b), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product ``a @ b`` with 2-D ``b``; leading axes of ``a`` batch."""
    data = a.data @ b.data
    n_in, n_out = b.data.shape

    def vjp(g):
        if a.requires_grad:
            a._add_grad(g @ b.data.T, owned=True)
        if b.requires_grad:
            if _deterministic:
                b._add_grad(kernels.outer_accum(a.data.reshape(-1, n_in), g.reshape(-1, n_out)), owned=True)
            else:
                b._add_grad(a.data.reshape(-1, n_in).T @ g.reshape(-1, n_out), owned=True)

    return custom_op(data, (a, b), vjp)


def take(a: Tensor, key) -> Tensor:
    data = a.data[key]

    def vjp(g):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            a.grad[key] += g

    return custom_op(data, (a,), vjp)


def reshape(a: Tensor, *shape) -> Tensor:
    if len(shape) == 1 and isinstance(shape[0], tuple):
        shape = shape[0]
    data = a.data.reshape(shape)

    def vjp(g):
        if a.requires_grad:
            a._add_grad(g.reshape(a.data.shape))

    return custom_op(data, (a,), vjp)


def tanh(x):
    if isinstance(x, Tensor):
        out = np.tanh(x.data)

        def vjp(g):
            x._add_grad(g * (1.0 - out * out), owned=True)

        return custom_op(out, (x,), vjp)
    if isinstance(x, np.ndarray):
        return np.tanh(x)
    return math.tanh(x)


def sigmoid(x):
    if isinstance(x, Tensor):
        out = _sigmoid_array(x.data)

        def vjp(g):
            x._add_grad(g * (out * (1.0 - out)), owned=True)

        return custom_op(out, (x,), vjp)
    if isinstance(x, np.ndarray):
        return _sigmoid_array(x)
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


def mean_batch(a: Tensor) -> Tensor:
    """Exactly rounded mean of a 1-D batch vector.

    fsum makes the result independent of sample order, so losses built on
    this reduction are permutation invariant bit for bit.
    """
    if a.data.ndim != 1:
        raise ValueError("mean_batch expects a 1-D vector")
    n = a.data.shape[0]
    data = math.fsum(a.data) / n

    def vjp(g):
        if a.requires_grad:
            a._add_grad(np.full(n, float(g) / n), owned=True)

    return custom_op(data, (a,), vjp)


# ---------------------------------------------------------------------------
# parameter gradients


def gradient(loss_eval, theta: np.ndarray, deterministic: bool = True) -> np.ndarray:
    """Gradient of ``loss_eval`` (parameter vector -> scalar Tensor) at theta."""
    leaf = Tensor(np.array(theta, dtype=np.float64, copy=True), requires_grad=True)
    with deterministic_mode(deterministic):
        loss = loss_eval(leaf)
        if not isinstance(loss, Tensor) or loss.data.ndim != 0:
            raise TypeError("loss_eval must return a scalar Tensor")
        if not np.isfinite(loss.data):
            raise DivergenceError("loss evaluated to a non-finite value")
        loss.backward()
    if leaf.grad is None:
        return np.zeros_like(leaf.data)
    grad = np.asarray(leaf.grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("gradient contains non-finite entries")
    return grad


def parameter_gradient(model, loss_eval, deterministic: bool = True) -> np.ndarray:
    """Gradient of a traced loss closure with respect to ``model.params``.

    Returns a flat float64 vector aligned with the model's parameter layout.
    """
    return gradient(loss_eval, np.asarray(model.params, dtype=np.float64), deterministic)
