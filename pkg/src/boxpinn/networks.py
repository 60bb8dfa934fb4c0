"""The two solution-network backends behind one jet-propagating forward pass.

* ``mlp``: affine layers with tanh on hidden layers and a linear readout
  (a bounded readout could never reach the excited-side potential).
* ``kan``: every inter-layer edge applies its own learnable univariate
  function ``w_b * silu(t) + w_s * sum_c coeff_c * B_c(t)`` and each target
  neuron sums its incoming edges; there are no per-neuron biases. Inputs
  are mapped affinely from the unit square onto the spline grid range
  before the first layer; hidden activations are not re-gridded, so the
  parameter vector has a fixed layout for the whole run.

Parameters live in one flat float64 vector per model. The forward pass is
generic over plain arrays and autodiff tensors: evaluating with the stored
parameter vector is an ordinary numpy computation, while passing a traced
parameter tensor records the graph needed for loss gradients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from boxpinn import engine, kernels, splines
from boxpinn.errors import ConfigError
from boxpinn.jets import Jet2, compose_unary, jet_add, jet_scale, jet_unary

MLP = "mlp"
KAN = "kan"
BACKENDS = (MLP, KAN)

DEFAULT_MLP_WIDTHS = [2, 32, 32, 1]
DEFAULT_KAN_WIDTHS = [2, 5, 5, 1]

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class KanHyper:
    """Spline hyperparameters shared by every KAN edge."""

    grid_size: int = 5
    spline_order: int = 3
    grid_range: tuple[float, float] = (-1.0, 1.0)

    @property
    def coeffs_per_edge(self) -> int:
        return self.grid_size + self.spline_order

    def basis(self) -> splines.SplineBasis:
        lo, hi = self.grid_range
        return splines.SplineBasis.uniform(self.grid_size, self.spline_order, lo, hi)


DEFAULT_KAN_HYPER = KanHyper()


@dataclass
class NetworkModel:
    """Architecture descriptor plus the flat parameter vector."""

    backend: str
    layer_widths: list[int]
    kan_hyper: Optional[KanHyper]
    params: np.ndarray
    seed: int = 0

    @property
    def param_count(self) -> int:
        return self.params.shape[0]


def mlp_param_count(widths) -> int:
    return sum(wi * wo + wo for wi, wo in zip(widths[:-1], widths[1:]))


def kan_param_count(widths, hyper: KanHyper) -> int:
    edges = sum(wi * wo for wi, wo in zip(widths[:-1], widths[1:]))
    return edges * (hyper.coeffs_per_edge + 2)


def _validate_widths(widths):
    widths = [int(w) for w in widths]
    if len(widths) < 2:
        raise ConfigError("layer widths need at least an input and an output layer")
    if widths[0] != 2:
        raise ConfigError("input layer must have width 2 (the two coordinates)")
    if widths[-1] != 1:
        raise ConfigError("output layer must have width 1 (the potential)")
    if any(w < 1 for w in widths):
        raise ConfigError("layer widths must be positive")
    return widths


def init_model(backend, layer_widths, kan_hyper=None, seed=0) -> NetworkModel:
    """Build a freshly initialized model; identical seeds give identical params.

    MLP weights are uniform in +-sqrt(6 / (fan_in + fan_out)) with zero
    biases. KAN spline coefficients are gaussian with standard deviation
    0.1, base weights follow the MLP rule, and the spline scales start at 1.
    """
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r}")
    widths = _validate_widths(layer_widths)
    rng = np.random.default_rng(seed)
    pieces = []
    if backend == MLP:
        for wi, wo in zip(widths[:-1], widths[1:]):
            bound = np.sqrt(6.0 / (wi + wo))
            pieces.append(rng.uniform(-bound, bound, (wi, wo)).ravel())
            pieces.append(np.zeros(wo))
        hyper = None
    else:
        hyper = kan_hyper if kan_hyper is not None else DEFAULT_KAN_HYPER
        ncoef = hyper.coeffs_per_edge
        for wi, wo in zip(widths[:-1], widths[1:]):
            bound = np.sqrt(6.0 / (wi + wo))
            pieces.append(rng.normal(0.0, 0.1, (wo, wi, ncoef)).ravel())
            pieces.append(rng.uniform(-bound, bound, (wo, wi)).ravel())
            pieces.append(np.ones(wo * wi))
        hyper.basis()  # validates the hyperparameters early
    params = np.concatenate(pieces)
    return NetworkModel(backend, widths, hyper, params, seed=int(seed))


def default_model(backend, seed=0) -> NetworkModel:
    if backend == MLP:
        return init_model(MLP, DEFAULT_MLP_WIDTHS, seed=seed)
    return init_model(KAN, DEFAULT_KAN_WIDTHS, DEFAULT_KAN_HYPER, seed=seed)


# ---------------------------------------------------------------------------
# parameter layout


def _segment(p, offset, shape):
    size = int(np.prod(shape))
    return p[offset : offset + size].reshape(shape), offset + size


def _mlp_layer_views(p, widths):
    offset = 0
    for wi, wo in zip(widths[:-1], widths[1:]):
        weight, offset = _segment(p, offset, (wi, wo))
        bias, offset = _segment(p, offset, (wo,))
        yield weight, bias


def _kan_layer_views(p, widths, ncoef):
    offset = 0
    for wi, wo in zip(widths[:-1], widths[1:]):
        coeffs, offset = _segment(p, offset, (wo, wi, ncoef))
        base_w, offset = _segment(p, offset, (wo, wi))
        scale_w, offset = _segment(p, offset, (wo, wi))
        yield coeffs, base_w, scale_w


# ---------------------------------------------------------------------------
# layer operations
#
# Jets travel between layers as one stacked block of shape (5, batch, width)
# whose rows are the value, d/dx, d/dy, d2/dx2 and d2/dy2 components. Each
# layer is a single graph node with a hand-derived vector-Jacobian product:
# the forward jet rules below are simple enough that closed-form backward
# formulas stay manageable, and the finite-difference contracts in the test
# suite pin them down.

ROW_VAL, ROW_DX, ROW_DY, ROW_DXX, ROW_DYY = range(5)


def _weight_grad(inputs: np.ndarray, g: np.ndarray, n_in: int, n_out: int) -> np.ndarray:
    if engine.is_deterministic():
        return kernels.outer_accum(inputs.reshape(-1, n_in), g.reshape(-1, n_out))
    return inputs.reshape(-1, n_in).T @ g.reshape(-1, n_out)


def _mlp_affine_block(block, weight, bias):
    """z = block @ W, with the bias added to the value row only."""
    plain = not any(isinstance(v, engine.Tensor) for v in (block, weight, bias))
    if plain:
        z = block @ weight
        z[ROW_VAL] += bias
        return z
    bt, wt, ct = engine.as_tensor(block), engine.as_tensor(weight), engine.as_tensor(bias)
    data = bt.data @ wt.data
    data[ROW_VAL] += ct.data
    n_in, n_out = wt.data.shape

    def vjp(g):
        if bt.requires_grad:
            bt._add_grad(g @ wt.data.T, owned=True)
        if wt.requires_grad:
            wt._add_grad(_weight_grad(bt.data, g, n_in, n_out), owned=True)
        if ct.requires_grad:
            ct._add_grad(kernels.batch_sum(g[ROW_VAL]), owned=True)

    return engine.custom_op(data, (bt, wt, ct), vjp)


def _tanh_jet_forward(z: np.ndarray):
    # writes straight into a preallocated block; these chains run on every
    # training step, so temporaries are kept to a minimum
    out = np.empty_like(z)
    t = np.tanh(z[ROW_VAL], out=out[ROW_VAL])
    t1 = 1.0 - t * t
    t2 = t * t1
    t2 *= -2.0
    d = z[1:3]
    h = z[3:5]
    np.multiply(t1, d, out=out[1:3])
    hi = np.multiply(d, d, out=out[3:5])
    hi *= t2
    hi += t1 * h
    return out, (t, t1, t2)


def _tanh_jet_block(z):
    """Jet chain rule for tanh on a whole (5, b, w) block."""
    if not isinstance(z, engine.Tensor):
        return _tanh_jet_forward(z)[0]
    out, (t, t1, t2) = _tanh_jet_forward(z.data)
    zd = z.data

    def vjp(g):
        d = zd[1:3]
        h = zd[3:5]
        g0, gd, gh = g[ROW_VAL], g[1:3], g[3:5]
        gbar = np.empty_like(g)
        ghd = gh * d
        # value row collects the tanh', tanh'' and tanh''' chains
        t2p = -2.0 * (t1 * t1 + t * t2)  # d(tanh'')/dz
        gbar0 = np.multiply(g0, t1, out=gbar[ROW_VAL])
        gbar0 += t2 * ((gd * d).sum(axis=0) + (gh * h).sum(axis=0))
        gbar0 += t2p * (ghd * d).sum(axis=0)
        gd_out = np.multiply(t1, gd, out=gbar[1:3])
        ghd *= 2.0 * t2
        gd_out += ghd
        np.multiply(t1, gh, out=gbar[3:5])
        z._add_grad(gbar, owned=True)

    return engine.custom_op(out, (z,), vjp)


def _silu_chain(x: np.ndarray):
    """silu(x) with its first and second derivatives (plus pieces for vjp)."""
    s = engine.sigmoid(x)
    sp = s * (1.0 - s)
    spp = sp * (1.0 - 2.0 * s)
    s0 = x * s
    s1 = s + x * sp
    s2 = 2.0 * sp + x * spp
    return s, sp, spp, s0, s1, s2


def _kan_block_forward(block: np.ndarray, coeffs, base_w, scale_w, basis, nder):
    b, n_in = block[ROW_VAL].shape
    x = block[ROW_VAL]
    s, sp, spp, s0, s1, s2 = _silu_chain(x)
    dense = splines.evaluate_basis(x.reshape(-1), basis, nder=nder)
    bas = [d.reshape(b, n_in, basis.num_basis) for d in dense]
    mix = [np.einsum("jic,bic->bji", coeffs, bm) for bm in bas[:3]]
    phi = [base_w * sm[:, None, :] + scale_w * mx for sm, mx in zip((s0, s1, s2), mix)]
    dxv, dyv = block[ROW_DX], block[ROW_DY]
    hxx, hyy = block[ROW_DXX], block[ROW_DYY]
    out = np.stack(
        [
            np.add.reduce(phi[0], axis=-1),
            np.einsum("bji,bi->bj", phi[1], dxv),
            np.einsum("bji,bi->bj", phi[1], dyv),
            np.einsum("bji,bi->bj", phi[2], dxv * dxv)
            + np.einsum("bji,bi->bj", phi[1], hxx),
            np.einsum("bji,bi->bj", phi[2], dyv * dyv)
            + np.einsum("bji,bi->bj", phi[1], hyy),
        ]
    )
    return out, (s, sp, spp, s0, s1, s2, bas, mix, phi)


def _kan_block(block, coeffs, base_w, scale_w, basis):
    """One KAN layer on a stacked jet block: learnable edges, summed per neuron."""
    plain = not any(isinstance(v, engine.Tensor) for v in (block, coeffs, base_w, scale_w))
    if plain:
        return _kan_block_forward(block, coeffs, base_w, scale_w, basis, nder=2)[0]
    bt = engine.as_tensor(block)
    ct, wbt, wst = engine.as_tensor(coeffs), engine.as_tensor(base_w), engine.as_tensor(scale_w)
    nder = 3 if bt.requires_grad else 2
    out, saved = _kan_block_forward(bt.data, ct.data, wbt.data, wst.data, basis, nder)
    s, sp, spp, s0, s1, s2, bas, mix, phi = saved

    def vjp(g):
        zd = bt.data
        x, dxv, dyv = zd[ROW_VAL], zd[ROW_DX], zd[ROW_DY]
        hxx, hyy = zd[ROW_DXX], zd[ROW_DYY]
        gval, gdx, gdy, gdxx, gdyy = g
        # adjoints of the per-edge function and its first two derivatives
        phibar0 = gval[:, :, None]
        phibar1 = (
            gdx[:, :, None] * dxv[:, None, :]
            + gdy[:, :, None] * dyv[:, None, :]
            + gdxx[:, :, None] * hxx[:, None, :]
            + gdyy[:, :, None] * hyy[:, None, :]
        )
        phibar2 = gdxx[:, :, None] * (dxv * dxv)[:, None, :] + gdyy[:, :, None] * (
            dyv * dyv
        )[:, None, :]
        phibars = (phibar0, phibar1, phibar2)
        if wbt.requires_grad:
            wbt._add_grad(
                kernels.batch_sum(
                    phibar0 * s0[:, None, :] + phibar1 * s1[:, None, :] + phibar2 * s2[:, None, :]
                ),
                owned=True,
            )
        if wst.requires_grad:
            wst._add_grad(
                kernels.batch_sum(phibar0 * mix[0] + phibar1 * mix[1] + phibar2 * mix[2]),
                owned=True,
            )
        sbar = [pb * wst.data for pb in phibars]
        if ct.requires_grad:
            contrib = (
                sbar[0][:, :, :, None] * bas[0][:, None, :, :]
                + sbar[1][:, :, :, None] * bas[1][:, None, :, :]
                + sbar[2][:, :, :, None] * bas[2][:, None, :, :]
            )
            ct._add_grad(kernels.batch_sum(contrib), owned=True)
        if bt.requires_grad:
            # value row: through the basis functions and the silu chain
            xbar = np.zeros_like(x)
            for m in range(3):
                basbar = np.einsum("bji,jic->bic", sbar[m], ct.data)
                xbar += np.add.reduce(basbar * bas[m + 1], axis=-1)
            silubar0 = gval @ wbt.data  # phibar0 is gval broadcast over edges
            silubar1 = np.einsum("bji,ji->bi", phibar1, wbt.data)
            silubar2 = np.einsum("bji,ji->bi", phibar2, wbt.data)
            sppp = spp * (1.0 - 2.0 * s) - 2.0 * (sp * sp)
            s2p = 3.0 * spp + x * sppp  # d(silu'')/dx
            xbar += silubar0 * s1 + silubar1 * s2 + silubar2 * s2p
            dxbar = np.einsum("bj,bji->bi", gdx, phi[1]) + 2.0 * dxv * np.einsum(
                "bj,bji->bi", gdxx, phi[2]
            )
            dybar = np.einsum("bj,bji->bi", gdy, phi[1]) + 2.0 * dyv * np.einsum(
                "bj,bji->bi", gdyy, phi[2]
            )
            hxxbar = np.einsum("bj,bji->bi", gdxx, phi[1])
            hyybar = np.einsum("bj,bji->bi", gdyy, phi[1])
            bt._add_grad(np.stack([xbar, dxbar, dybar, hxxbar, hyybar]), owned=True)

    return engine.custom_op(out, (bt, ct, wbt, wst), vjp)


def kan_edge(t: Jet2, base_weight: float, scale_weight: float, coeffs, basis) -> Jet2:
    """One learnable edge: base_weight * silu(t) + scale_weight * spline(t).

    The per-connection form of what ``_kan_block`` applies across a whole
    layer; accepts scalar or batched jets.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (basis.num_basis,):
        raise ValueError(f"expected {basis.num_basis} spline coefficients, got {coeffs.shape}")
    scalar = np.ndim(t.val) == 0
    flat = np.atleast_1d(np.asarray(t.val, dtype=np.float64))
    dense = splines.evaluate_basis(flat, basis, nder=2)
    value, d1, d2 = (level @ coeffs for level in dense)
    if scalar:
        value, d1, d2 = float(value[0]), float(d1[0]), float(d2[0])
    spline_jet = compose_unary(t, value, d1, d2)
    base_jet = jet_scale(jet_unary(t, "silu"), base_weight)
    return jet_add(base_jet, jet_scale(spline_jet, scale_weight))


# ---------------------------------------------------------------------------
# forward passes


def _jet_to_block(jet: Jet2) -> np.ndarray:
    return np.stack(
        [np.asarray(f, dtype=np.float64) for f in (jet.val, jet.dx, jet.dy, jet.dxx, jet.dyy)]
    )


def forward_jets(p, model: NetworkModel, jet: Jet2) -> Jet2:
    """Propagate batched input jets (fields of shape (b, 2)) to (b, 1)."""
    widths = model.layer_widths
    block = _jet_to_block(jet)
    if model.backend == MLP:
        nlayers = len(widths) - 1
        out = block
        for index, (weight, bias) in enumerate(_mlp_layer_views(p, widths)):
            out = _mlp_affine_block(out, weight, bias)
            if index != nlayers - 1:
                out = _tanh_jet_block(out)
    else:
        hyper = model.kan_hyper
        basis = hyper.basis()
        lo, hi = hyper.grid_range
        span = hi - lo
        mapped = block * span  # derivative rows scale linearly with the map
        mapped[ROW_VAL] = lo + span * block[ROW_VAL]
        out = mapped
        for coeffs, base_w, scale_w in _kan_layer_views(p, widths, hyper.coeffs_per_edge):
            out = _kan_block(out, coeffs, base_w, scale_w, basis)
    return Jet2(out[ROW_VAL], out[ROW_DX], out[ROW_DY], out[ROW_DXX], out[ROW_DYY])


def _stack_pair(a, b, length):
    out = np.empty((length, 2))
    out[:, 0] = a
    out[:, 1] = b
    return out


def forward(model: NetworkModel, jet_x: Jet2, jet_y: Jet2) -> Jet2:
    """Evaluate the network on a pair of coordinate jets.

    Accepts scalar jets (floats in every field) or batched jets (flat
    arrays); returns a jet of matching kind carrying u, u_x, u_y, u_xx, u_yy.
    """
    scalar = np.ndim(jet_x.val) == 0
    xv = np.atleast_1d(np.asarray(jet_x.val, dtype=np.float64))
    length = xv.shape[0]

    def both(attr):
        a = np.broadcast_to(np.asarray(getattr(jet_x, attr), dtype=np.float64), (length,))
        b = np.broadcast_to(np.asarray(getattr(jet_y, attr), dtype=np.float64), (length,))
        return _stack_pair(a, b, length)

    batched = Jet2(both("val"), both("dx"), both("dy"), both("dxx"), both("dyy"))
    out = forward_jets(np.asarray(model.params), model, batched)
    fields = [np.asarray(f).reshape(-1) for f in (out.val, out.dx, out.dy, out.dxx, out.dyy)]
    if scalar:
        return Jet2(*(float(f[0]) for f in fields))
    return Jet2(*fields)


def seed_batch(x: np.ndarray, y: np.ndarray) -> Jet2:
    """Standard coordinate seeding for a batch of points."""
    n = x.shape[0]
    val = _stack_pair(x, y, n)
    dx = np.zeros((n, 2))
    dx[:, 0] = 1.0
    dy = np.zeros((n, 2))
    dy[:, 1] = 1.0
    return Jet2(val, dx, dy, np.zeros((n, 2)), np.zeros((n, 2)))


def forward_values(model: NetworkModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solution values at a batch of points (derivatives discarded)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    out = forward_jets(np.asarray(model.params), model, seed_batch(x, y))
    return np.asarray(out.val).reshape(-1)


# ---------------------------------------------------------------------------
# persistence


def save_model(model: NetworkModel, path) -> None:
    """Write the model as JSON; floats round-trip exactly."""
    hyper = None
    if model.kan_hyper is not None:
        hyper = {
            "grid_size": model.kan_hyper.grid_size,
            "spline_order": model.kan_hyper.spline_order,
            "grid_range": list(model.kan_hyper.grid_range),
        }
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "backend": model.backend,
        "layer_widths": list(model.layer_widths),
        "kan_hyper": hyper,
        "seed": model.seed,
        "params": [float(v) for v in model.params],
    }
    with open(path, "w", encoding="ascii") as handle:
        json.dump(doc, handle, indent=1)
        handle.write("\n")


def load_model(path) -> NetworkModel:
    with open(path, "r", encoding="ascii") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("model file must hold a JSON object")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ConfigError(f"unsupported model format_version {doc.get('format_version')!r}")
    backend = doc.get("backend")
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r} in model file")
    widths = _validate_widths(doc.get("layer_widths", []))
    hyper_doc = doc.get("kan_hyper")
    hyper = None
    if backend == KAN:
        if not isinstance(hyper_doc, dict):
            raise ConfigError("kan model file requires a kan_hyper object")
        try:
            hyper = KanHyper(
                grid_size=int(hyper_doc["grid_size"]),
                spline_order=int(hyper_doc["spline_order"]),
                grid_range=(float(hyper_doc["grid_range"][0]), float(hyper_doc["grid_range"][1])),
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed kan_hyper: {exc}") from exc
        expected = kan_param_count(widths, hyper)
    elif hyper_doc is not None:
        raise ConfigError("mlp model file must not carry kan_hyper")
    else:
        expected = mlp_param_count(widths)
    params = np.asarray(doc.get("params", []), dtype=np.float64)
    if params.ndim != 1 or params.shape[0] != expected:
        raise ConfigError(
            f"parameter vector has length {params.size}, architecture needs {expected}"
        )
    if not np.all(np.isfinite(params)):
        raise ConfigError("parameter vector contains non-finite entries")
    return NetworkModel(backend, widths, hyper, params, seed=int(doc.get("seed", 0)))
