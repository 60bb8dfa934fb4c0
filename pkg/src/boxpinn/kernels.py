"""Hot numeric kernels with two interchangeable implementations.

The compiled extension (``boxpinn._corekern``, Cython) is used when it
imported successfully; otherwise the numpy fallbacks below take over. Both
implementations are written to produce bitwise-identical results:

* the fallbacks accumulate over the batch axis with ``np.add.reduce(axis=0)``,
  which numpy performs as a sequential left-to-right row accumulation for
  multi-dimensional arrays (pairwise summation only applies to the innermost
  axis), matching the compiled loops;
* the extension is built with ``-ffp-contract=off`` so the compiler cannot
  fuse multiply-adds that the fallbacks perform as separate roundings.

``set_backend("python")`` forces the fallbacks at runtime (used by the parity
tests and the benchmark); ``BOXPINN_NO_EXT=1`` skips loading the extension
altogether.
"""

from __future__ import annotations

import os

import numpy as np

_corekern = None
if os.environ.get("BOXPINN_NO_EXT") != "1":
    try:
        from boxpinn import _corekern  # type: ignore[attr-defined]
    except ImportError:
        _corekern = None

HAVE_EXTENSION = _corekern is not None

_active = "compiled" if HAVE_EXTENSION else "python"


def active_backend() -> str:
    """Name of the kernel implementation in use: "compiled" or "python"."""
    return _active


_malloc_tuned = False


def tune_malloc() -> None:
    """Keep large numpy buffers reusable across training iterations.

    Training allocates and frees several multi-megabyte arrays per step;
    with glibc defaults those buffers are mmap'd and unmapped every time,
    and the resulting page-fault churn dominates the step cost. Raising the
    mmap and trim thresholds keeps the buffers on the heap. Safe no-op on
    platforms without mallopt.
    """
    global _malloc_tuned
    if _malloc_tuned:
        return
    _malloc_tuned = True
    try:
        import ctypes

        libc = ctypes.CDLL(None)
        m_trim_threshold, m_mmap_threshold = -1, -3
        libc.mallopt(m_trim_threshold, 1 << 30)
        libc.mallopt(m_mmap_threshold, 1 << 30)
    except (OSError, AttributeError):
        pass


def set_backend(name: str) -> None:
    """Select the kernel implementation at runtime.

    Raises RuntimeError when "compiled" is requested but the extension is
    not available.
    """
    global _active
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "compiled" and not HAVE_EXTENSION:
        raise RuntimeError("compiled kernels are not available in this install")
    _active = name


# ---------------------------------------------------------------------------
# Successive over-relaxation sweep


def sor_sweep(u: np.ndarray, omega: float) -> float:
    """One in-place row-major SOR sweep over the interior of ``u``.

    Returns the largest absolute nodal update of the sweep.
    """
    if _active == "compiled":
        return _corekern.sor_sweep(u, float(omega))
    return _sor_sweep_py(u, omega)


def _sor_sweep_py(u: np.ndarray, omega: float) -> float:
    # Row-major Gauss-Seidel has loop-carried dependencies along rows and
    # columns, but cells on one anti-diagonal only read the two neighbouring
    # diagonals, so sweeping diagonal-by-diagonal reads exactly the same
    # values as the row-major order and yields a bitwise-identical grid.
    n = u.shape[0]
    best = 0.0
    for d in range(2, 2 * n - 3):
        jlo = max(1, d - (n - 2))
        jhi = min(n - 2, d - 1)
        js = np.arange(jlo, jhi + 1)
        cols = d - js
        centre = u[js, cols]
        total = u[js - 1, cols] + u[js + 1, cols] + u[js, cols - 1] + u[js, cols + 1]
        fresh = centre + omega * (0.25 * total - centre)
        step = np.abs(fresh - centre)
        if step.size:
            best = max(best, float(step.max()))
        u[js, cols] = fresh
    return best


# ---------------------------------------------------------------------------
# B-spline basis triangles (local de Boor scheme)


def bspline_triangles(
    t: np.ndarray, knots: np.ndarray, order: int, grid_size: int, nder: int
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Nonzero basis values at each point, for spline orders k down to k-nder.

    ``t`` is a flat array of evaluation points; ``knots`` the full uniform
    knot vector (length grid_size + 2*order + 1). Points outside the grid
    range are evaluated on the polynomial extension of the boundary interval.

    Returns ``(span, [T_k, T_{k-1}, ...])`` where ``span[p]`` is the knot
    interval used for point p and ``T_m[p, r]`` the value of the r-th
    locally supported basis function of order m. Orders below zero are
    omitted.
    """
    t = np.ascontiguousarray(t, dtype=np.float64)
    k = order
    norders = min(nder, k) + 1
    npts = t.shape[0]
    tris = [np.zeros((npts, k - m + 1)) for m in range(norders)]
    span = np.zeros(npts, dtype=np.int64)
    if _active == "compiled":
        _corekern.bspline_triangles(t, knots, k, grid_size, span, tris)
        return span, tris
    _bspline_triangles_py(t, knots, k, grid_size, span, tris)
    return span, tris


def _bspline_triangles_py(t, knots, k, grid_size, span, tris):
    lo = knots[k]
    h = knots[k + 1] - knots[k]
    idx = np.floor((t - lo) / h)
    np.clip(idx, 0, grid_size - 1, out=idx)
    span[:] = idx.astype(np.int64) + k

    npts = t.shape[0]
    left = np.zeros((npts, k + 1))
    right = np.zeros((npts, k + 1))
    for j in range(1, k + 1):
        left[:, j] = t - knots[span + 1 - j]
        right[:, j] = knots[span + j] - t

    norders = len(tris)
    vals = np.zeros((npts, k + 1))
    vals[:, 0] = 1.0
    if k - 0 < norders:  # order-0 triangle requested (k == nder)
        tris[k][:, 0] = 1.0
    for j in range(1, k + 1):
        saved = np.zeros(npts)
        for r in range(j):
            temp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved
        m = k - j  # tris index holding order-j values
        if m < norders:
            tris[m][:, : j + 1] = vals[:, : j + 1]


# ---------------------------------------------------------------------------
# Deterministic gradient accumulation


def outer_accum(x: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Sum of per-row outer products ``x[b,:] (x) d[b,:]``, left to right."""
    if _active == "compiled":
        out = np.zeros((x.shape[1], d.shape[1]))
        _corekern.outer_accum(
            np.ascontiguousarray(x), np.ascontiguousarray(d), out
        )
        return out
    return np.add.reduce(x[:, :, None] * d[:, None, :], axis=0)


def batch_sum(a: np.ndarray) -> np.ndarray:
    """Sum over the leading (batch) axis, sequentially from row 0 upward."""
    if a.ndim == 1:
        # 1-D reductions would use pairwise summation; keep the sequential
        # contract by reducing a column view instead.
        return np.add.reduce(a.reshape(-1, 1), axis=0)[0]
    return np.add.reduce(a, axis=0)
