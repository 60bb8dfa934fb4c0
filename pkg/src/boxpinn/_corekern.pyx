# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled twins of the numpy kernels in boxpinn.kernels.

Every routine mirrors its fallback operation for operation (same expressions,
same accumulation order) so results are bitwise identical; the build disables
FP contraction to keep it that way.
"""

from libc.math cimport fabs, floor
from libc.stdint cimport int64_t


def sor_sweep(double[:, ::1] u, double omega):
    """One in-place row-major SOR sweep; returns the max absolute update."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j
    cdef double c, total, fresh, step
    cdef double best = 0.0
    for j in range(1, n - 1):
        for i in range(1, n - 1):
            c = u[j, i]
            total = u[j - 1, i] + u[j + 1, i] + u[j, i - 1] + u[j, i + 1]
            fresh = c + omega * (0.25 * total - c)
            step = fabs(fresh - c)
            if step > best:
                best = step
            u[j, i] = fresh
    return best


cdef inline double[:, ::1] _tri_view(list tris, int m, double[:, ::1] fallback):
    if m < len(tris):
        return tris[m]
    return fallback


def bspline_triangles(double[::1] t, double[::1] knots, int k, int grid_size,
                      int64_t[::1] span, list tris):
    """Fill ``span`` and the local basis triangles for orders k, k-1, ..."""
    cdef Py_ssize_t npts = t.shape[0]
    cdef int norders = len(tris)
    cdef double lo = knots[k]
    cdef double h = knots[k + 1] - knots[k]
    cdef double[:, ::1] t0 = tris[0]
    cdef double[:, ::1] t1 = _tri_view(tris, 1, t0)
    cdef double[:, ::1] t2 = _tri_view(tris, 2, t0)
    cdef double[:, ::1] t3 = _tri_view(tris, 3, t0)

    cdef double vals[8]
    cdef double left[8]
    cdef double right[8]
    cdef Py_ssize_t p, sp
    cdef int j, r, m
    cdef double idx, saved, temp

    if k + 1 > 8:
        raise ValueError("spline order too large for compiled kernel")
    if norders > k + 1:
        raise ValueError("more triangle orders requested than exist")

    for p in range(npts):
        idx = floor((t[p] - lo) / h)
        if idx < 0.0:
            idx = 0.0
        elif idx > grid_size - 1:
            idx = grid_size - 1
        sp = <Py_ssize_t> idx + k
        span[p] = sp

        for j in range(1, k + 1):
            left[j] = t[p] - knots[sp + 1 - j]
            right[j] = knots[sp + j] - t[p]

        vals[0] = 1.0
        if k < norders:
            # order-0 triangle requested: it lives at tris[k], k in {1, 2, 3}
            if k == 1:
                t1[p, 0] = 1.0
            elif k == 2:
                t2[p, 0] = 1.0
            elif k == 3:
                t3[p, 0] = 1.0
        for j in range(1, k + 1):
            saved = 0.0
            for r in range(j):
                temp = vals[r] / (right[r + 1] + left[j - r])
                vals[r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            vals[j] = saved
            m = k - j
            if m < norders:
                if m == 0:
                    for r in range(j + 1):
                        t0[p, r] = vals[r]
                elif m == 1:
                    for r in range(j + 1):
                        t1[p, r] = vals[r]
                elif m == 2:
                    for r in range(j + 1):
                        t2[p, r] = vals[r]
                elif m == 3:
                    for r in range(j + 1):
                        t3[p, r] = vals[r]


def outer_accum(double[:, ::1] x, double[:, ::1] d, double[:, ::1] out):
    """out[i, j] += sum_b x[b, i] * d[b, j], accumulated in batch order.

    Works block-by-block over the batch with a local accumulator row, which
    lets the compiler vectorize the inner loop; each (i, j) element still
    sees its contributions in ascending batch order, so the result is
    bitwise identical to the plain left-to-right loop.
    """
    cdef Py_ssize_t nb = x.shape[0]
    cdef Py_ssize_t ni = x.shape[1]
    cdef Py_ssize_t nj = d.shape[1]
    cdef Py_ssize_t b, b0, bhi, i, j
    cdef double xv
    cdef double acc[64]
    if nj > 64:
        for b in range(nb):
            for i in range(ni):
                xv = x[b, i]
                for j in range(nj):
                    out[i, j] += xv * d[b, j]
        return
    for b0 in range(0, nb, 128):
        bhi = b0 + 128
        if bhi > nb:
            bhi = nb
        for i in range(ni):
            for j in range(nj):
                acc[j] = out[i, j]
            for b in range(b0, bhi):
                xv = x[b, i]
                for j in range(nj):
                    acc[j] = acc[j] + xv * d[b, j]
            for j in range(nj):
                out[i, j] = acc[j]
