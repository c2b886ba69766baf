# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see _pykernels for the contract).

Accumulation order per output element matches the numpy fallback, so both
backends produce bitwise-identical float64 results.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _conv_into(double[:, ::1] out, const double[:, ::1] a, const double[:, ::1] b) noexcept nogil:
    # out[j, t + k] += a[j, k] * b[j, t], t over the second operand
    cdef Py_ssize_t j, t, k
    cdef Py_ssize_t nj = a.shape[0], la = a.shape[1], lb = b.shape[1]
    cdef double bv
    for t in range(lb):
        for j in range(nj):
            bv = b[j, t]
            if bv != 0.0:
                for k in range(la):
                    out[j, t + k] += a[j, k] * bv


def convolve_batch(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t ja = a.shape[0], la = a.shape[1]
    cdef Py_ssize_t jb = b.shape[0], lb = b.shape[1]
    if ja != jb:
        raise ValueError(f"batch sizes differ: {ja} != {jb}")
    out_arr = np.zeros((ja, la + lb - 1))
    cdef double[:, ::1] out = out_arr
    # same operand order as the numpy fallback: loop over the shorter one
    with nogil:
        if lb <= la:
            _conv_into(out, a, b)
        else:
            _conv_into(out, b, a)
    return out_arr


def scatter_rows(const double[::1] weights, const long long[::1] row_index, Py_ssize_t num_rows):
    out_arr = np.zeros(num_rows)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, n = weights.shape[0]
    with nogil:
        for j in range(n):
            out[row_index[j]] += weights[j]
    return out_arr


def gather_likelihood(
    double[:, ::1] like,
    const double[:, ::1] table,
    const long long[::1] row_index,
    const long long[::1] states,
):
    cdef Py_ssize_t s, j
    cdef Py_ssize_t ns = like.shape[0], nj = like.shape[1]
    cdef long long st
    with nogil:
        for s in range(ns):
            st = states[s]
            if st < 0:
                continue
            for j in range(nj):
                like[s, j] *= table[row_index[j], st]


cdef void _pava_row(
    double[::1] y,
    const double[::1] wl,
    double[::1] vals,
    double[::1] wts,
    long long[::1] sizes,
    Py_ssize_t n,
) noexcept nogil:
    # single-row variant of pava_batch writing the fit back into y
    cdef Py_ssize_t i, c, pos, top = 0
    cdef double v1, v2, w1, w2, wt, v
    for i in range(n):
        vals[top] = y[i]
        wts[top] = wl[i]
        sizes[top] = 1
        top += 1
        while top > 1 and vals[top - 2] > vals[top - 1]:
            v2 = vals[top - 1]
            w2 = wts[top - 1]
            v1 = vals[top - 2]
            w1 = wts[top - 2]
            wt = w1 + w2
            vals[top - 2] = (v1 * w1 + v2 * w2) / wt
            wts[top - 2] = wt
            sizes[top - 2] = sizes[top - 2] + sizes[top - 1]
            top -= 1
    pos = 0
    for i in range(top):
        v = vals[i]
        for c in range(sizes[i]):
            y[pos] = v
            pos += 1


cdef double _worst_step_down(
    const double[:, ::1] levels,
    const long long[::1] fibers,
    const long long[::1] starts,
    const long long[::1] counts,
    const long long[::1] lengths,
) noexcept nogil:
    cdef Py_ssize_t a, f, l, i, base, count, length
    cdef Py_ssize_t num_axes = counts.shape[0], num_levels = levels.shape[0]
    cdef double worst = 0.0, d
    for a in range(num_axes):
        count = counts[a]
        length = lengths[a]
        for f in range(count):
            base = starts[a] + f * length
            for l in range(num_levels):
                for i in range(length - 1):
                    d = levels[l, fibers[base + i]] - levels[l, fibers[base + i + 1]]
                    if d > worst:
                        worst = d
    return worst


def sweep_levels(
    double[:, ::1] levels,
    const long long[::1] fibers,
    const long long[::1] starts,
    const long long[::1] counts,
    const long long[::1] lengths,
    const double[::1] w,
    double tol,
    Py_ssize_t max_sweeps,
):
    cdef Py_ssize_t num_axes = counts.shape[0], num_levels = levels.shape[0]
    cdef Py_ssize_t a, f, l, i, base, count, length, sweep
    cdef Py_ssize_t max_len = 1
    for a in range(num_axes):
        if lengths[a] > max_len:
            max_len = lengths[a]
    y_arr = np.empty(max_len)
    wl_arr = np.empty(max_len)
    vals_arr = np.empty(max_len)
    wts_arr = np.empty(max_len)
    sizes_arr = np.empty(max_len, dtype=np.int64)
    cdef double[::1] y = y_arr
    cdef double[::1] wl = wl_arr
    cdef double[::1] vals = vals_arr
    cdef double[::1] wts = wts_arr
    cdef long long[::1] sizes = sizes_arr
    cdef long long result = -1
    with nogil:
        if _worst_step_down(levels, fibers, starts, counts, lengths) <= tol:
            result = 0
        else:
            for sweep in range(1, max_sweeps + 1):
                for a in range(num_axes):
                    count = counts[a]
                    length = lengths[a]
                    for f in range(count):
                        base = starts[a] + f * length
                        for i in range(length):
                            wl[i] = w[fibers[base + i]]
                        for l in range(num_levels):
                            for i in range(length):
                                y[i] = levels[l, fibers[base + i]]
                            _pava_row(y, wl, vals, wts, sizes, length)
                            for i in range(length):
                                levels[l, fibers[base + i]] = y[i]
                if _worst_step_down(levels, fibers, starts, counts, lengths) <= tol:
                    result = sweep
                    break
    return int(result)


def pava_batch(const double[:, ::1] y, const double[:, ::1] w):
    cdef Py_ssize_t rows = y.shape[0], n = y.shape[1]
    out_arr = np.empty((rows, n))
    cdef double[:, ::1] out = out_arr
    if n == 0:
        return out_arr
    vals_arr = np.empty(n)
    wts_arr = np.empty(n)
    sizes_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] vals = vals_arr
    cdef double[::1] wts = wts_arr
    cdef long long[::1] sizes = sizes_arr
    cdef Py_ssize_t r, i, c, top, pos
    cdef double v1, v2, w1, w2, wt, v
    with nogil:
        for r in range(rows):
            top = 0
            for i in range(n):
                vals[top] = y[r, i]
                wts[top] = w[r, i]
                sizes[top] = 1
                top += 1
                while top > 1 and vals[top - 2] > vals[top - 1]:
                    v2 = vals[top - 1]
                    w2 = wts[top - 1]
                    v1 = vals[top - 2]
                    w1 = wts[top - 2]
                    wt = w1 + w2
                    vals[top - 2] = (v1 * w1 + v2 * w2) / wt
                    wts[top - 2] = wt
                    sizes[top - 2] = sizes[top - 2] + sizes[top - 1]
                    top -= 1
            pos = 0
            for i in range(top):
                v = vals[i]
                for c in range(sizes[i]):
                    out[r, pos] = v
                    pos += 1
    return out_arr
