"""Numpy reference implementations of the hot kernels.

Semantics here define the contract; the compiled versions must match
bit-for-bit-compatible float64 arithmetic (same operation order per element).
"""

import numpy as np


def convolve_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise convolution of two batches of non-negative vectors.

    a: (J, la), b: (J, lb) -> (J, la + lb - 1); out[j] = conv(a[j], b[j]).
    """
    ja, la = a.shape
    jb, lb = b.shape
    if ja != jb:
        raise ValueError(f"batch sizes differ: {ja} != {jb}")
    out = np.zeros((ja, la + lb - 1))
    # iterate over the shorter operand so the python loop stays small
    if lb <= la:
        for t in range(lb):
            out[:, t : t + la] += a * b[:, t : t + 1]
    else:
        for t in range(la):
            out[:, t : t + lb] += b * a[:, t : t + 1]
    return out


def scatter_rows(weights: np.ndarray, row_index: np.ndarray, num_rows: int) -> np.ndarray:
    """Accumulate per-configuration weights into per-CPT-row totals."""
    return np.bincount(row_index, weights=weights, minlength=num_rows)


def gather_likelihood(
    like: np.ndarray, table: np.ndarray, row_index: np.ndarray, states: np.ndarray
) -> None:
    """Multiply per-student joint-config likelihoods by one question's CPT column.

    like: (S, J), updated in place; table: (R, K) CPT; row_index: (J,) maps
    joint config -> CPT row; states: (S,) observed state per student, -1 = missing
    (those rows of `like` are left untouched).
    """
    mask = states >= 0
    if not mask.any():
        return
    cols = table[row_index][:, states[mask]]  # (J, S_obs)
    like[mask] *= cols.T


def pava_batch(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row-wise weighted nondecreasing isotonic fit (pool adjacent violators).

    y, w: (B, L) with positive weights -> (B, L). Rows that are already
    nondecreasing come back unchanged; pooling uses strictly-greater
    comparison and the weighted mean (v1*w1 + v2*w2) / (w1 + w2).
    """
    out = np.empty_like(y, dtype=float)
    for r in range(y.shape[0]):
        vals: list[float] = []
        wts: list[float] = []
        sizes: list[int] = []
        for i in range(y.shape[1]):
            vals.append(float(y[r, i]))
            wts.append(float(w[r, i]))
            sizes.append(1)
            while len(vals) > 1 and vals[-2] > vals[-1]:
                v2, w2, c2 = vals.pop(), wts.pop(), sizes.pop()
                v1, w1, c1 = vals.pop(), wts.pop(), sizes.pop()
                wt = w1 + w2
                vals.append((v1 * w1 + v2 * w2) / wt)
                wts.append(wt)
                sizes.append(c1 + c2)
        pos = 0
        for v, c in zip(vals, sizes):
            out[r, pos : pos + c] = v
            pos += c
    return out


def sweep_levels(
    levels: np.ndarray,
    fibers: np.ndarray,
    starts: np.ndarray,
    counts: np.ndarray,
    lengths: np.ndarray,
    w: np.ndarray,
    tol: float,
    max_sweeps: int,
) -> int:
    """Cyclic isotonic sweeps of cumulative levels along axis fibers, in place.

    levels: (L, C), one row per cumulative level over C parent configs.
    fibers/starts/counts/lengths describe one flattened index row per fiber
    and axis, ordered so a feasible fiber reads nondecreasing; w: (C,)
    positive per-config weights. Sweeps repeat until the largest step-down
    along any fiber is <= tol. Returns the number of sweeps used (0 when
    the input is already feasible) or -1 when max_sweeps is not enough.
    """
    num_levels = levels.shape[0]
    axes = []
    for a in range(len(counts)):
        count, length = int(counts[a]), int(lengths[a])
        rev = fibers[starts[a] : starts[a + 1]].reshape(count, length)
        wrev = np.ascontiguousarray(
            np.broadcast_to(w[rev], (num_levels, count, length)).reshape(-1, length)
        )
        axes.append((rev, wrev, count, length))

    def worst() -> float:
        value = 0.0
        for rev, _, _, _ in axes:
            seg = levels[:, rev]
            value = max(value, float((seg[..., :-1] - seg[..., 1:]).max(initial=0.0)))
        return value

    if worst() <= tol:
        return 0
    for sweep in range(1, max_sweeps + 1):
        for rev, wrev, count, length in axes:
            seg = levels[:, rev].reshape(-1, length)
            levels[:, rev] = pava_batch(seg, wrev).reshape(num_levels, count, length)
        if worst() <= tol:
            return sweep
    return -1
