"""Weighted isotonic projection of question tables onto the monotone cone.

Feasibility means: along the parent-configuration order, every cumulative
level of the table must be nonincreasing (a better configuration never makes
low outcomes more likely). The projection pools violating values fiber by
fiber (pool-adjacent-violators along every axis) and repeats the sweeps
until no violation is left.

All cumulative levels are swept in lockstep. Pooling is a componentwise
monotone operation, so running the identical sweep sequence on every level
preserves the ordering between levels, and differencing the fitted levels
afterwards cannot create negative probabilities beyond float dust.
"""

from __future__ import annotations

import numpy as np

from monocat.errors import LearnError, ModelError
from monocat.kernels import pava_batch, sweep_levels
from monocat.model import Cpt, ParentConfigOrder, StudentModel

# Residual slack allowed on covering pairs after projection. A comparable
# pair further apart is bounded by this times the longest covering path, so
# certificates checked at 1e-9 still come out clean with room to spare.
PROJECTION_TOL = 1e-10
MAX_SWEEPS = 10_000


def isotonic_fit_decreasing(y, w=None) -> np.ndarray:
    """Weighted least-squares nonincreasing fit of a sequence."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    if w.shape != y.shape:
        raise ModelError("weights must match the values in shape")
    if np.any(w <= 0):
        raise ModelError("isotonic weights must be positive")
    rev = np.ascontiguousarray(y[::-1][None, :])
    wrev = np.ascontiguousarray(w[::-1][None, :])
    return pava_batch(rev, wrev)[0, ::-1].copy()


def project_cpt(
    cpt: Cpt,
    order: ParentConfigOrder,
    weights=None,
    tolerance: float = PROJECTION_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> Cpt:
    """Project one table onto the monotone cone of its configuration order.

    `weights` holds one nonnegative weight per parent configuration (think
    expected config counts); rows with more weight move less. All-zero or
    omitted weights mean uniform; isolated zeros are floored to a vanishing
    share of the smallest positive weight so unseen configurations follow
    the constraints without pulling on seen ones. With a single parent this
    is the exact weighted projection; with several parents the axis sweeps
    are repeated to a feasible fixed point.
    """
    table = cpt.table
    num_configs, num_states = table.shape
    if num_configs != order.num_configs:
        raise ModelError(
            f"question {order.question}: table has {num_configs} rows, "
            f"order expects {order.num_configs}"
        )
    w = np.ones(num_configs) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (num_configs,):
        raise ModelError(f"question {order.question}: need one weight per configuration")
    if np.any(w < 0):
        raise ModelError(f"question {order.question}: projection weights must be nonnegative")
    if np.any(w == 0):
        positive = w[w > 0]
        w = np.where(w > 0, w, 1.0 if positive.size == 0 else positive.min() * 1e-9)

    cum = np.cumsum(table, axis=1)
    levels = np.ascontiguousarray(cum[:, : num_states - 1].T)  # (levels, configs)
    fibers, starts, counts, lengths = order.fiber_pack
    used = sweep_levels(
        levels, fibers, starts, counts, lengths, np.ascontiguousarray(w), tolerance, max_sweeps
    )
    if used < 0:
        raise LearnError(
            f"question {order.question}: isotonic sweeps did not converge "
            f"in {max_sweeps} rounds"
        )
    np.clip(levels, 0.0, 1.0, out=levels)

    fitted = np.empty_like(table)
    fitted[:, 0] = levels[0]
    for k in range(1, num_states - 1):
        fitted[:, k] = levels[k] - levels[k - 1]
    fitted[:, num_states - 1] = 1.0 - levels[num_states - 2]
    np.clip(fitted, 0.0, None, out=fitted)
    fitted /= fitted.sum(axis=1, keepdims=True)
    return Cpt(question=cpt.question, table=fitted)


def project_model(
    model: StudentModel,
    weights=None,
    tolerance: float = PROJECTION_TOL,
) -> StudentModel:
    """Project every question table; priors are left untouched.

    `weights` may be a mapping from question id to a per-configuration
    weight vector; questions not listed use uniform weights.
    """
    weights = weights or {}
    cpts = tuple(
        project_cpt(cpt, order, weights.get(cpt.question), tolerance)
        for cpt, order in zip(model.cpts, model.orders)
    )
    return model.with_parameters(model.skill_priors, cpts)
