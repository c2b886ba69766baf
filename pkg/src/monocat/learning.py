"""Parameter fitting: EM and gradient ascent, with and without the monotone
constraint.

Methods, all sharing the same random restarts:

* ``em``     expectation-maximisation with light additive smoothing;
* ``grad``   gradient ascent on softmax-reparametrised tables;
* ``irem``   EM with an isotonic projection after every update;
* ``qirem``  plain EM to convergence, then projected refinement rounds;
* ``rgrad``  gradient ascent with a quadratic order-violation penalty on an
             increasing weight ladder, projected once at the end.

Training data must be complete (every student answered every question);
held-out evaluation with missing answers goes through
:func:`monocat.inference.log_likelihood` instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from monocat.errors import DatasetError, LearnError
from monocat.inference import batch_likelihood, check_capacity, log_likelihood
from monocat.isotonic import project_model
from monocat.kernels import scatter_rows
from monocat.model import Cpt, StudentModel

MONOTONE_TOL = 1e-9
ARMIJO_C = 1e-4
MAX_HALVINGS = 30
# Projections inside the irem/qirem loops only steer the search, so they can
# run loose; the winning model gets one strict projection at the end.
INNER_PROJECTION_TOL = 1e-6


@dataclass(frozen=True)
class LearnConfig:
    method: str = "em"
    restarts: int = 10
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-6
    epsilon: float = 1e-3
    period: int = 5
    refine_cycles: int = 60
    penalty_weights: tuple[float, ...] = (1.0, 10.0, 100.0)
    penalty_iters: int = 200


@dataclass(frozen=True)
class LearnResult:
    """Winning restart of one fitting run."""

    model: StudentModel
    method: str
    log_likelihood: float
    trace: tuple[float, ...]
    converged: bool
    restart_index: int
    restart_lls: tuple[float, ...]
    max_violation: float

    @property
    def feasible(self) -> bool:
        return self.max_violation <= MONOTONE_TOL


def check_training_data(model: StudentModel, data: np.ndarray) -> np.ndarray:
    data = np.ascontiguousarray(np.asarray(data, dtype=np.int64))
    if data.ndim != 2 or data.shape[1] != model.num_questions:
        raise DatasetError(
            f"training data has shape {data.shape}, "
            f"expected (num_students, {model.num_questions})"
        )
    for row in range(data.shape[0]):
        for qid in range(model.num_questions):
            state = data[row, qid]
            if state < 0:
                raise DatasetError(f"row {row}: question {qid} unanswered; training needs complete data")
            if state >= model.questions[qid].num_states:
                raise DatasetError(f"row {row}: question {qid} has no state {state}")
    return data


def expected_counts(
    model: StudentModel, data: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """One E-step: data log-likelihood plus expected state counts.

    Returns (log-likelihood, per-skill prior counts, per-question table
    counts); the counts are the posterior-weighted numbers of students per
    state and per configuration/state cell.
    """
    like = batch_likelihood(model, data)
    unnorm = like * model.prior_joint
    margins = unnorm.sum(axis=1)
    if np.any(margins <= 0.0):
        raise LearnError("a training row has probability zero under the current parameters")
    post = unnorm / margins[:, None]
    ll = float(np.log(margins).sum())

    total = np.ascontiguousarray(post.sum(axis=0))
    prior_counts = [
        scatter_rows(total, np.ascontiguousarray(model.joint_states[:, j]), skill.num_states)
        for j, skill in enumerate(model.skills)
    ]
    cpt_counts = []
    for qid, q in enumerate(model.questions):
        counts = np.zeros((model.cpts[qid].num_configs, q.num_states))
        for t in range(q.num_states):
            mask = data[:, qid] == t
            if mask.any():
                w = np.ascontiguousarray(post[mask].sum(axis=0))
                counts[:, t] = scatter_rows(w, model.row_indices[qid], counts.shape[0])
        cpt_counts.append(counts)
    return ll, prior_counts, cpt_counts


def _m_step(
    model: StudentModel,
    prior_counts: list[np.ndarray],
    cpt_counts: list[np.ndarray],
    epsilon: float,
) -> StudentModel:
    priors = []
    for counts in prior_counts:
        smoothed = counts + epsilon
        priors.append(smoothed / smoothed.sum())
    cpts = []
    for qid, counts in enumerate(cpt_counts):
        smoothed = counts + epsilon
        cpts.append(Cpt(question=qid, table=smoothed / smoothed.sum(axis=1, keepdims=True)))
    return model.with_parameters(tuple(priors), tuple(cpts))


def em_step(
    model: StudentModel, data: np.ndarray, epsilon: float = 1e-3
) -> tuple[StudentModel, float]:
    """One EM update; returns the new model and the log-likelihood of the INPUT model."""
    ll, prior_counts, cpt_counts = expected_counts(model, data)
    return _m_step(model, prior_counts, cpt_counts, epsilon), ll


def _count_weights(cpt_counts: list[np.ndarray], epsilon: float) -> dict[int, np.ndarray]:
    """Projection weights: expected students per configuration, smoothing included."""
    return {
        qid: counts.sum(axis=1) + counts.shape[1] * epsilon
        for qid, counts in enumerate(cpt_counts)
    }


# -- parameter packing for the gradient methods ------------------------------


def z_from_model(model: StudentModel) -> np.ndarray:
    """Flatten all distributions into log space (priors first, then tables row-major)."""
    parts = [np.log(np.maximum(p, 1e-300)) for p in model.skill_priors]
    parts += [np.log(np.maximum(c.table, 1e-300)).ravel() for c in model.cpts]
    return np.concatenate(parts)


def model_from_z(model: StudentModel, z: np.ndarray) -> StudentModel:
    """Rebuild a model from the flat log-space vector via row-wise softmax."""
    need = sum(s.num_states for s in model.skills) + sum(c.table.size for c in model.cpts)
    if len(z) != need:
        raise LearnError(f"parameter vector has length {len(z)}, expected {need}")
    pos = 0
    priors = []
    for skill in model.skills:
        k = skill.num_states
        priors.append(_softmax(z[pos : pos + k]))
        pos += k
    cpts = []
    for qid, cpt in enumerate(model.cpts):
        rows, k = cpt.table.shape
        block = z[pos : pos + rows * k].reshape(rows, k)
        pos += rows * k
        cpts.append(Cpt(question=qid, table=_softmax(block)))
    return model.with_parameters(tuple(priors), tuple(cpts))


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def loglik_gradient(model: StudentModel, data: np.ndarray) -> tuple[float, np.ndarray]:
    """Log-likelihood and its gradient in the flat log-space parametrisation.

    For every distribution row the gradient is (expected counts) minus
    (total row count) times the current probabilities.
    """
    ll, prior_counts, cpt_counts = expected_counts(model, data)
    parts = []
    for counts, prior in zip(prior_counts, model.skill_priors):
        parts.append(counts - counts.sum() * prior)
    for counts, cpt in zip(cpt_counts, model.cpts):
        parts.append((counts - counts.sum(axis=1, keepdims=True) * cpt.table).ravel())
    return ll, np.concatenate(parts)


def penalty_value(model: StudentModel, weight: float) -> float:
    """Quadratic penalty on broken covering-pair constraints:
    weight * sum over pairs and cumulative levels of max(0, F_k(high) - F_k(low))^2."""
    total = 0.0
    for cpt, order in zip(model.cpts, model.orders):
        lo, hi = order.covering_arrays
        if len(lo) == 0:
            continue
        cum = np.cumsum(cpt.table[:, :-1], axis=1)
        gaps = np.maximum(cum[hi] - cum[lo], 0.0)
        total += weight * float((gaps * gaps).sum())
    return total


def penalty_and_gradient(model: StudentModel, weight: float) -> tuple[float, np.ndarray]:
    """Penalty as in :func:`penalty_value` plus its gradient in z-space.

    Uses d F_k(c) / d z_{c,t} = p_{c,t} * (1[t <= k] - F_k(c)); only the rows
    appearing in a violated pair pick up gradient mass.
    """
    total = 0.0
    parts = [np.zeros(p.shape) for p in model.skill_priors]
    for cpt, order in zip(model.cpts, model.orders):
        table = cpt.table
        rows, k = table.shape
        grad = np.zeros((rows, k))
        lo, hi = order.covering_arrays
        if len(lo):
            cum = np.cumsum(table, axis=1)[:, : k - 1]  # (rows, levels)
            gaps = np.maximum(cum[hi] - cum[lo], 0.0)  # (pairs, levels)
            total += weight * float((gaps * gaps).sum())
            coef = 2.0 * weight * gaps
            ind = (np.arange(k)[None, :] <= np.arange(k - 1)[:, None]).astype(float)
            lead = coef @ ind  # (pairs, k): sum over levels of coef * 1[t <= level]
            np.add.at(grad, hi, table[hi] * (lead - (coef * cum[hi]).sum(axis=1, keepdims=True)))
            np.subtract.at(
                grad, lo, table[lo] * (lead - (coef * cum[lo]).sum(axis=1, keepdims=True))
            )
        parts.append(grad.ravel())
    return total, np.concatenate(parts)


# -- method drivers ----------------------------------------------------------


def _run_em(model: StudentModel, data: np.ndarray, cfg: LearnConfig):
    """EM with a guard: a step that lowers the log-likelihood is rolled back.

    The smoothing in the M-step targets a lightly penalised objective, so the
    raw log-likelihood can dip by a hair right at the fixed point; the guard
    keeps the reported trace nondecreasing (up to 1e-12) and returns the best
    iterate seen.
    """
    trace: list[float] = []
    best_model, best_ll = model, -np.inf
    prev_model = model
    converged = False
    for it in range(cfg.max_iter):
        new_model, ll = em_step(model, data, cfg.epsilon)
        if trace and ll - trace[-1] < -1e-12:
            model = prev_model
            break
        trace.append(ll)
        if ll > best_ll:
            best_model, best_ll = model, ll
        if len(trace) >= 2 and trace[-1] - trace[-2] < cfg.tol * (1.0 + abs(ll)):
            converged = True
            break
        prev_model, model = model, new_model
    return best_model, best_ll, trace, converged


def _run_grad(model: StudentModel, data: np.ndarray, cfg: LearnConfig):
    z = z_from_model(model)
    model = model_from_z(model, z)
    trace: list[float] = []
    step = 1.0
    converged = False
    for it in range(cfg.max_iter):
        ll, grad = loglik_gradient(model, data)
        trace.append(ll)
        if len(trace) >= 2 and trace[-1] - trace[-2] < cfg.tol * (1.0 + abs(ll)):
            converged = True
            break
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0:
            converged = True
            break
        accepted = False
        for _ in range(MAX_HALVINGS):
            cand = model_from_z(model, z + step * grad)
            if log_likelihood(cand, data) >= ll + ARMIJO_C * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        z = z + step * grad
        model = model_from_z(model, z)
        step = min(step * 2.0, 8.0)
    ll_final = log_likelihood(model, data)
    return model, ll_final, trace, converged


def _final_projection(model: StudentModel, data: np.ndarray, cfg: LearnConfig):
    """Strictly project a model with its own expected-count weights."""
    _, _, cpt_counts = expected_counts(model, data)
    projected = project_model(model, _count_weights(cpt_counts, cfg.epsilon))
    return projected, log_likelihood(projected, data)


def _run_irem(model: StudentModel, data: np.ndarray, cfg: LearnConfig):
    model = project_model(model)
    trace: list[float] = []
    best_model, best_ll = model, -np.inf
    converged = False
    for it in range(cfg.max_iter):
        ll, prior_counts, cpt_counts = expected_counts(model, data)
        trace.append(ll)
        if ll > best_ll:
            best_model, best_ll = model, ll
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < cfg.tol * (1.0 + abs(ll)):
            converged = True
            break
        stepped = _m_step(model, prior_counts, cpt_counts, cfg.epsilon)
        # Strict projections pay off here: each iterate stays feasible, so the
        # next projection starts close to its answer and needs few sweeps.
        model = project_model(stepped, _count_weights(cpt_counts, cfg.epsilon))
    best_model, best_ll = _final_projection(best_model, data, cfg)
    return best_model, best_ll, trace, converged


def _run_qirem(model: StudentModel, data: np.ndarray, cfg: LearnConfig):
    """Unconstrained EM first, then rounds of [project, `period` EM steps].

    The projected iterates need not improve monotonically (projection and EM
    pull in different directions), so the loop keeps the best projected model
    and stops once ten successive rounds fail to beat it meaningfully.
    """
    model, _, trace_em, _ = _run_em(model, data, cfg)
    trace = list(trace_em)
    best_model, best_ll = None, -np.inf
    stall = 0
    converged = False
    for cycle in range(cfg.refine_cycles):
        _, prior_counts, cpt_counts = expected_counts(model, data)
        model = project_model(
            model, _count_weights(cpt_counts, cfg.epsilon), INNER_PROJECTION_TOL
        )
        ll_proj = log_likelihood(model, data)
        trace.append(ll_proj)
        if ll_proj > best_ll + cfg.tol * (1.0 + abs(ll_proj)):
            stall = 0
        else:
            stall += 1
        if ll_proj > best_ll:
            best_model, best_ll = model, ll_proj
        if stall >= 10:
            converged = True
            break
        for _ in range(cfg.period):
            model, ll_in = em_step(model, data, cfg.epsilon)
            trace.append(ll_in)
    if best_model is None:
        best_model = model
    best_model, best_ll = _final_projection(best_model, data, cfg)
    return best_model, best_ll, trace, converged


def _run_rgrad(model: StudentModel, data: np.ndarray, cfg: LearnConfig):
    z = z_from_model(model)
    model = model_from_z(model, z)
    trace: list[float] = []
    converged = False
    for lam in cfg.penalty_weights:
        step = 1.0
        prev_obj = None
        for it in range(cfg.penalty_iters):
            ll, gll = loglik_gradient(model, data)
            pen, gpen = penalty_and_gradient(model, lam)
            obj = ll - pen
            grad = gll - gpen
            trace.append(ll)
            if prev_obj is not None and obj - prev_obj < cfg.tol * (1.0 + abs(obj)):
                converged = True
                break
            prev_obj = obj
            gnorm2 = float(grad @ grad)
            if gnorm2 == 0.0:
                converged = True
                break
            accepted = False
            for _ in range(MAX_HALVINGS):
                cand = model_from_z(model, z + step * grad)
                cand_obj = log_likelihood(cand, data) - penalty_value(cand, lam)
                if cand_obj >= obj + ARMIJO_C * step * gnorm2:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                converged = True
                break
            z = z + step * grad
            model = model_from_z(model, z)
            step = min(step * 2.0, 8.0)
    ll_now, _, cpt_counts = expected_counts(model, data)
    model = project_model(model, _count_weights(cpt_counts, cfg.epsilon))
    ll_final = log_likelihood(model, data)
    trace.append(ll_final)
    return model, ll_final, trace, converged


_DRIVERS = {
    "em": _run_em,
    "grad": _run_grad,
    "irem": _run_irem,
    "qirem": _run_qirem,
    "rgrad": _run_rgrad,
}


def random_parameters(model: StudentModel, rng: np.random.Generator):
    """Interior random starting point; draw order is fixed so that the same
    seed gives the same initialisation whatever the method."""
    priors = tuple(rng.dirichlet(np.ones(s.num_states)) for s in model.skills)
    cpts = tuple(
        Cpt(question=qid, table=rng.dirichlet(np.ones(c.table.shape[1]), size=c.num_configs))
        for qid, c in enumerate(model.cpts)
    )
    return priors, cpts


def learn(data: np.ndarray, model: StudentModel, config: LearnConfig | None = None) -> LearnResult:
    """Fit parameters on a complete dataset; structure is taken from `model`.

    Runs `config.restarts` independent starts and returns the best final
    model, preferring restarts whose tables satisfy the monotone order (all
    of them, for the constrained methods) and breaking ties by training
    log-likelihood.
    """
    cfg = config or LearnConfig()
    if cfg.method not in _DRIVERS:
        raise LearnError(f"unknown method {cfg.method!r}; choose from {sorted(_DRIVERS)}")
    data = check_training_data(model, data)
    check_capacity(model)
    driver = _DRIVERS[cfg.method]

    children = np.random.SeedSequence(cfg.seed).spawn(max(1, cfg.restarts))
    candidates = []
    for idx, child in enumerate(children):
        rng = np.random.default_rng(child)
        init = model.with_parameters(*random_parameters(model, rng))
        fitted, ll, trace, converged = driver(init, data, cfg)
        violation = max(r.max_magnitude() for r in fitted.monotonicity_certificate(MONOTONE_TOL))
        candidates.append((fitted, ll, trace, converged, idx, violation))

    pool = candidates
    if cfg.method in ("irem", "qirem", "rgrad"):
        pool = [c for c in candidates if c[5] <= MONOTONE_TOL]
        if not pool:
            worst = ", ".join(f"restart {c[4]}: {c[5]:.3e}" for c in candidates)
            raise LearnError(
                f"method {cfg.method!r} produced no feasible restart at "
                f"tolerance {MONOTONE_TOL:g} ({worst})"
            )
    winner = max(pool, key=lambda c: c[1])
    return LearnResult(
        model=winner[0],
        method=cfg.method,
        log_likelihood=winner[1],
        trace=tuple(winner[2]),
        converged=winner[3],
        restart_index=winner[4],
        restart_lls=tuple(c[1] for c in candidates),
        max_violation=winner[5],
    )
