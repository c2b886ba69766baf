"""Exact inference over the joint skill space.

Everything here enumerates the full joint state space of the skills (the
product of their state counts). That keeps the math exact and simple; the
price is the capacity cap below.
"""

from __future__ import annotations

import numpy as np

from monocat.errors import CapacityError, ContradictionError, ModelError
from monocat.kernels import gather_likelihood, scatter_rows
from monocat.model import StudentModel

JOINT_CAP = 1_000_000


def check_capacity(model: StudentModel) -> None:
    if model.joint_size > JOINT_CAP:
        raise CapacityError(
            f"joint skill space has {model.joint_size} states, "
            f"exact enumeration is capped at {JOINT_CAP}"
        )


def evidence_to_vector(model: StudentModel, evidence) -> np.ndarray:
    """Normalize evidence to an int64 vector of length num_questions, -1 = unanswered.

    Accepts a mapping question id -> state, or any sequence already in vector
    form. States are range-checked against each question.
    """
    n = model.num_questions
    if isinstance(evidence, dict):
        vec = np.full(n, -1, dtype=np.int64)
        for qid, state in evidence.items():
            qid = int(qid)
            if not 0 <= qid < n:
                raise ModelError(f"evidence names unknown question {qid}")
            vec[qid] = int(state)
    else:
        vec = np.asarray(evidence, dtype=np.int64)
        if vec.shape != (n,):
            raise ModelError(f"evidence vector has shape {vec.shape}, expected ({n},)")
        vec = vec.copy()
    for qid in np.nonzero(vec >= 0)[0]:
        if vec[qid] >= model.questions[qid].num_states:
            raise ModelError(
                f"question {qid}: state {vec[qid]} out of range "
                f"(has {model.questions[qid].num_states} states)"
            )
    if np.any(vec < -1):
        raise ModelError("evidence states must be >= 0, or -1 for unanswered")
    return vec


def joint_likelihood(model: StudentModel, evidence) -> np.ndarray:
    """P(evidence | joint skill config) for every joint config, shape (joint_size,)."""
    check_capacity(model)
    vec = evidence_to_vector(model, evidence)
    like = np.ones((1, model.joint_size))
    for qid in np.nonzero(vec >= 0)[0]:
        gather_likelihood(
            like, model.cpts[qid].table, model.row_indices[qid], vec[qid : qid + 1]
        )
    return like[0]


def posterior_joint(model: StudentModel, evidence) -> tuple[np.ndarray, float]:
    """Posterior over joint skill configs and the log evidence probability.

    Raises ContradictionError when the evidence has probability zero under
    the model.
    """
    like = joint_likelihood(model, evidence)
    unnorm = like * model.prior_joint
    norm = float(unnorm.sum())
    if norm <= 0.0:
        raise ContradictionError("evidence has probability zero under the model")
    return unnorm / norm, float(np.log(norm))


def skill_marginals(model: StudentModel, posterior: np.ndarray) -> tuple[np.ndarray, ...]:
    """Per-skill marginal distributions implied by a joint posterior."""
    out = []
    for j, skill in enumerate(model.skills):
        out.append(
            scatter_rows(posterior, model.joint_states[:, j].astype(np.int64), skill.num_states)
        )
    return tuple(out)


def answer_distribution(model: StudentModel, posterior: np.ndarray, question: int) -> np.ndarray:
    """Predictive distribution of one question's state under a joint posterior."""
    rows = model.cpts[question].num_configs
    row_weight = scatter_rows(posterior, model.row_indices[question], rows)
    return row_weight @ model.cpts[question].table


def batch_likelihood(model: StudentModel, data: np.ndarray) -> np.ndarray:
    """Likelihood matrix P(student's answers | joint config), shape (num_students, joint_size).

    `data` is an int array (num_students, num_questions) with -1 for missing
    answers.
    """
    check_capacity(model)
    data = np.ascontiguousarray(np.asarray(data, dtype=np.int64))
    if data.ndim != 2 or data.shape[1] != model.num_questions:
        raise ModelError(
            f"data has shape {data.shape}, expected (num_students, {model.num_questions})"
        )
    like = np.ones((data.shape[0], model.joint_size))
    for qid in range(model.num_questions):
        col = np.ascontiguousarray(data[:, qid])
        if np.any(col >= 0):
            gather_likelihood(like, model.cpts[qid].table, model.row_indices[qid], col)
    return like


def log_likelihood(model: StudentModel, data: np.ndarray) -> float:
    """Total log probability of a dataset; -inf if any row is contradicted."""
    like = batch_likelihood(model, data)
    margins = like @ model.prior_joint
    with np.errstate(divide="ignore"):
        return float(np.log(margins).sum())


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())
