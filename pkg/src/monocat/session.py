"""Adaptive test sessions: posterior tracking, question selection, reports.

A session is immutable state plus pure transition functions; recording an
answer returns a new state. The next question is always the one whose answer
is expected to leave the least entropy in the joint skill posterior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from monocat.errors import ContradictionError, DuplicateAnswerError, SessionError
from monocat.inference import check_capacity, entropy, skill_marginals
from monocat.model import StudentModel
from monocat.score import CredibleSet, GradeScale, ScoreDistribution
from monocat.score import bin_masses, expected_grade_error, grade, score_distribution


@dataclass(frozen=True)
class SessionState:
    """One student's test in progress; answers are kept in the order given."""

    model: StudentModel = field(repr=False)
    answers: tuple[tuple[int, int], ...]
    posterior: np.ndarray = field(repr=False)
    log_evidence: float

    @cached_property
    def answered(self) -> dict[int, int]:
        return dict(self.answers)

    @property
    def num_answered(self) -> int:
        return len(self.answers)

    @property
    def complete(self) -> bool:
        return len(self.answers) == self.model.num_questions

    @property
    def open_questions(self) -> tuple[int, ...]:
        seen = self.answered
        return tuple(q for q in range(self.model.num_questions) if q not in seen)

    def evidence_vector(self) -> np.ndarray:
        vec = np.full(self.model.num_questions, -1, dtype=np.int64)
        for qid, state in self.answers:
            vec[qid] = state
        return vec


def start_session(model: StudentModel) -> SessionState:
    check_capacity(model)
    posterior = model.prior_joint / model.prior_joint.sum()
    return SessionState(model=model, answers=(), posterior=posterior, log_evidence=0.0)


def record_answer(state: SessionState, question: int, answer: int) -> SessionState:
    """Fold one answer into the posterior; rejects repeats and bad ids."""
    model = state.model
    if not 0 <= question < model.num_questions:
        raise SessionError(f"no question with id {question}")
    if question in state.answered:
        raise DuplicateAnswerError(f"question {question} was already answered")
    if not 0 <= answer < model.questions[question].num_states:
        raise SessionError(
            f"question {question} has states 0..{model.questions[question].num_states - 1}, "
            f"got {answer}"
        )
    like = model.cpts[question].table[model.row_indices[question], answer]
    unnorm = state.posterior * like
    norm = float(unnorm.sum())
    if norm <= 0.0:
        raise ContradictionError(
            f"answer {answer} to question {question} has probability zero"
        )
    return SessionState(
        model=model,
        answers=state.answers + ((question, answer),),
        posterior=unnorm / norm,
        log_evidence=state.log_evidence + float(np.log(norm)),
    )


def expected_posterior_entropy(state: SessionState, question: int) -> float:
    """Expected entropy of the joint skill posterior after asking `question`.

    Uses the decomposition sum_t p_t H_t = H(joint of answer and skills)
    minus H(answer margin), which needs a single pass over the joint table.
    """
    model = state.model
    rows = model.cpts[question].table[model.row_indices[question]]  # (J, K)
    joint = state.posterior[:, None] * rows
    margin = joint.sum(axis=0)
    nz = joint[joint > 0]
    h_joint = float(-(nz * np.log(nz)).sum())
    return h_joint - entropy(margin)


def selection_scores(state: SessionState) -> dict[int, float]:
    return {q: expected_posterior_entropy(state, q) for q in state.open_questions}


def select_next(state: SessionState) -> int | None:
    """Open question minimising expected posterior entropy; ties go to the
    lowest id, None once everything is answered."""
    best_q = None
    best_val = np.inf
    for q in state.open_questions:
        val = expected_posterior_entropy(state, q)
        if val < best_val:
            best_q, best_val = q, val
    return best_q


@dataclass(frozen=True)
class SessionReport:
    """Everything a caller needs to display about a session's current belief."""

    num_answered: int
    answered: dict[int, int]
    achieved_points: int
    skill_marginals: tuple[np.ndarray, ...]
    score: ScoreDistribution
    expected_score: float
    most_probable_score: int
    credible: CredibleSet
    grade_index: int | None
    grade_label: str | None
    grade_error: float | None
    grade_masses: tuple[float, ...] | None


def report_to_dict(report: SessionReport) -> dict:
    """Plain-JSON shape of a report, shared by the CLI and the HTTP service."""
    out = {
        "num_answered": report.num_answered,
        "answered": {str(q): int(a) for q, a in report.answered.items()},
        "achieved_points": report.achieved_points,
        "skill_marginals": [m.tolist() for m in report.skill_marginals],
        "score": {
            "probs": report.score.probs.tolist(),
            "expected": report.expected_score,
            "most_probable": report.most_probable_score,
        },
        "credible": {
            "scores": list(report.credible.scores),
            "coverage": report.credible.coverage,
            "lo": report.credible.lo,
            "hi": report.credible.hi,
        },
        "grade": None,
    }
    if report.grade_index is not None:
        out["grade"] = {
            "index": report.grade_index,
            "label": report.grade_label,
            "error": report.grade_error,
            "masses": list(report.grade_masses),
        }
    return out


def session_report(
    state: SessionState,
    scale: GradeScale | None = None,
    mass: float = 0.95,
    variant: str = "B",
) -> SessionReport:
    model = state.model
    dist = score_distribution(
        model, state.evidence_vector(), variant=variant, posterior=state.posterior
    )
    credible = dist.credible_set(mass)
    achieved = int(
        sum(model.questions[q].points[a] for q, a in state.answers)
    )
    if scale is not None:
        g = grade(dist, scale)
        g_label = scale.labels[g]
        g_err = expected_grade_error(dist, scale)
        g_masses = tuple(float(m) for m in bin_masses(dist, scale))
    else:
        g = g_label = g_err = g_masses = None
    return SessionReport(
        num_answered=state.num_answered,
        answered=dict(state.answers),
        achieved_points=achieved,
        skill_marginals=skill_marginals(model, state.posterior),
        score=dist,
        expected_score=dist.expected,
        most_probable_score=dist.most_probable,
        credible=credible,
        grade_index=g,
        grade_label=g_label,
        grade_error=g_err,
        grade_masses=g_masses,
    )
