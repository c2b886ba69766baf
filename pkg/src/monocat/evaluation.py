"""Simulated students, testing policies and end-to-end fitting experiments.

Students are drawn from a ground-truth model; their answers are sampled from
its tables while a (possibly different) session model drives the question
choice and the reported beliefs. This separation is what lets the adaptive
policy be compared fairly against a fixed order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from monocat.errors import SessionError
from monocat.inference import answer_distribution, log_likelihood
from monocat.learning import LearnConfig, LearnResult, learn
from monocat.model import StudentModel
from monocat.networks import bench_model, sample_answers, sample_dataset, sample_skills
from monocat.score import (
    NAIVE_QUESTION_CAP,
    GradeScale,
    ScoreDistribution,
    grade_error,
    score_distribution,
    score_distribution_naive,
)
from monocat.session import (
    SessionReport,
    SessionState,
    record_answer,
    select_next,
    session_report,
    start_session,
)


@dataclass(frozen=True)
class StepRecord:
    """Belief summary right after one answer was folded in.

    `answer_accuracy` and `score_error` compare against the student's full
    answer sheet, so they stay None when that sheet is unknown (a scripted
    replay that covers only part of the test).
    """

    step: int
    question: int
    answer: int
    expected_score: float
    grade_error: float | None  # against the grade of the student's true total
    answer_accuracy: float | None = None
    score_error: float | None = None


@dataclass(frozen=True)
class SessionTrace:
    policy: str
    skills: tuple[int, ...]
    steps: tuple[StepRecord, ...]
    final: SessionReport

    @property
    def script(self) -> tuple[tuple[int, int], ...]:
        return tuple((s.question, s.answer) for s in self.steps)


def answer_from_truth(
    truth: StudentModel, skills, question: int, rng: np.random.Generator
) -> int:
    """Sample one answer from the ground-truth table row of this student."""
    pars = truth.parents[question]
    row = 0
    for j in pars:
        row = row * truth.skills[j].num_states + int(skills[j])
    probs = truth.cpts[question].table[row]
    return int(rng.choice(len(probs), p=probs))


def answer_accuracy(state: SessionState, true_answers) -> float:
    """Share of questions whose most likely state matches the actual answer.

    Open questions are predicted by the maximum of their predictive
    distribution under the current evidence (ties to the lowest state);
    answered questions compare the observation itself, so they always count
    as hits when the evidence came from the same answer sheet.
    """
    n = state.model.num_questions
    true_vec = np.asarray(true_answers, dtype=np.int64)
    if true_vec.shape != (n,):
        raise SessionError(f"need one true answer per question, got shape {true_vec.shape}")
    hits = 0
    for qid in range(n):
        if qid in state.answered:
            guess = state.answered[qid]
        else:
            guess = int(np.argmax(answer_distribution(state.model, state.posterior, qid)))
        hits += guess == true_vec[qid]
    return hits / n


def score_error(dist: ScoreDistribution, true_score: int) -> float:
    """Absolute error of the expected total score against the achieved one."""
    if not 0 <= true_score <= dist.max_score:
        raise SessionError(f"score {true_score} outside range 0..{dist.max_score}")
    return float(abs(true_score - dist.expected))


def true_total_score(model: StudentModel, answers) -> int:
    """Points a complete answer vector is worth."""
    return int(sum(q.points[int(answers[q.id])] for q in model.questions))


def _step_through(
    state: SessionState,
    questions_and_answers,
    scale: GradeScale | None,
    variant: str,
    policy: str,
    skills,
    true_answers=None,
) -> SessionTrace:
    true_total = true_bin = None
    if true_answers is not None:
        true_total = true_total_score(state.model, true_answers)
        if scale is not None:
            true_bin = scale.bin_of(true_total)
    steps = []
    report = None
    for question, answer in questions_and_answers:
        state = record_answer(state, question, answer)
        report = session_report(state, scale=scale, variant=variant)
        steps.append(
            StepRecord(
                step=len(steps) + 1,
                question=question,
                answer=answer,
                expected_score=report.expected_score,
                grade_error=(
                    None if true_bin is None else grade_error(report.score, scale, true_bin)
                ),
                answer_accuracy=(
                    None if true_answers is None else answer_accuracy(state, true_answers)
                ),
                score_error=(
                    None if true_total is None else abs(true_total - report.expected_score)
                ),
            )
        )
    if report is None:
        report = session_report(state, scale=scale, variant=variant)
    return SessionTrace(
        policy=policy, skills=tuple(int(s) for s in skills), steps=tuple(steps), final=report
    )


def simulate_session(
    session_model: StudentModel,
    truth: StudentModel,
    skills,
    rng: np.random.Generator,
    policy: str = "adaptive",
    order=None,
    scale: GradeScale | None = None,
    variant: str = "B",
    max_steps: int | None = None,
) -> SessionTrace:
    """Run one student through a test.

    `policy` is "adaptive" (entropy-driven) or "fixed"; a fixed run asks in
    `order` (question ids ascending when omitted). Answers always come from
    the truth model at the student's actual skills.
    """
    if policy not in ("adaptive", "fixed"):
        raise SessionError(f"unknown policy {policy!r}")
    limit = session_model.num_questions if max_steps is None else max_steps
    plan = list(order) if order is not None else list(range(session_model.num_questions))
    # the full sheet is drawn up front, so runs sharing a stream (e.g. the
    # two policies in a comparison) see the same student answer the same way
    skills_row = np.asarray(skills, dtype=np.int64)[None, :]
    answers = sample_answers(truth, skills_row, rng)[0]
    true_total = true_total_score(session_model, answers)
    true_bin = None if scale is None else scale.bin_of(true_total)
    state = start_session(session_model)
    steps = []
    report = None
    for step_idx in range(limit):
        if policy == "adaptive":
            question = select_next(state)
            if question is None:
                break
        else:
            if step_idx >= len(plan):
                break
            question = plan[step_idx]
        answer = int(answers[question])
        state = record_answer(state, question, answer)
        report = session_report(state, scale=scale, variant=variant)
        steps.append(
            StepRecord(
                step=len(steps) + 1,
                question=question,
                answer=answer,
                expected_score=report.expected_score,
                grade_error=(
                    None if true_bin is None else grade_error(report.score, scale, true_bin)
                ),
                answer_accuracy=answer_accuracy(state, answers),
                score_error=abs(true_total - report.expected_score),
            )
        )
    if report is None:
        report = session_report(state, scale=scale, variant=variant)
    return SessionTrace(
        policy=policy, skills=tuple(int(s) for s in skills), steps=tuple(steps), final=report
    )


def run_scripted(
    model: StudentModel,
    script,
    scale: GradeScale | None = None,
    variant: str = "B",
) -> SessionTrace:
    """Replay an explicit (question, answer) script through a fresh session.

    When the script covers every question, the per-step prediction metrics
    are filled in from the script itself (the sheet is fully known).
    """
    script = list(script)
    true_answers = None
    if {q for q, _ in script} == set(range(model.num_questions)):
        vec = np.zeros(model.num_questions, dtype=np.int64)
        for question, answer in script:
            vec[question] = answer
        true_answers = vec
    state = start_session(model)
    return _step_through(
        state, script, scale, variant, "scripted", skills=(), true_answers=true_answers
    )


def run_cohort(
    session_model: StudentModel,
    truth: StudentModel,
    num_students: int,
    seed: int = 0,
    policy: str = "adaptive",
    order=None,
    scale: GradeScale | None = None,
    variant: str = "B",
    max_steps: int | None = None,
) -> tuple[SessionTrace, ...]:
    """Simulate a cohort; one spawned random stream per student."""
    root = np.random.SeedSequence(seed)
    skill_rng = np.random.default_rng(root.spawn(1)[0])
    skills = sample_skills(truth, num_students, skill_rng)
    streams = root.spawn(num_students + 1)[1:]
    traces = []
    for idx in range(num_students):
        rng = np.random.default_rng(streams[idx])
        traces.append(
            simulate_session(
                session_model, truth, skills[idx], rng,
                policy=policy, order=order, scale=scale, variant=variant,
                max_steps=max_steps,
            )
        )
    return tuple(traces)


def first_step_below(trace: SessionTrace, threshold: float = 0.5) -> int:
    """1-based step where the grade error first drops under the threshold;
    one past the end when it never does."""
    for record in trace.steps:
        if record.grade_error is None:
            raise SessionError("trace has no grade errors; pass a grade scale when simulating")
        if record.grade_error < threshold:
            return record.step
    return len(trace.steps) + 1


def mean_first_step(traces, threshold: float = 0.5) -> float:
    return float(np.mean([first_step_below(t, threshold) for t in traces]))


def pass_probability(dist: ScoreDistribution, threshold: int) -> float:
    """Probability that the total score reaches the threshold."""
    if not 0 <= threshold <= dist.max_score:
        raise SessionError(f"threshold {threshold} outside score range 0..{dist.max_score}")
    return float(dist.probs[threshold:].sum())


def mean_curve(traces, metric: str) -> np.ndarray:
    """Mean of one StepRecord metric across traces, indexed by step.

    All traces must have the same length and carry the metric on every step.
    """
    if not traces:
        raise SessionError("no traces to average")
    lengths = {len(t.steps) for t in traces}
    if len(lengths) != 1:
        raise SessionError(f"traces differ in length: {sorted(lengths)}")
    rows = []
    for trace in traces:
        values = [getattr(s, metric) for s in trace.steps]
        if any(v is None for v in values):
            raise SessionError(f"metric {metric!r} missing on some steps")
        rows.append(values)
    return np.asarray(rows, dtype=float).mean(axis=0)


@dataclass(frozen=True)
class TimingRow:
    """One line of the inference-speed comparison; None marks a naive run
    that was skipped as infeasible."""

    num_questions: int
    divorcing_seconds: float
    naive_seconds: float | None


def timing_benchmark(
    counts,
    seed: int = 0,
    repeats: int = 5,
    naive_cap: int = NAIVE_QUESTION_CAP,
) -> tuple[TimingRow, ...]:
    """Median wall time of the two score-distribution paths per question count.

    Each count gets a fresh two-skill benchmark network; the naive column is
    skipped (None) once the count exceeds `naive_cap`, where full answer-space
    enumeration stops being practical.
    """
    rows = []
    for count in counts:
        model = bench_model(int(count), seed=seed)
        fast = _median_time(lambda: score_distribution(model, variant="B"), repeats)
        slow = None
        if count <= naive_cap:
            slow = _median_time(lambda: score_distribution_naive(model, variant="B"), repeats)
        rows.append(TimingRow(int(count), fast, slow))
    return tuple(rows)


def _median_time(fn, repeats: int) -> float:
    samples = []
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


@dataclass(frozen=True)
class MethodEval:
    method: str
    train_ll: float
    test_ll: float
    max_violation: float
    converged: bool

    @property
    def feasible(self) -> bool:
        return self.max_violation <= 1e-9


def run_experiment(
    truth: StudentModel,
    methods,
    train_size: int,
    test_size: int,
    seed: int = 0,
    base_config: LearnConfig | None = None,
) -> dict[str, MethodEval]:
    """Draw one train/test split from the truth and fit each method on it.

    All methods share the same data and the same restart initialisations, so
    differences in held-out likelihood are down to the methods alone.
    """
    base = base_config or LearnConfig()
    root = np.random.SeedSequence(seed)
    train_seed, test_seed, learn_stream = root.spawn(3)
    train = sample_dataset(truth, train_size, seed=_seed_int(train_seed))
    test = sample_dataset(truth, test_size, seed=_seed_int(test_seed))
    learn_seed = _seed_int(learn_stream)

    out: dict[str, MethodEval] = {}
    for method in methods:
        cfg = replace(base, method=method, seed=learn_seed)
        result: LearnResult = learn(train, truth, cfg)
        out[method] = MethodEval(
            method=method,
            train_ll=result.log_likelihood,
            test_ll=log_likelihood(result.model, test),
            max_violation=result.max_violation,
            converged=result.converged,
        )
    return out


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint64)[0] % (2**63))
