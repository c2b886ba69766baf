"""Session state transitions, entropy-driven question choice and reports."""

import json

import numpy as np
import pytest
from helpers import random_small_model, tiny_description
from oracles import expected_entropy_oracle

from monocat import (
    ContradictionError,
    DuplicateAnswerError,
    NATIONAL_EXAM_SCALE,
    SessionError,
    build_model,
    posterior_joint,
    record_answer,
    report_to_dict,
    select_next,
    session_report,
    skill_marginals,
    start_session,
)
from monocat.session import expected_posterior_entropy, selection_scores


class TestSessionState:
    def test_fresh_session(self, small_model):
        state = start_session(small_model)
        assert state.num_answered == 0
        assert not state.complete
        assert state.open_questions == (0, 1, 2)
        assert state.log_evidence == 0.0
        assert np.allclose(state.posterior, small_model.prior_joint, atol=1e-15)

    def test_record_answer_is_pure(self, small_model):
        first = start_session(small_model)
        second = record_answer(first, 1, 2)
        assert first.num_answered == 0
        assert second.answered == {1: 2}
        assert second.evidence_vector().tolist() == [-1, 2, -1]

    def test_sequential_matches_batch_posterior(self, example):
        state = start_session(example)
        evidence = {}
        for q, a in [(4, 1), (30, 2), (0, 0), (25, 1)]:
            state = record_answer(state, q, a)
            evidence[q] = a
        post, logev = posterior_joint(example, evidence)
        assert np.allclose(state.posterior, post, atol=1e-12)
        assert state.log_evidence == pytest.approx(logev, abs=1e-12)

    def test_unknown_question(self, small_model):
        with pytest.raises(SessionError, match="no question"):
            record_answer(start_session(small_model), 7, 0)

    def test_duplicate_rejected(self, small_model):
        state = record_answer(start_session(small_model), 0, 1)
        with pytest.raises(DuplicateAnswerError, match="already"):
            record_answer(state, 0, 0)

    def test_answer_out_of_range(self, small_model):
        with pytest.raises(SessionError, match="states 0..1"):
            record_answer(start_session(small_model), 0, 5)

    def test_impossible_answer(self):
        desc = tiny_description(p_low=1.0)
        desc["priors"] = [[1.0, 0.0]]
        model = build_model(desc)
        with pytest.raises(ContradictionError, match="probability zero"):
            record_answer(start_session(model), 0, 1)


class TestSelection:
    def test_expected_entropy_matches_enumeration(self, small_model):
        state = record_answer(start_session(small_model), 0, 1)
        for q in state.open_questions:
            want = expected_entropy_oracle(small_model, {0: 1}, q)
            assert expected_posterior_entropy(state, q) == pytest.approx(want, abs=1e-12)

    def test_select_next_minimises_scores(self, example):
        state = start_session(example)
        scores = selection_scores(state)
        assert set(scores) == set(range(example.num_questions))
        assert select_next(state) == min(scores, key=scores.get)

    def test_informative_question_beats_uninformative(self):
        desc = {
            "skills": [{"id": 0, "num_states": 2}],
            "questions": [
                {"id": 0, "num_states": 2, "points": [0, 1], "parents": [0]},
                {"id": 1, "num_states": 2, "points": [0, 1], "parents": [0]},
            ],
            "cpts": [
                [[0.5, 0.5], [0.5, 0.5]],  # says nothing about the skill
                [[0.95, 0.05], [0.05, 0.95]],  # nearly reveals it
            ],
        }
        state = start_session(build_model(desc))
        assert select_next(state) == 1

    def test_tie_takes_lowest_id(self):
        desc = {
            "skills": [{"id": 0, "num_states": 2}],
            "questions": [
                {"id": 0, "num_states": 2, "points": [0, 1], "parents": [0]},
                {"id": 1, "num_states": 2, "points": [0, 1], "parents": [0]},
            ],
            "cpts": [
                [[0.8, 0.2], [0.2, 0.8]],
                [[0.8, 0.2], [0.2, 0.8]],
            ],
        }
        state = start_session(build_model(desc))
        assert select_next(state) == 0

    def test_exhausted_session_returns_none(self, small_model):
        state = start_session(small_model)
        for n, q in enumerate((0, 1, 2)):
            assert not state.complete
            state = record_answer(state, q, 0)
            assert state.num_answered == n + 1
        assert state.complete
        assert select_next(state) is None
        assert selection_scores(state) == {}


class TestReport:
    def test_fields_match_direct_calls(self, small_model):
        state = record_answer(start_session(small_model), 1, 2)
        report = session_report(state, variant="B")
        post, _ = posterior_joint(small_model, {1: 2})
        assert report.num_answered == 1
        assert report.answered == {1: 2}
        assert report.achieved_points == small_model.questions[1].points[2]
        for got, want in zip(report.skill_marginals, skill_marginals(small_model, post)):
            assert np.allclose(got, want, atol=1e-12)
        assert report.expected_score == pytest.approx(report.score.expected, abs=1e-15)
        assert report.credible.coverage >= 0.95 - 1e-12

    def test_variant_a_collapses_when_complete(self, small_model):
        state = start_session(small_model)
        for q, a in [(0, 1), (1, 0), (2, 1)]:
            state = record_answer(state, q, a)
        report = session_report(state, variant="A")
        earned = report.achieved_points
        assert report.score.probs[earned] == pytest.approx(1.0, abs=1e-12)
        assert report.expected_score == pytest.approx(earned, abs=1e-12)
        assert report.credible.scores == (earned,)

    def test_grade_block_requires_scale(self, example):
        state = record_answer(start_session(example), 0, 1)
        bare = session_report(state)
        assert bare.grade_index is None and bare.grade_label is None
        assert bare.grade_masses is None
        graded = session_report(state, scale=NATIONAL_EXAM_SCALE)
        assert graded.grade_index in range(5)
        assert graded.grade_label == NATIONAL_EXAM_SCALE.labels[graded.grade_index]
        assert graded.grade_error >= 0.0
        assert len(graded.grade_masses) == 5
        assert sum(graded.grade_masses) == pytest.approx(1.0, abs=1e-12)
        assert graded.grade_index == int(np.argmax(graded.grade_masses))

    def test_report_round_trips_through_json(self, example):
        state = record_answer(start_session(example), 3, 1)
        report = session_report(state, scale=NATIONAL_EXAM_SCALE)
        payload = json.loads(json.dumps(report_to_dict(report)))
        assert payload["num_answered"] == 1
        assert payload["answered"] == {"3": 1}
        assert payload["grade"]["label"] == report.grade_label
        assert payload["grade"]["masses"] == pytest.approx(list(report.grade_masses))
        assert payload["score"]["expected"] == pytest.approx(report.expected_score)
        assert len(payload["score"]["probs"]) == example.max_score + 1
        assert payload["credible"]["lo"] == report.credible.lo
