"""Package-level guarantees, one test per headline claim.

Everything here is seeded and sized to run comfortably inside the stated
time budgets; each test finishes with a one-line summary of what it
measured so a verbose run reads as a checklist.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from helpers import random_small_model
from oracles import min_credible_size

from monocat import (
    NATIONAL_EXAM_SCALE,
    GradeScale,
    LearnConfig,
    ScoreDistribution,
    bin_masses,
    build_model,
    expected_grade_error,
    grade,
    grade_error,
    isotonic_fit_decreasing,
    learn,
    log_likelihood,
    mean_first_step,
    project_cpt,
    run_cohort,
    run_experiment,
    sample_dataset,
    score_distribution,
    score_distribution_naive,
    timing_benchmark,
    true_total_score,
)
from monocat.learning import loglik_gradient, model_from_z, z_from_model
from monocat.model import Cpt, covering_pairs
from monocat.networks import bench_model, example_model, sample_answers, sample_skills


def _random_binary_model(rng: np.random.Generator):
    """1-2 binary skills, 1-12 binary one-point questions, random tables."""
    num_skills = int(rng.integers(1, 3))
    num_questions = int(rng.integers(1, 13))
    questions = []
    for i in range(num_questions):
        k = int(rng.integers(1, num_skills + 1))
        parents = sorted(rng.choice(num_skills, size=k, replace=False).tolist())
        questions.append(
            {"id": i, "num_states": 2, "points": [0, 1], "parents": parents}
        )
    model = build_model(
        {
            "skills": [{"id": j, "num_states": 2} for j in range(num_skills)],
            "questions": questions,
        }
    )
    priors = tuple(rng.dirichlet(np.ones(2)) for _ in range(num_skills))
    cpts = tuple(
        Cpt(question=q.id, table=rng.dirichlet(np.ones(2), size=model.orders[q.id].num_configs))
        for q in model.questions
    )
    return model.with_parameters(priors, cpts)


def _random_evidence(model, rng: np.random.Generator) -> dict:
    answered = rng.random(model.num_questions) < rng.random()
    return {
        qid: int(rng.integers(0, model.questions[qid].num_states))
        for qid in np.flatnonzero(answered)
    }


class TestExactInference:
    def test_score_distribution_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(20260823)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(200):
            model = _random_binary_model(rng)
            evidence = _random_evidence(model, rng)
            for variant in ("A", "B"):
                fast = score_distribution(model, evidence, variant=variant)
                slow = score_distribution_naive(model, evidence, variant=variant)
                worst = max(worst, float(np.max(np.abs(fast.probs - slow.probs))))
                assert np.max(np.abs(fast.probs - slow.probs)) <= 1e-10
        elapsed = time.perf_counter() - t0
        assert elapsed < 120.0
        print(f"PASS exactness: 200 models x 2 variants, worst gap {worst:.2e}, {elapsed:.1f}s")


class TestInferenceScaling:
    def test_convolution_tree_outruns_enumeration(self):
        rows = timing_benchmark([12, 14, 16, 18, 20, 37], seed=0, repeats=3)
        naive = {r.num_questions: r.naive_seconds for r in rows}
        ratios = [naive[n + 2] / naive[n] for n in (12, 14, 16, 18)]
        assert all(r >= 2.0 for r in ratios)
        last = rows[-1]
        assert last.num_questions == 37
        assert last.naive_seconds is None  # refused above the enumeration cap
        assert last.divorcing_seconds < 1.0
        print(
            "PASS scaling: naive growth ratios "
            + ", ".join(f"{r:.1f}" for r in ratios)
            + f"; 37-question tree in {last.divorcing_seconds * 1e3:.2f}ms, naive refused"
        )


class TestEmAscent:
    def test_every_em_iteration_improves_or_holds_likelihood(self):
        worst = np.inf
        for idx in range(50):
            if idx % 5 == 4:  # mix in three-state questions, not just binaries
                truth = random_small_model(seed=idx)
            else:
                truth = bench_model(3 + idx % 6, seed=idx)
            data = sample_dataset(truth, 10 + 5 * (idx % 5), seed=100 + idx)
            result = learn(
                data, truth, LearnConfig(method="em", restarts=1, seed=idx, max_iter=80)
            )
            diffs = np.diff(result.trace)
            if len(diffs):
                worst = min(worst, float(diffs.min()))
            assert np.all(diffs >= -1e-9)
        print(f"PASS em ascent: 50 datasets, smallest iteration gain {worst:.2e}")


class TestGradient:
    def test_analytic_gradient_matches_central_differences(self):
        rng = np.random.default_rng(42)
        h = 1e-6
        worst = 0.0
        for point in range(100):
            base = bench_model(3, seed=point % 7) if point % 2 else random_small_model(seed=point)
            data = sample_dataset(base, 12, seed=point)
            if point % 4 == 0:
                holes = rng.random(data.shape) < 0.2
                data = np.where(holes, -1, data)
            z0 = z_from_model(base)
            z = z0 + 0.7 * rng.standard_normal(len(z0))
            model = model_from_z(base, z)
            _, analytic = loglik_gradient(model, data)
            for coord in rng.choice(len(z), size=5, replace=False):
                zp, zm = z.copy(), z.copy()
                zp[coord] += h
                zm[coord] -= h
                fd = (
                    log_likelihood(model_from_z(base, zp), data)
                    - log_likelihood(model_from_z(base, zm), data)
                ) / (2 * h)
                rel = abs(analytic[coord] - fd) / max(1.0, abs(analytic[coord]), abs(fd))
                worst = max(worst, rel)
                assert rel <= 1e-4
        print(f"PASS gradient: 100 points x 5 coords, worst relative error {worst:.2e}")


class TestMonotoneFeasibility:
    def test_constrained_fits_always_end_inside_the_cone(self):
        checked = 0
        for truth, students, seed in [
            (bench_model(4, seed=2), 30, 7),
            (bench_model(6, seed=5), 25, 3),
            (random_small_model(seed=21), 35, 13),
        ]:
            data = sample_dataset(truth, students, seed=seed)
            for method in ("irem", "qirem", "rgrad"):
                result = learn(
                    data,
                    truth,
                    LearnConfig(
                        method=method, restarts=2, seed=11, max_iter=60,
                        penalty_iters=60, refine_cycles=20,
                    ),
                )
                assert result.feasible
                reports = result.model.monotonicity_certificate(tolerance=1e-9)
                assert all(r.ok for r in reports)
                assert all(r.violations == () for r in reports)
                checked += 1
        print(f"PASS feasibility: {checked} constrained fits, all certificates empty at 1e-9")

    def test_pava_pools_the_hand_worked_pair(self):
        # the violating pair (0.7, 0.5): equal weights pool to their mean,
        # weights (3, 1) pull the pool toward the heavier value
        equal = isotonic_fit_decreasing([0.5, 0.7])
        assert np.max(np.abs(equal - [0.6, 0.6])) <= 1e-12
        weighted = isotonic_fit_decreasing([0.5, 0.7], w=[1.0, 3.0])
        assert np.max(np.abs(weighted - [0.65, 0.65])) <= 1e-12

        # same numbers through the table projection: one isotone binary
        # parent, cumulative correctness rising where it must fall
        cpt = Cpt(question=0, table=np.array([[0.5, 0.5], [0.7, 0.3]]))
        order = covering_pairs((2,), (1,), question=0)
        pooled = project_cpt(cpt, order)
        assert np.max(np.abs(pooled.table[:, 0] - [0.6, 0.6])) <= 1e-12
        pulled = project_cpt(cpt, order, weights=np.array([1.0, 3.0]))
        assert np.max(np.abs(pulled.table[:, 0] - [0.65, 0.65])) <= 1e-12
        print("PASS pava: (0.7, 0.5) pools to 0.6 equal-weight and 0.65 with weights (3, 1)")


class TestSmallSampleBenefit:
    def test_monotone_methods_beat_plain_em_on_tiny_training_sets(self):
        truth = example_model(seed=3)
        config = LearnConfig(restarts=4, max_iter=200, penalty_iters=200)
        t0 = time.perf_counter()
        wins = 0
        margins = []
        for rep in range(10):
            out = run_experiment(
                truth, ["em", "irem", "qirem", "rgrad"],
                train_size=10, test_size=200, seed=rep, base_config=config,
            )
            best_monotone = max(out[m].test_ll for m in ("irem", "qirem", "rgrad"))
            margins.append(best_monotone - out["em"].test_ll)
            wins += best_monotone >= out["em"].test_ll
        elapsed = time.perf_counter() - t0
        assert elapsed < 600.0
        assert wins >= 7
        print(
            f"PASS small-sample: best monotone beat em {wins}/10 reps, "
            f"median margin {np.median(margins):.0f} nats, {elapsed:.0f}s"
        )


class TestAdaptiveBenefit:
    def test_adaptive_order_pins_the_grade_down_sooner(self):
        truth = example_model(seed=3)
        steps = {"adaptive": [], "fixed": []}
        for seed in range(10):
            for policy in ("adaptive", "fixed"):
                traces = run_cohort(
                    truth, truth, 10, seed=seed, policy=policy,
                    scale=NATIONAL_EXAM_SCALE, variant="B",
                )
                steps[policy].append(mean_first_step(traces, threshold=0.5))
        adaptive = float(np.mean(steps["adaptive"]))
        fixed = float(np.mean(steps["fixed"]))
        assert adaptive < fixed
        print(
            f"PASS adaptive: grade error under 0.5 at mean step {adaptive:.2f} "
            f"adaptive vs {fixed:.2f} fixed (10 seeds x 10 students)"
        )


class TestCredibleSets:
    def test_sets_cover_and_no_smaller_set_could(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(150):
            size = int(rng.integers(2, 16))
            alpha = float(rng.choice([0.2, 1.0, 5.0]))
            dist = ScoreDistribution(probs=rng.dirichlet(alpha * np.ones(size)))
            got = dist.credible_set(0.95)
            assert got.coverage >= 0.95 - 1e-12
            assert len(got.scores) == min_credible_size(dist.probs, 0.95)
            checked += 1
        for n in (10, 12, 14):  # model-derived distributions, still brute-forceable
            model = bench_model(n, seed=n)
            dist = score_distribution(model, variant="B")
            got = dist.credible_set(0.95)
            assert got.coverage >= 0.95 - 1e-12
            assert len(got.scores) == min_credible_size(dist.probs, 0.95)
            checked += 1
        print(f"PASS credible: {checked} distributions, size always matches subset search")

    def test_full_evidence_collapses_the_interval(self):
        model = example_model(seed=3)
        rng = np.random.default_rng(5)
        skills = sample_skills(model, 1, rng)
        answers = sample_answers(model, skills, rng)[0]
        evidence = {qid: int(answers[qid]) for qid in range(model.num_questions)}
        dist = score_distribution(model, evidence, variant="A")
        earned = true_total_score(model, answers)
        got = dist.credible_set(0.95)
        assert got.scores == (earned,)
        assert got.coverage == pytest.approx(1.0, abs=1e-12)
        assert got.lo == got.hi == earned
        print(f"PASS collapse: full 37-answer evidence gives the single score {earned}")


class TestGradeFormulas:
    def _point_mass(self, score: int, span: int = 52) -> ScoreDistribution:
        probs = np.zeros(span + 1)
        probs[score] = 1.0
        return ScoreDistribution(probs=probs)

    def test_published_scale_boundaries(self):
        scale = NATIONAL_EXAM_SCALE
        assert scale.bounds == ((0, 16), (17, 25), (26, 34), (35, 43), (44, 52))
        assert scale.labels == ("5", "4", "3", "2", "1")
        for score, label in [(0, "5"), (16, "5"), (17, "4"), (25, "4"),
                             (26, "3"), (35, "2"), (44, "1"), (52, "1")]:
            assert scale.labels[scale.bin_of(score)] == label
        assert scale.labels[grade(self._point_mass(50), scale)] == "1"
        assert scale.labels[grade(self._point_mass(0), scale)] == "5"
        assert scale.labels[grade(self._point_mass(10), scale)] == "5"
        assert scale.labels[grade(self._point_mass(20), scale)] == "4"
        print("PASS grades: 0-16 is a 5, 17-25 a 4, up to 44-52 a 1")

    def test_bin_mass_argmax_and_error_formula(self):
        scale = NATIONAL_EXAM_SCALE
        probs = np.zeros(53)
        probs[10] = 0.4  # bin 0
        probs[20] = 0.3  # bin 1
        probs[30] = 0.3  # bin 2
        spread = ScoreDistribution(probs=probs)
        assert np.allclose(bin_masses(spread, scale), [0.4, 0.3, 0.3, 0.0, 0.0], atol=1e-15)
        assert grade(spread, scale) == 0  # 0.4 beats the split 0.3s

        assert grade_error(self._point_mass(20), scale, 1) == 0.0
        assert grade_error(self._point_mass(50), scale, 2) == pytest.approx(2.0, abs=1e-15)
        adjacent = np.zeros(53)
        adjacent[20] = 0.5  # bin 1
        adjacent[40] = 0.5  # bin 3
        assert grade_error(ScoreDistribution(probs=adjacent), scale, 2) == pytest.approx(
            1.0, abs=1e-15
        )
        assert expected_grade_error(self._point_mass(33), scale) == 0.0
        print("PASS grade error: 0 in-bin, 1.0 split-adjacent, 2.0 two bins out")


class TestCliDeterminism:
    def _run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "monocat.cli", *args],
            capture_output=True, text=True, timeout=120,
        )

    def test_seeded_commands_write_identical_bytes(self, tmp_path):
        from monocat import save_dataset, save_model

        model_path = tmp_path / "exam.json"
        save_model(example_model(seed=3), model_path, scale=NATIONAL_EXAM_SCALE)
        rough_path = tmp_path / "rough.json"
        save_model(random_small_model(seed=3), rough_path)
        data_path = tmp_path / "data.csv"
        save_dataset(sample_dataset(random_small_model(seed=3), 30, seed=1), data_path)

        checks = []
        for name, args in [
            ("sample", ("sample", str(model_path), "-n", "20", "--seed", "4")),
            (
                "learn",
                (
                    "learn", str(data_path), str(rough_path),
                    "--method", "irem", "--restarts", "2", "--seed", "5", "--max-iter", "30",
                ),
            ),
            ("project", ("project", str(rough_path))),
        ]:
            first = tmp_path / f"{name}_first.out"
            second = tmp_path / f"{name}_second.out"
            for out in (first, second):
                res = self._run(*args, "-o", str(out))
                assert res.returncode == 0, res.stderr
            assert first.read_bytes() == second.read_bytes()
            checks.append(name)
        print(f"PASS determinism: {', '.join(checks)} reruns byte-identical")
