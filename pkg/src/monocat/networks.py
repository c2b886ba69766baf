"""Ready-made network structures and synthetic ground-truth generators.

`example_model` is the workhorse test bed: seven skills, 37 questions worth
52 points in total, a mix of one- and multi-parent questions. `bench_model`
is a deliberately small structure whose question count can be scaled up for
timing comparisons.
"""

from __future__ import annotations

import numpy as np

from monocat.model import Cpt, StudentModel, build_model


def example_structure() -> dict:
    """Seven ordinal skills and a 37-question exam worth 52 points.

    Question ids follow the printed exam order, which groups questions by
    topic the way a real test sheet does: seven sections of three one-point
    questions (the third in each section also leans on the next topic), a
    mixed one-point recap, then seven sections of two two-point questions
    and a three-topic finale.
    """
    skills = [
        {"id": 0, "num_states": 2, "name": "S0"},
        {"id": 1, "num_states": 2, "name": "S1"},
        {"id": 2, "num_states": 3, "name": "S2"},
        {"id": 3, "num_states": 2, "name": "S3"},
        {"id": 4, "num_states": 2, "name": "S4"},
        {"id": 5, "num_states": 3, "name": "S5"},
        {"id": 6, "num_states": 2, "name": "S6"},
    ]
    questions = []
    for i in range(21):
        topic = i // 3
        parents = [topic] if i % 3 < 2 else sorted({topic, (topic + 1) % 7})
        questions.append(
            {"id": i, "num_states": 2, "points": [0, 1], "parents": parents}
        )
    questions.append({"id": 21, "num_states": 2, "points": [0, 1], "parents": [0, 3]})
    for i in range(22, 36):
        topic = (i - 22) // 2
        parents = [topic] if (i - 22) % 2 == 0 else sorted({topic, (topic + 2) % 7})
        questions.append(
            {"id": i, "num_states": 3, "points": [0, 1, 2], "parents": parents}
        )
    questions.append({"id": 36, "num_states": 3, "points": [0, 1, 2], "parents": [1, 4, 6]})
    return {"skills": skills, "questions": questions}


def bench_structure(num_questions: int) -> dict:
    """Two binary skills and `num_questions` binary one-point questions."""
    skills = [
        {"id": 0, "num_states": 2, "name": "A"},
        {"id": 1, "num_states": 2, "name": "B"},
    ]
    questions = [
        {"id": i, "num_states": 2, "points": [0, 1], "parents": [i % 2]}
        for i in range(num_questions)
    ]
    return {"skills": skills, "questions": questions}


def _config_ability(model: StudentModel, qid: int) -> np.ndarray:
    """Normalised position of each parent configuration in its order, in [0, 1]."""
    order = model.orders[qid]
    configs = np.indices(order.shape).reshape(len(order.shape), -1).T
    level = np.zeros(configs.shape[0])
    for axis, size in enumerate(order.shape):
        if size < 2:
            continue
        frac = configs[:, axis] / (size - 1)
        if order.directions[axis] < 0:
            frac = 1.0 - frac
        level += frac
    active = sum(1 for s in order.shape if s >= 2)
    return level / max(active, 1)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def random_monotone_parameters(
    model: StudentModel,
    rng: np.random.Generator,
    effect: float = 2.5,
    alpha: float = 4.0,
):
    """Ground-truth parameters that satisfy the order constraints exactly.

    Cumulative levels follow logistic curves that fall with the parent
    configuration's position; `effect` scales how steeply ability moves the
    answer distribution and `alpha` is the prior concentration (larger means
    flatter skill priors).
    """
    priors = tuple(rng.dirichlet(alpha * np.ones(s.num_states)) for s in model.skills)
    cpts = []
    for qid, q in enumerate(model.questions):
        ability = _config_ability(model, qid)
        shift = rng.normal(0.0, 0.5)
        slope = effect * float(np.exp(rng.normal(0.0, 0.2)))
        k = q.num_states
        levels = np.empty((k - 1, len(ability)))
        for level in range(k - 1):
            base = np.log((level + 1) / (k - level - 1))
            levels[level] = _sigmoid(base + shift - slope * (ability - 0.5))
        table = np.empty((len(ability), k))
        table[:, 0] = levels[0]
        for level in range(1, k - 1):
            table[:, level] = levels[level] - levels[level - 1]
        table[:, k - 1] = 1.0 - levels[k - 2]
        cpts.append(Cpt(question=qid, table=table))
    return priors, tuple(cpts)


def example_model(seed: int = 0, effect: float = 2.5, alpha: float = 4.0) -> StudentModel:
    """The 37-question test bed with monotone ground-truth parameters."""
    model = build_model(example_structure())
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return model.with_parameters(*random_monotone_parameters(model, rng, effect, alpha))


def bench_model(num_questions: int, seed: int = 0) -> StudentModel:
    model = build_model(bench_structure(num_questions))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return model.with_parameters(*random_monotone_parameters(model, rng))


def sample_skills(model: StudentModel, num_students: int, rng: np.random.Generator) -> np.ndarray:
    """Latent skill states per student, shape (num_students, num_skills)."""
    cols = [
        rng.choice(s.num_states, size=num_students, p=model.skill_priors[j])
        for j, s in enumerate(model.skills)
    ]
    return np.stack(cols, axis=1).astype(np.int64)


def sample_answers(
    model: StudentModel, skills: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Answers for given skill states, shape (num_students, num_questions)."""
    num_students = skills.shape[0]
    data = np.empty((num_students, model.num_questions), dtype=np.int64)
    for qid in range(model.num_questions):
        pars = model.parents[qid]
        shape = tuple(model.skills[j].num_states for j in pars)
        strides = np.ones(len(pars), dtype=np.int64)
        for i in range(len(pars) - 2, -1, -1):
            strides[i] = strides[i + 1] * shape[i + 1]
        rows = (skills[:, list(pars)] * strides).sum(axis=1)
        cum = np.cumsum(model.cpts[qid].table, axis=1)
        u = rng.random(num_students)
        data[:, qid] = (u[:, None] > cum[rows]).sum(axis=1)
    return data


def sample_dataset(model: StudentModel, num_students: int, seed: int = 0) -> np.ndarray:
    """Complete answer matrix drawn from the model, shape (num_students, num_questions)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    skills = sample_skills(model, num_students, rng)
    return sample_answers(model, skills, rng)
