"""Bipartite student model: skills, questions, CPTs and the monotone config order.

Conventions fixed here and relied on everywhere else:

* skill ids are 0..m-1, question ids are 0..n-1, state indices are 0-based;
* parent configurations are enumerated row-major with the LAST listed parent
  varying fastest (C order over the parent state counts);
* the joint skill space is enumerated the same way over skills in id order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from monocat.errors import ModelError

PROB_ATOL = 1e-9
DEFAULT_MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class SkillVar:
    """Latent ordinal ability variable; states 0..num_states-1 carry the natural order."""

    id: int
    num_states: int
    name: str = ""


@dataclass(frozen=True)
class QuestionVar:
    """Observable question; state t is worth points[t], state 0 is worth 0."""

    id: int
    num_states: int
    points: tuple[int, ...]
    label: str = ""


@dataclass(frozen=True)
class MonotonicityAnnotation:
    """Partition of one question's parents into isotone and antitone sets."""

    question: int
    isotone: tuple[int, ...]
    antitone: tuple[int, ...] = ()


@dataclass(frozen=True)
class Cpt:
    """Conditional table of one question: one distribution per parent configuration."""

    question: int
    table: np.ndarray  # (num parent configs, num question states)

    def __post_init__(self):
        table = np.ascontiguousarray(np.asarray(self.table, dtype=float))
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @property
    def num_configs(self) -> int:
        return self.table.shape[0]


@dataclass(frozen=True)
class Violation:
    """One broken cumulative-order constraint: configs low <= high at a threshold level."""

    low: int
    high: int
    level: int
    magnitude: float


@dataclass(frozen=True)
class MonotonicityReport:
    question: int
    tolerance: float
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def max_magnitude(self) -> float:
        return max((v.magnitude for v in self.violations), default=0.0)


def config_strides(shape: tuple[int, ...]) -> tuple[int, ...]:
    """Row-major strides: the last axis varies fastest."""
    strides = []
    acc = 1
    for size in reversed(shape):
        strides.append(acc)
        acc *= size
    return tuple(reversed(strides))


def enumerate_configs(shape: tuple[int, ...]) -> np.ndarray:
    """All parent configurations as an (num_configs, num_parents) array, row-major."""
    if not shape:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices(shape).reshape(len(shape), -1).T
    return np.ascontiguousarray(grids.astype(np.int64))


@dataclass(frozen=True)
class ParentConfigOrder:
    """The partial order over one question's parent configurations.

    Stored as the covering pairs (immediate-successor pairs); each pair
    (low, high) means config low precedes config high. Directions hold +1 for
    an isotone parent and -1 for an antitone one, in the question's parent
    list order.
    """

    question: int
    shape: tuple[int, ...]
    directions: tuple[int, ...]
    covering: tuple[tuple[int, int], ...]

    @property
    def num_configs(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1

    @cached_property
    def covering_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Covering pairs as two aligned index arrays (lows, highs)."""
        if not self.covering:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        arr = np.asarray(self.covering, dtype=np.int64)
        return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])

    @cached_property
    def comparable_pairs(self) -> frozenset[tuple[int, int]]:
        """Transitive closure of the covering pairs as (low, high) with low != high."""
        succ: dict[int, list[int]] = {}
        for lo, hi in self.covering:
            succ.setdefault(lo, []).append(hi)
        pairs = set()
        for start in range(self.num_configs):
            stack = list(succ.get(start, ()))
            seen = set()
            while stack:
                node = stack.pop()
                if node in seen:
                    continue
                seen.add(node)
                pairs.add((start, node))
                stack.extend(succ.get(node, ()))
        return frozenset(pairs)

    @cached_property
    def axis_fibers(self) -> tuple[np.ndarray, ...]:
        """Per axis with two or more states: an (num_fibers, size) index array
        of configs along that axis, each fiber listed low-to-high in the order
        direction. Together the fibers cover every covering pair exactly once."""
        strides = config_strides(self.shape)
        out = []
        for axis, size in enumerate(self.shape):
            if size < 2:
                continue
            other_axes = [a for a in range(len(self.shape)) if a != axis]
            fibers = []
            for other_states in itertools.product(
                *(range(self.shape[a]) for a in other_axes)
            ):
                base = sum(st * strides[a] for st, a in zip(other_states, other_axes))
                fiber = [base + s * strides[axis] for s in range(size)]
                if self.directions[axis] < 0:
                    fiber.reverse()
                fibers.append(fiber)
            out.append(np.asarray(fibers, dtype=np.int64))
        return tuple(out)

    @cached_property
    def chains(self) -> tuple[tuple[int, ...], ...]:
        """The axis fibers flattened to plain tuples."""
        return tuple(
            tuple(int(c) for c in fiber) for fibers in self.axis_fibers for fiber in fibers
        )

    @cached_property
    def fiber_pack(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Axis fibers flattened for the sweep kernel.

        Returns (fibers, starts, counts, lengths): the index rows of every
        axis reversed (so values along a feasible fiber run nondecreasing)
        and concatenated, plus per-axis offsets, fiber counts and lengths.
        """
        blocks = [np.ascontiguousarray(f[:, ::-1]).ravel() for f in self.axis_fibers]
        counts = np.asarray([f.shape[0] for f in self.axis_fibers], dtype=np.int64)
        lengths = np.asarray([f.shape[1] for f in self.axis_fibers], dtype=np.int64)
        flat = np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)
        starts = np.zeros(len(blocks) + 1, dtype=np.int64)
        np.cumsum(counts * lengths, out=starts[1:])
        return np.ascontiguousarray(flat), starts, counts, lengths


def covering_pairs(
    shape: tuple[int, ...], directions: tuple[int, ...], question: int = -1
) -> ParentConfigOrder:
    """Covering pairs of the componentwise order with antitone axes reversed.

    For a product of chains these are exactly the pairs differing in one
    coordinate by one step (taken in the axis direction).
    """
    if len(shape) != len(directions):
        raise ModelError(f"question {question}: direction count differs from parent count")
    strides = config_strides(shape)
    pairs = []
    for states in itertools.product(*(range(s) for s in shape)):
        idx = sum(st * s for st, s in zip(states, strides))
        for axis, size in enumerate(shape):
            if states[axis] + 1 < size:
                nxt = idx + strides[axis]
                if directions[axis] > 0:
                    pairs.append((idx, nxt))
                else:
                    pairs.append((nxt, idx))
    return ParentConfigOrder(
        question=question, shape=tuple(shape), directions=tuple(directions), covering=tuple(pairs)
    )


def is_monotone(
    cpt: Cpt, order: ParentConfigOrder, tolerance: float = DEFAULT_MONOTONE_TOL
) -> MonotonicityReport:
    """Check the cumulative-probability order condition on every comparable pair.

    For low <= high and every threshold level k below the top state, the
    cumulative probability of states 0..k must not be smaller for the low
    configuration. The top level is skipped (both sides are 1).
    """
    table = cpt.table
    if table.shape[0] != order.num_configs:
        raise ModelError(
            f"question {order.question}: CPT has {table.shape[0]} rows, "
            f"order expects {order.num_configs}"
        )
    cum = np.cumsum(table, axis=1)
    violations = []
    for lo, hi in sorted(order.comparable_pairs):
        for k in range(table.shape[1] - 1):
            gap = cum[hi, k] - cum[lo, k]
            if gap > tolerance:
                violations.append(Violation(low=lo, high=hi, level=k, magnitude=float(gap)))
    return MonotonicityReport(
        question=order.question, tolerance=tolerance, violations=tuple(violations)
    )


# structural caches copied by with_parameters (depend only on graph + state counts)
_STRUCT_CACHES = ("joint_states", "row_indices", "orders", "max_score", "_strides")


@dataclass(eq=False)
class StudentModel:
    """Immutable two-layer network. Treat instances as read-only after construction."""

    skills: tuple[SkillVar, ...]
    questions: tuple[QuestionVar, ...]
    parents: tuple[tuple[int, ...], ...]
    skill_priors: tuple[np.ndarray, ...]
    cpts: tuple[Cpt, ...]
    annotations: tuple[MonotonicityAnnotation, ...]

    def __post_init__(self):
        priors = []
        for vec in self.skill_priors:
            arr = np.ascontiguousarray(np.asarray(vec, dtype=float))
            arr.flags.writeable = False
            priors.append(arr)
        self.skill_priors = tuple(priors)
        self.parents = tuple(tuple(p) for p in self.parents)

    # -- sizes ---------------------------------------------------------------

    @property
    def num_skills(self) -> int:
        return len(self.skills)

    @property
    def num_questions(self) -> int:
        return len(self.questions)

    @property
    def joint_size(self) -> int:
        size = 1
        for s in self.skills:
            size *= s.num_states
        return size

    # -- structural caches ---------------------------------------------------

    @cached_property
    def _strides(self) -> tuple[int, ...]:
        return config_strides(tuple(s.num_states for s in self.skills))

    @cached_property
    def joint_states(self) -> np.ndarray:
        """(joint_size, num_skills) matrix of skill states, row-major enumeration."""
        return enumerate_configs(tuple(s.num_states for s in self.skills))

    @cached_property
    def row_indices(self) -> tuple[np.ndarray, ...]:
        """Per question: joint config index -> CPT row index."""
        out = []
        for q, pars in zip(self.questions, self.parents):
            shape = tuple(self.skills[j].num_states for j in pars)
            strides = config_strides(shape)
            idx = np.zeros(self.joint_size, dtype=np.int64)
            for j, stride in zip(pars, strides):
                idx += self.joint_states[:, j] * stride
            out.append(np.ascontiguousarray(idx))
        return tuple(out)

    @cached_property
    def orders(self) -> tuple[ParentConfigOrder, ...]:
        out = []
        for q, pars, ann in zip(self.questions, self.parents, self.annotations):
            shape = tuple(self.skills[j].num_states for j in pars)
            directions = tuple(1 if j in ann.isotone else -1 for j in pars)
            out.append(covering_pairs(shape, directions, question=q.id))
        return tuple(out)

    @cached_property
    def max_score(self) -> int:
        return sum(q.points[-1] for q in self.questions)

    @cached_property
    def prior_joint(self) -> np.ndarray:
        """Prior over the joint skill space (parameter-dependent, not shared)."""
        vec = np.ones(self.joint_size)
        for j, prior in enumerate(self.skill_priors):
            vec *= prior[self.joint_states[:, j]]
        vec = np.ascontiguousarray(vec)
        vec.flags.writeable = False
        return vec

    # -- derived -------------------------------------------------------------

    def with_parameters(
        self, skill_priors: tuple[np.ndarray, ...], cpts: tuple[Cpt, ...]
    ) -> "StudentModel":
        """New model sharing this one's structure (and its structural caches)."""
        new = replace(self, skill_priors=tuple(skill_priors), cpts=tuple(cpts))
        for name in _STRUCT_CACHES:
            if name in self.__dict__:
                new.__dict__[name] = self.__dict__[name]
        return new

    def question_order(self, question_id: int) -> ParentConfigOrder:
        return self.orders[question_id]

    def monotonicity_certificate(
        self, tolerance: float = DEFAULT_MONOTONE_TOL
    ) -> tuple[MonotonicityReport, ...]:
        return tuple(
            is_monotone(cpt, order, tolerance) for cpt, order in zip(self.cpts, self.orders)
        )


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelError(f"{where}: expected an integer, got {value!r}")
    return value


def validate_model(model: StudentModel) -> None:
    """Raise ModelError naming the offending variable on any broken invariant."""
    m, n = model.num_skills, model.num_questions
    for j, skill in enumerate(model.skills):
        if skill.id != j:
            raise ModelError(f"skill at position {j} has id {skill.id}; ids must be 0..m-1 in order")
        if skill.num_states < 2:
            raise ModelError(f"skill {j}: needs at least 2 states, got {skill.num_states}")
    for i, q in enumerate(model.questions):
        if q.id != i:
            raise ModelError(
                f"question at position {i} has id {q.id}; ids must be 0..n-1 in order"
            )
        if q.num_states < 2:
            raise ModelError(f"question {i}: needs at least 2 states, got {q.num_states}")
        if len(q.points) != q.num_states:
            raise ModelError(f"question {i}: {len(q.points)} point values for {q.num_states} states")
        if q.points[0] != 0:
            raise ModelError(f"question {i}: state 0 must be worth 0 points, got {q.points[0]}")
        if any(b <= a for a, b in zip(q.points, q.points[1:])):
            raise ModelError(f"question {i}: point values must be strictly increasing")
        if any(p < 0 for p in q.points):
            raise ModelError(f"question {i}: negative point value")
    if len(model.parents) != n or len(model.cpts) != n or len(model.annotations) != n:
        raise ModelError("parents, cpts and annotations must align with questions")
    if len(model.skill_priors) != m:
        raise ModelError("skill_priors must align with skills")
    for j, prior in enumerate(model.skill_priors):
        if prior.shape != (model.skills[j].num_states,):
            raise ModelError(f"skill {j}: prior length {prior.shape} != {model.skills[j].num_states}")
        _check_distribution(prior, f"skill {j} prior")
    for i, pars in enumerate(model.parents):
        if not pars:
            raise ModelError(f"question {i}: needs at least one parent skill")
        if len(set(pars)) != len(pars):
            raise ModelError(f"question {i}: duplicate parent ids {pars}")
        for p in pars:
            if not 0 <= p < m:
                raise ModelError(f"question {i}: parent {p} is not a skill id (bipartite network)")
    for i, (cpt, ann) in enumerate(zip(model.cpts, model.annotations)):
        if cpt.question != i or ann.question != i:
            raise ModelError(f"question {i}: cpt/annotation labelled for question {cpt.question}")
        expected_rows = 1
        for p in model.parents[i]:
            expected_rows *= model.skills[p].num_states
        if cpt.table.shape != (expected_rows, model.questions[i].num_states):
            raise ModelError(
                f"question {i}: CPT shape {cpt.table.shape}, "
                f"expected ({expected_rows}, {model.questions[i].num_states})"
            )
        for r in range(cpt.table.shape[0]):
            _check_distribution(cpt.table[r], f"question {i} CPT row {r}")
        pars = set(model.parents[i])
        iso, anti = set(ann.isotone), set(ann.antitone)
        if iso & anti:
            raise ModelError(f"question {i}: parents {sorted(iso & anti)} marked both isotone and antitone")
        if (iso | anti) != pars:
            raise ModelError(
                f"question {i}: annotation must partition parents {sorted(pars)}, "
                f"got isotone={sorted(iso)} antitone={sorted(anti)}"
            )


def _check_distribution(vec: np.ndarray, where: str) -> None:
    if np.any(vec < 0):
        raise ModelError(f"{where}: negative probability")
    total = float(vec.sum())
    if abs(total - 1.0) > PROB_ATOL:
        raise ModelError(f"{where}: probabilities sum to {total!r}, not 1")


def build_model(description: dict) -> StudentModel:
    """Build and validate a model from a plain description mapping.

    Expected keys: "skills" (id, num_states, name), "questions" (id,
    num_states, points, parents, optional isotone/antitone/label), optional
    "priors" and "cpts" (uniform when absent). Annotations default to all
    parents isotone.
    """
    if not isinstance(description, dict):
        raise ModelError("model description must be a mapping")
    skills = []
    for entry in description.get("skills", []):
        if "parents" in entry:
            raise ModelError(
                f"skill {entry.get('id')}: skills may not have parents (network must be bipartite)"
            )
        skills.append(
            SkillVar(
                id=_as_int(entry.get("id"), "skill id"),
                num_states=_as_int(entry.get("num_states"), f"skill {entry.get('id')} num_states"),
                name=str(entry.get("name", "")),
            )
        )
    if not skills:
        raise ModelError("model needs at least one skill")
    questions, parents, annotations = [], [], []
    for entry in description.get("questions", []):
        qid = _as_int(entry.get("id"), "question id")
        num_states = _as_int(entry.get("num_states"), f"question {qid} num_states")
        points = entry.get("points")
        if points is None:
            points = tuple(range(num_states))
        questions.append(
            QuestionVar(
                id=qid,
                num_states=num_states,
                points=tuple(int(p) for p in points),
                label=str(entry.get("label", f"Q{qid}")),
            )
        )
        pars = tuple(_as_int(p, f"question {qid} parent") for p in entry.get("parents", ()))
        parents.append(pars)
        iso = entry.get("isotone")
        anti = entry.get("antitone")
        if iso is None and anti is None:
            iso, anti = pars, ()
        annotations.append(
            MonotonicityAnnotation(
                question=qid,
                isotone=tuple(int(p) for p in (iso or ())),
                antitone=tuple(int(p) for p in (anti or ())),
            )
        )
    if not questions:
        raise ModelError("model needs at least one question")

    priors_in = description.get("priors")
    priors = []
    for j, skill in enumerate(skills):
        if priors_in is None:
            priors.append(np.full(skill.num_states, 1.0 / skill.num_states))
        else:
            priors.append(np.asarray([float(x) for x in priors_in[j]]))

    cpts_in = description.get("cpts")
    cpts = []
    for i, q in enumerate(questions):
        rows = 1
        for p in parents[i]:
            if 0 <= p < len(skills):
                rows *= skills[p].num_states
        if cpts_in is None:
            table = np.full((rows, q.num_states), 1.0 / q.num_states)
        else:
            table = np.asarray([[float(x) for x in row] for row in cpts_in[i]])
        cpts.append(Cpt(question=q.id, table=table))

    model = StudentModel(
        skills=tuple(skills),
        questions=tuple(questions),
        parents=tuple(parents),
        skill_priors=tuple(priors),
        cpts=tuple(cpts),
        annotations=tuple(annotations),
    )
    validate_model(model)
    return model
