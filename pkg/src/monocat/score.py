"""Total-score distributions, credible sets and grade summaries.

The score of a test is the sum of the points earned per question. Its
distribution under a skill posterior is computed without ever materialising a
sum node: per joint skill configuration the per-question point distributions
are combined by a balanced tree of batched convolutions, and the results are
mixed by the posterior weights at the end.

Two variants:

* "A" treats answered questions as a fixed point offset and convolves only
  the unanswered ones (the during-a-test view);
* "B" draws every question from its table rows regardless of the recorded
  answers (the what-would-this-student-score view).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from monocat.errors import CapacityError, ModelError
from monocat.inference import evidence_to_vector, posterior_joint
from monocat.kernels import convolve_batch, gather_likelihood
from monocat.model import StudentModel

CREDIBLE_SLACK = 1e-12
NAIVE_QUESTION_CAP = 22


@dataclass(frozen=True)
class CredibleSet:
    """Smallest set of scores reaching the requested posterior mass."""

    scores: tuple[int, ...]
    coverage: float
    lo: int
    hi: int


@dataclass(frozen=True)
class ScoreDistribution:
    """Distribution over total scores 0..max, stored densely."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(np.asarray(self.probs, dtype=float))
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def max_score(self) -> int:
        return len(self.probs) - 1

    @property
    def expected(self) -> float:
        return float(np.arange(len(self.probs)) @ self.probs)

    @property
    def most_probable(self) -> int:
        """Highest-probability score; ties go to the lower score."""
        return int(np.argmax(self.probs))

    def credible_set(self, mass: float = 0.95) -> CredibleSet:
        """Shortest prefix of scores, taken most-probable first, covering `mass`.

        Scores are ranked by probability descending with ties broken toward
        the lower score, and the prefix stops as soon as the accumulated mass
        reaches the target (up to a 1e-12 slack).
        """
        if not 0.0 < mass <= 1.0:
            raise ModelError(f"credible mass must be in (0, 1], got {mass}")
        order = np.lexsort((np.arange(len(self.probs)), -self.probs))
        cum = np.cumsum(self.probs[order])
        k = int(np.searchsorted(cum, mass - CREDIBLE_SLACK))
        k = min(k, len(order) - 1)
        members = np.sort(order[: k + 1])
        return CredibleSet(
            scores=tuple(int(s) for s in members),
            coverage=float(cum[k]),
            lo=int(members[0]),
            hi=int(members[-1]),
        )


@dataclass(frozen=True)
class GradeScale:
    """Contiguous inclusive score bins with display labels, best bin first or worst
    first as the caller likes; grading only uses bin indices."""

    bounds: tuple[tuple[int, int], ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.bounds) != len(self.labels):
            raise ModelError("grade scale needs one label per bin")
        if not self.bounds:
            raise ModelError("grade scale needs at least one bin")
        for i, (lo, hi) in enumerate(self.bounds):
            if lo > hi:
                raise ModelError(f"grade bin {i}: empty range [{lo}, {hi}]")
            if i and lo != self.bounds[i - 1][1] + 1:
                raise ModelError(f"grade bin {i}: not contiguous with bin {i - 1}")

    @property
    def num_bins(self) -> int:
        return len(self.bounds)

    def bin_of(self, score: int) -> int:
        for i, (lo, hi) in enumerate(self.bounds):
            if lo <= score <= hi:
                return i
        raise ModelError(f"score {score} outside grade scale range")


# The 52-point national exam scale: label "5" is the lowest band, "1" the best.
NATIONAL_EXAM_SCALE = GradeScale(
    bounds=((0, 16), (17, 25), (26, 34), (35, 43), (44, 52)),
    labels=("5", "4", "3", "2", "1"),
)


def bin_masses(dist: ScoreDistribution, scale: GradeScale) -> np.ndarray:
    """Probability mass per grade bin; the scale must span exactly 0..max score."""
    if scale.bounds[0][0] != 0 or scale.bounds[-1][1] != dist.max_score:
        raise ModelError(
            f"grade scale spans {scale.bounds[0][0]}..{scale.bounds[-1][1]}, "
            f"distribution spans 0..{dist.max_score}"
        )
    return np.asarray([dist.probs[lo : hi + 1].sum() for lo, hi in scale.bounds])


def grade(dist: ScoreDistribution, scale: GradeScale) -> int:
    """Index of the most probable grade bin; ties go to the lower index."""
    return int(np.argmax(bin_masses(dist, scale)))


def grade_error(dist: ScoreDistribution, scale: GradeScale, observed_bin: int) -> float:
    """Expected absolute bin distance from a known grade bin.

    This is the grading analogue of absolute score error: each bin's mass is
    weighted by how many bins it sits away from `observed_bin`.
    """
    masses = bin_masses(dist, scale)
    if not 0 <= observed_bin < len(masses):
        raise ModelError(
            f"observed bin {observed_bin} outside scale with {len(masses)} bins"
        )
    return float(np.abs(observed_bin - np.arange(len(masses))) @ masses)


def expected_grade_error(dist: ScoreDistribution, scale: GradeScale) -> float:
    """Grade error taken against the distribution's own most probable bin.

    A truth-free proxy: how far the mass sits from the grade that would be
    assigned right now.
    """
    masses = bin_masses(dist, scale)
    best = int(np.argmax(masses))
    return float(np.abs(best - np.arange(len(masses))) @ masses)


def _question_block(model: StudentModel, qid: int) -> np.ndarray:
    """Per joint config, the distribution of this question's points, shape (J, max_pts+1)."""
    q = model.questions[qid]
    rows = model.cpts[qid].table[model.row_indices[qid]]
    block = np.zeros((model.joint_size, q.points[-1] + 1))
    block[:, list(q.points)] = rows
    return block


def _conv_tree(blocks: list[np.ndarray]) -> np.ndarray:
    """Balanced pairwise reduction so intermediate widths stay as small as possible."""
    while len(blocks) > 1:
        merged = [convolve_batch(a, b) for a, b in zip(blocks[::2], blocks[1::2])]
        if len(blocks) % 2:
            merged.append(blocks[-1])
        blocks = merged
    return blocks[0]


def score_distribution(
    model: StudentModel,
    evidence=None,
    variant: str = "A",
    posterior: np.ndarray | None = None,
) -> ScoreDistribution:
    """Exact total-score distribution under the posterior given the evidence.

    A precomputed joint `posterior` can be passed to skip re-running
    inference; it must correspond to the same evidence.
    """
    if variant not in ("A", "B"):
        raise ModelError(f"unknown score variant {variant!r}")
    vec = evidence_to_vector(model, evidence if evidence is not None else {})
    if posterior is None:
        posterior, _ = posterior_joint(model, vec)

    if variant == "A":
        answered = np.nonzero(vec >= 0)[0]
        offset = int(sum(model.questions[q].points[vec[q]] for q in answered))
        open_ids = [q for q in range(model.num_questions) if vec[q] < 0]
    else:
        offset = 0
        open_ids = list(range(model.num_questions))

    probs = np.zeros(model.max_score + 1)
    if not open_ids:
        probs[offset] = 1.0
        return ScoreDistribution(probs=probs)
    tree = _conv_tree([_question_block(model, q) for q in open_ids])
    probs[offset : offset + tree.shape[1]] = posterior @ tree
    return ScoreDistribution(probs=probs)


def score_distribution_naive(
    model: StudentModel,
    evidence=None,
    variant: str = "A",
    posterior: np.ndarray | None = None,
    question_cap: int = NAIVE_QUESTION_CAP,
) -> ScoreDistribution:
    """Reference implementation enumerating every completion of the open questions.

    Exponential in the number of open questions, so it refuses to run past
    `question_cap` of them. Exists to cross-check the convolution path and to
    make the cost of not factorising the sum node measurable.
    """
    if variant not in ("A", "B"):
        raise ModelError(f"unknown score variant {variant!r}")
    vec = evidence_to_vector(model, evidence if evidence is not None else {})
    if posterior is None:
        posterior, _ = posterior_joint(model, vec)

    if variant == "A":
        answered = np.nonzero(vec >= 0)[0]
        offset = int(sum(model.questions[q].points[vec[q]] for q in answered))
        open_ids = [q for q in range(model.num_questions) if vec[q] < 0]
    else:
        offset = 0
        open_ids = list(range(model.num_questions))

    if len(open_ids) > question_cap:
        raise CapacityError(
            f"enumerating {len(open_ids)} open questions is infeasible "
            f"(cap {question_cap})"
        )

    probs = np.zeros(model.max_score + 1)
    if not open_ids:
        probs[offset] = 1.0
        return ScoreDistribution(probs=probs)

    counts = [model.questions[q].num_states for q in open_ids]
    total = int(np.prod(counts))
    # mixed-radix strides, last open question varying fastest
    strides = np.ones(len(open_ids), dtype=np.int64)
    for i in range(len(open_ids) - 2, -1, -1):
        strides[i] = strides[i + 1] * counts[i + 1]

    chunk = max(1024, int(8_000_000 // max(model.joint_size, 1)))
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        like = np.ones((len(idx), model.joint_size))
        scores = np.full(len(idx), offset, dtype=np.int64)
        for pos, qid in enumerate(open_ids):
            col = (idx // strides[pos]) % counts[pos]
            gather_likelihood(like, model.cpts[qid].table, model.row_indices[qid], col)
            scores += np.asarray(model.questions[qid].points, dtype=np.int64)[col]
        weights = like @ posterior
        probs += np.bincount(scores, weights=weights, minlength=model.max_score + 1)
    return ScoreDistribution(probs=probs)
