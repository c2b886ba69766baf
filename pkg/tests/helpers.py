"""Hand-built network descriptions shared across test modules."""

import numpy as np

from monocat import build_model
from monocat.learning import random_parameters


def tiny_description(p_low=0.8, p_high=0.2):
    """One binary skill, one binary question; P(X=0|s) = p_low, p_high."""
    return {
        "skills": [{"id": 0, "num_states": 2}],
        "questions": [{"id": 0, "num_states": 2, "points": [0, 1], "parents": [0]}],
        "priors": [[0.5, 0.5]],
        "cpts": [[[p_low, 1 - p_low], [p_high, 1 - p_high]]],
    }


def small_description():
    """Two binary skills, three questions with mixed parent sets."""
    return {
        "skills": [{"id": 0, "num_states": 2}, {"id": 1, "num_states": 2}],
        "questions": [
            {"id": 0, "num_states": 2, "points": [0, 1], "parents": [0]},
            {"id": 1, "num_states": 3, "points": [0, 1, 2], "parents": [1]},
            {"id": 2, "num_states": 2, "points": [0, 1], "parents": [0, 1]},
        ],
    }


def random_small_model(seed: int):
    """The small structure with random (unconstrained) parameters."""
    model = build_model(small_description())
    rng = np.random.default_rng(seed)
    return model.with_parameters(*random_parameters(model, rng))
