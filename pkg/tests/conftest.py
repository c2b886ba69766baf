"""Shared fixtures: small hand-built networks and the big example model."""

import pytest
from helpers import random_small_model, tiny_description

from monocat import build_model, example_model


@pytest.fixture
def tiny_model():
    return build_model(tiny_description())


@pytest.fixture
def small_model():
    return random_small_model(seed=11)


@pytest.fixture(scope="session")
def example():
    return example_model(seed=3)
