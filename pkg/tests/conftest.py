"""Shared fixtures: the solver-generated instance corpus used across suites."""

import pytest

from mayleonard import random_admissible_instance

CORPUS_SIZE = 1000


@pytest.fixture(scope="session")
def real_corpus():
    """1000 admissible real instances, seeds 0..999, built once per session."""
    return [random_admissible_instance(seed) for seed in range(CORPUS_SIZE)]
