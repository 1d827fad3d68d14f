"""Shared pytest setup: import path, slow-suite gate and small fixtures"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest

from app.core.types import Dataset

FULL_SUITE = os.getenv("RESILIENT_FULL_SUITE") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, enabled with RESILIENT_FULL_SUITE=1")


def pytest_collection_modifyitems(config, items):
    if FULL_SUITE:
        return
    skip_slow = pytest.mark.skip(reason="set RESILIENT_FULL_SUITE=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def separable_2d():
    positives = [[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]]
    negatives = [[3, 3], [4, 3], [3, 4], [4, 4], [3.5, 3.5]]
    return Dataset.from_classes(positives, negatives)


@pytest.fixture
def overlap_pair():
    """Clean 1D data (3, 14) and a tampered copy with six negatives stacked on the positives"""
    positives = [0.0, 1.0, 2.0]
    negatives = [float(v) for v in range(10, 24)]
    clean = Dataset.from_classes(positives, negatives)
    tampered = Dataset.from_classes(positives, [0.0, 0.0, 1.0, 1.0, 2.0, 2.0] + negatives[6:])
    return clean, tampered


def lattice_dataset(rng: np.random.Generator, n: int, p: int, top: int = 2) -> Dataset:
    """Random integer points in {0..top}^p with both labels present"""
    X = rng.integers(0, top + 1, size=(n, p)).astype(float)
    y = rng.choice([1, -1], size=n)
    y[0], y[1] = 1, -1
    return Dataset(X, y)
