"""Shared instance generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from arccount.core import Seed, WeightedPointSet


def gaussian_instance(
    n: int, d: int, spread: float, seed: int, unit_weights: bool = True
) -> WeightedPointSet:
    """Points N(0, spread^2 I) with unit or uniform positive weights."""
    rng = Seed(seed).generator()
    points = rng.normal(0.0, spread, size=(n, d))
    weights = np.ones(n) if unit_weights else rng.uniform(0.1, 2.0, size=n)
    return WeightedPointSet(points, weights)


def clustered_instance(
    n: int, d: int, k: int, separation: float, sigma: float, seed: int
) -> tuple[WeightedPointSet, np.ndarray]:
    """k well-separated Gaussian clusters; returns the points and the centers."""
    rng = Seed(seed).generator()
    centers = np.zeros((k, d))
    for i in range(k):
        # rejection-sample centers pairwise at least `separation` apart
        for _ in range(1000):
            cand = rng.uniform(0.0, separation * k, size=d)
            if all(np.linalg.norm(cand - centers[j]) >= separation for j in range(i)):
                centers[i] = cand
                break
        else:
            raise RuntimeError("could not separate cluster centers")
    who = rng.integers(0, k, size=n)
    points = centers[who] + rng.normal(0.0, sigma, size=(n, d))
    return WeightedPointSet(points, np.ones(n)), centers


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
