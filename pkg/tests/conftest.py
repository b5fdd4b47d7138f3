"""Shared generators for randomized checks (seeded, deterministic)."""

import numpy as np
import pytest

from projfit.distributions import bernoulli, categorical, gaussian, gaussian_mixture, poisson


def random_bernoulli(rng, lo=0.05, hi=0.95):
    return bernoulli(rng.uniform(lo, hi))


def random_categorical(rng, points, floor=0.02):
    w = rng.dirichlet(np.ones(len(points))) * (1 - floor * len(points)) + floor
    w = w / w.sum()
    return categorical(points, w)


def random_gaussian(rng):
    return gaussian(rng.uniform(-2, 2), rng.uniform(0.5, 2.5))


def random_mixture(rng, k=2):
    w = rng.dirichlet(np.ones(k))
    return gaussian_mixture(w, rng.uniform(-2, 2, k), rng.uniform(0.5, 3.0, k))


def random_poisson(rng):
    return poisson(rng.uniform(0.5, 25.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)
