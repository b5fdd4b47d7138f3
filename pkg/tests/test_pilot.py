import math

import numpy as np
import pytest

from projfit.distributions import (
    bernoulli,
    bernoulli_family,
    gaussian_location_scale_family,
    poisson_family,
)
from projfit.divergences import DP, HELLINGER, KL, MMD, TV, W1, GridSpec, KernelSpec
from projfit.errors import InsufficientData
from projfit.pilot import PilotSpec, fit_min_distance, fit_mle, pilot_from_string


def test_mle_two_point_all_zeros():
    fam = bernoulli_family(points=(0.0, 0.5))
    assert fit_mle(fam, np.zeros(50)).params == (0.0,)
    data = np.zeros(50)
    data[:3] = 1.0  # any one forces the interior point
    assert fit_mle(fam, data).params == (0.5,)


def test_mle_closed_forms():
    fam = poisson_family(0.5, 30.0)
    x = np.array([9.0, 10.0, 10.1])
    assert fit_mle(fam, x).params[0] == pytest.approx(x.mean(), abs=1e-12)
    ls = gaussian_location_scale_family((-5, 5), (0.1, 5))
    x = np.array([0.0, 1.0, 2.0, 3.0])
    got = fit_mle(ls, x)
    assert got.params[0] == pytest.approx(1.5, abs=1e-12)
    assert got.params[1] == pytest.approx(np.std(x), abs=1e-12)  # 1/n convention
    with pytest.raises(InsufficientData):
        fit_mle(fam, np.array([]))


def test_mle_respects_box():
    fam = poisson_family(0.5, 30.0)
    assert fit_mle(fam, np.zeros(20)).params == (0.5,)


def test_mhde_two_point_threshold():
    # Bern(0) wins iff the sample mean is below 0.5 - 1/(2 sqrt 2) ~ 0.1464
    fam = bernoulli_family(points=(0.0, 0.5))
    cut = 0.5 - 1.0 / (2.0 * math.sqrt(2.0))
    n = 1000
    below = np.zeros(n)
    below[: int((cut - 0.01) * n)] = 1.0
    above = np.zeros(n)
    above[: int((cut + 0.01) * n)] = 1.0
    assert fit_min_distance(fam, below, HELLINGER).params == (0.0,)
    assert fit_min_distance(fam, above, HELLINGER).params == (0.5,)


def test_tv_mde_matches_empirical_frequency():
    fam = bernoulli_family(0.01, 0.99)
    n = 1000
    data = np.zeros(n)
    data[:310] = 1.0
    got = fit_min_distance(fam, data, TV, GridSpec(points_per_dim=99))
    assert got.params[0] == pytest.approx(0.31, abs=1e-6)


def test_dp_and_mmd_mde_run_and_land_near_truth(rng):
    fam = bernoulli_family(0.01, 0.99)
    data = bernoulli(0.3).sample(4000, seed=2)
    for tag in (DP(0.5), MMD(KernelSpec(bandwidth=0.7)), W1(1.0)):
        got = fit_min_distance(fam, data, tag, GridSpec(points_per_dim=99))
        assert abs(got.params[0] - 0.3) < 0.03, tag.label()


def test_mle_equals_kl_mde_on_discrete_family():
    fam = bernoulli_family(0.01, 0.99)
    data = bernoulli(0.42).sample(500, seed=9)
    a = fit_mle(fam, data, GridSpec(points_per_dim=200))
    b = fit_min_distance(fam, data, KL, GridSpec(points_per_dim=200))
    assert a.params[0] == pytest.approx(b.params[0], abs=1e-6)


def test_consistency_smoke_all_pilots():
    data = bernoulli(0.3).sample(10**4, seed=31)
    fam = bernoulli_family(0.01, 0.99)
    grid = GridSpec(points_per_dim=200)
    pilots = [
        PilotSpec("mle", grid=grid),
        PilotSpec("mde", divergence=HELLINGER, grid=grid),
        PilotSpec("mde", divergence=TV, grid=grid),
        PilotSpec("mde", divergence=DP(0.5), grid=grid),
        PilotSpec("mde", divergence=MMD(KernelSpec(bandwidth=0.7)), grid=grid),
    ]
    for spec in pilots:
        got = spec.fit(fam, data)
        assert abs(got.params[0] - 0.3) < 0.02, spec.label()


def test_gaussian_histogram_mde():
    ls = gaussian_location_scale_family((-3, 3), (0.5, 4))
    from projfit.distributions import gaussian

    data = gaussian(1.0, 1.5).sample(4000, seed=17)
    grid = GridSpec(points_per_dim=41)
    for tag in (HELLINGER, TV):
        got = fit_min_distance(ls, data, tag, grid)
        assert abs(got.params[0] - 1.0) < 0.15
        assert abs(got.params[1] - 1.5) < 0.25


def test_pilot_parsing():
    assert pilot_from_string("mle").kind == "mle"
    p = pilot_from_string("mde", default_tag=HELLINGER)
    assert p.kind == "mde" and p.divergence.kind == "hellinger"
    p = pilot_from_string("mde:tv")
    assert p.divergence.kind == "tv"
    p = pilot_from_string("mde:kl")
    assert p.kind == "mle"  # the empirical KL criterion is the likelihood
    with pytest.raises(ValueError):
        pilot_from_string("bayes")
