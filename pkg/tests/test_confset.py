import json
import math

import numpy as np
import pytest

from projfit.bounds import HoeffdingRule, RediNormalRule, SplitLrtRule
from projfit.confset import (
    crossfit_set,
    invert_grid,
    invert_rays,
    slrt_rule,
    slrt_threshold,
    split,
)
from projfit.distributions import (
    bernoulli,
    bernoulli_family,
    gaussian_location_scale_family,
    negbin_from_mean_dispersion,
    poisson_family,
)
from projfit.divergences import DP, KL, GridSpec
from projfit.errors import InsufficientData, InvalidCenter
from projfit.pilot import PilotSpec
from projfit.relfit import PairStatistic, statistic_for, summarize
from projfit.simharness import contamination_truth
from projfit.util import rng_from

TWO_POINT = bernoulli_family(points=(0.0, 0.5))
GRID = GridSpec()


def test_split_examples():
    sp = split(10, 0.5, seed=4)
    assert len(sp.d0) == 5 and len(sp.d1) == 5
    assert sorted(np.concatenate([sp.d0, sp.d1]).tolist()) == list(range(10))
    again = split(10, 0.5, seed=4)
    assert np.array_equal(sp.d0, again.d0) and np.array_equal(sp.d1, again.d1)
    assert len(split(11, 0.4, seed=1).d0) == 4  # floor(ratio * n)
    with pytest.raises(InsufficientData):
        split(3, 0.5, seed=0)


def test_slrt_threshold_examples():
    assert slrt_threshold(100, 0.05) == pytest.approx(0.029957, abs=1e-6)
    assert slrt_threshold(100, 1.0) == 0.0
    # 1/n0 decay vs the 1/sqrt(n0) studentized rate
    assert slrt_threshold(400, 0.05) == pytest.approx(slrt_threshold(100, 0.05) / 4.0, abs=1e-12)


def _all_zero_set(rule, stat):
    data = np.zeros(40)
    sp = split(40, 0.5, seed=7)
    return invert_grid(TWO_POINT, GRID, data, sp, PilotSpec("mle"), stat, rule, noise_seed=3)


def test_example1_failure_and_fix_single_dataset():
    # all-zero data: the pilot is Bern(0); the split LRT evicts the KL projection
    cs = _all_zero_set(slrt_rule(0.05), statistic_for(KL, delta=0.0))
    assert cs.contains((0.0,)) and not cs.contains((0.5,))
    # the bounded density-power statistic with the Hoeffding cutoff keeps Bern(0)
    cs = _all_zero_set(HoeffdingRule(0.05, B=2.0), statistic_for(DP(1.0), delta=0.0))
    assert cs.contains((0.0,))


def test_alpha_extremes_monotonicity():
    fam = bernoulli_family(points=(0.1, 0.5))
    data = bernoulli(0.2).sample(60, seed=5)
    sp = split(60, 0.5, seed=6)
    stat = statistic_for(KL, delta=0.01)
    tight = invert_grid(fam, GRID, data, sp, PilotSpec("mle"), stat, RediNormalRule(1 - 1e-12), noise_seed=2)
    loose = invert_grid(fam, GRID, data, sp, PilotSpec("mle"), stat, RediNormalRule(1e-12), noise_seed=2)
    assert np.all(tight.mask <= loose.mask)
    assert loose.mask.all()  # alpha -> 0 keeps the whole grid
    # the pilot's own parameter survives even at extreme levels
    pilot_param = tight.provenance["pilot_params"]
    assert tight.contains(tuple(pilot_param))


@pytest.mark.parametrize(
    "rule",
    [SplitLrtRule(0.2), RediNormalRule(0.2), HoeffdingRule(0.2, B=4.0)],
    ids=lambda r: r.label(),
)
def test_alpha_monotone_nesting(rule, rng):
    from dataclasses import replace

    fam = poisson_family(0.5, 30.0)
    grid = GridSpec(explicit=tuple((v,) for v in np.arange(2.0, 25.0, 0.5)))
    data = negbin_from_mean_dispersion(10, 3).sample(100, seed=12)
    sp = split(100, 0.5, seed=13)
    if isinstance(rule, HoeffdingRule):
        stat = statistic_for(DP(1.0), delta=0.0)
    else:
        stat = statistic_for(KL, delta=0.01 if isinstance(rule, RediNormalRule) else 0.0)
    inner = invert_grid(fam, grid, data, sp, PilotSpec("mle"), stat, rule, noise_seed=4)
    outer = invert_grid(fam, grid, data, sp, PilotSpec("mle"), stat, replace(rule, alpha=0.02), noise_seed=4)
    assert np.all(inner.mask <= outer.mask)


def test_diagonal_membership_always():
    # a grid point equal to the fitted pilot parameter is accepted by construction
    fam = bernoulli_family(0.01, 0.99)
    grid = GridSpec(explicit=tuple((v,) for v in np.round(np.arange(0.05, 1.0, 0.05), 10)))
    data = bernoulli(0.5).sample(80, seed=21)
    sp = split(80, 0.5, seed=22)
    for rule in (RediNormalRule(0.4), SplitLrtRule(0.4)):
        cs = invert_grid(fam, grid, data, sp, PilotSpec("mle", grid=grid), statistic_for(KL), rule, noise_seed=5)
        pilot_param = cs.provenance["pilot_params"]
        assert cs.contains(tuple(pilot_param))


def test_exact_set_coverage_small_n():
    # bounded statistic + Hoeffding rule: finite-sample coverage at n = 20
    truth = bernoulli(0.45)
    fam = TWO_POINT
    stat = statistic_for(DP(1.0), delta=0.0)
    rule = HoeffdingRule(0.1, B=2.0)
    from projfit.divergences import project

    proj = project(DP(1.0), truth, fam, GRID)
    R, covered = 1000, 0
    for r in range(R):
        data = truth.sample(20, seed=1000 + r)
        sp = split(20, 0.5, seed=2000 + r)
        cs = invert_grid(fam, GRID, data, sp, PilotSpec("mle"), stat, rule, noise_seed=r)
        covered += cs.contains(proj.theta)
    rate = covered / R
    assert rate >= 0.9 - 3.0 * math.sqrt(0.1 * 0.9 / R)


def test_invert_rays_center_and_roots():
    truth = contamination_truth(1)
    fam = gaussian_location_scale_family((-3.0, 3.0), (0.5, 8.0))
    data = truth.sample(200, 5)
    sp = split(200, 0.5, seed=6)
    stat = statistic_for(KL, delta=0.01)
    rule = RediNormalRule(0.05)
    rays = invert_rays(fam, data, sp, PilotSpec("mle"), stat, rule, n_rays=16, noise_seed=77)
    assert rays.contains(rays.center)
    assert np.all(rays.radii >= 0)
    assert rays.provenance["star_violations"] == 0
    # beyond every ray boundary is outside
    for d, r in zip(rays.directions, rays.radii):
        assert not rays.contains(rays.center + (r + 0.25) * d)

    # Brent root against a 60-step bisection oracle of the same evidence
    x0, x1 = data[sp.d0], data[sp.d1]
    pilot = PilotSpec("mle").fit(fam, x1)
    noise = rng_from(77).standard_normal(len(x0))

    def evidence(theta):
        v = PairStatistic(stat, fam.make(fam.clip(theta)), pilot).values(x0)
        return rule.decide(summarize(v, stat.delta, noise)).residual

    j = int(np.argmax(rays.radii))
    omega = rays.directions[j]
    lo, hi = 0.0, rays.radii[j] + 0.2
    assert evidence(rays.center + hi * omega) > 0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if evidence(rays.center + mid * omega) > 0:
            hi = mid
        else:
            lo = mid
    assert rays.radii[j] == pytest.approx(0.5 * (lo + hi), abs=1e-6)


def test_invert_rays_invalid_center():
    from projfit.distributions import gaussian

    fam = gaussian_location_scale_family((-1.0, 1.0), (0.5, 2.0))
    data = np.concatenate([np.full(20, 0.2), np.full(20, -0.1)])
    sp = split(40, 0.5, seed=1)
    with pytest.raises(InvalidCenter):
        invert_rays(fam, data, sp, gaussian(5.0, 1.0), statistic_for(KL), RediNormalRule(0.05))


def test_crossfit_definition_identity():
    # the cross-fit mean is the size-weighted average of the two half means
    fam = bernoulli_family(0.01, 0.99)
    grid = GridSpec(explicit=((0.3,), (0.6,)))
    data = bernoulli(0.45).sample(100, seed=3)
    sp = split(100, 0.5, seed=4)
    stat = statistic_for(KL, delta=0.0)
    cs = crossfit_set(fam, grid, data, sp, PilotSpec("mle", grid=GridSpec(points_per_dim=99)), stat, alpha=0.05, noise_seed=9)
    x0, x1 = data[sp.d0], data[sp.d1]
    p1 = PilotSpec("mle", grid=GridSpec(points_per_dim=99)).fit(fam, x1)
    p0 = PilotSpec("mle", grid=GridSpec(points_per_dim=99)).fit(fam, x0)
    for i, th in enumerate(cs.thetas):
        t0 = PairStatistic(stat, fam.make(th), p1).values(x0).mean()
        t1 = PairStatistic(stat, fam.make(th), p0).values(x1).mean()
        assert cs.tbar[i] == pytest.approx((len(x0) * t0 + len(x1) * t1) / 100.0, abs=1e-12)


def test_contains_and_serialization():
    data = bernoulli(0.2).sample(40, seed=2)
    sp = split(40, 0.5, seed=3)
    cs = invert_grid(TWO_POINT, GRID, data, sp, PilotSpec("mle"), statistic_for(KL, delta=0.0), slrt_rule(0.05), noise_seed=1)
    payload = json.loads(cs.to_json())
    assert payload["kind"] == "grid"
    assert payload["provenance"]["rule"] == "slrt"
    assert len(payload["mask"]) == 2
    # grid CSV dump round-trips the decisions
    import csv, os, tempfile

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "grid.csv")
        cs.write_grid_csv(path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert [int(r["accepted"]) for r in rows] == cs.mask.astype(int).tolist()


def test_min_diameter_event(rng):
    # both the projection and the pilot sit in the exact set with prob >= 1 - 2 alpha
    truth = bernoulli(0.5)
    fam = bernoulli_family(points=(0.2, 0.8))
    stat = statistic_for(KL, delta=0.0)
    rule = HoeffdingRule(0.1, B=2.0 * math.log(4.0))
    from projfit.divergences import project

    proj = project(KL, truth, fam, GRID)
    R, both = 400, 0
    for r in range(R):
        data = truth.sample(60, seed=5000 + r)
        sp = split(60, 0.5, seed=6000 + r)
        cs = invert_grid(fam, GRID, data, sp, PilotSpec("mle"), stat, rule, noise_seed=r)
        both += cs.contains(proj.theta) and cs.contains(tuple(cs.provenance["pilot_params"]))
    assert both / R >= 1.0 - 2 * 0.1 - 3.0 * math.sqrt(0.2 * 0.8 / R)
