"""Acceptance suite: one test per gate criterion, printed as PASS/FAIL lines.

Monte Carlo assertions use three binomial standard errors as tolerance, per
the harness convention; exact checks carry their stated tolerances.  Run with
``pytest tests/test_acceptance.py -s`` to see the per-criterion lines.
"""

import math

import numpy as np
import pytest

from projfit.bounds import (
    BentkusRule,
    EmpiricalBentkusRule,
    EmpiricalBernsteinRule,
    HoeffdingRule,
    RediNormalRule,
    bentkus_quantile,
)
from projfit.confset import CrossfitRule, invert_grid, invert_rays, split
from projfit.distributions import (
    bernoulli,
    bernoulli_family,
    gaussian_location_scale_family,
)
from projfit.divergences import (
    DP,
    HELLINGER,
    KL,
    MMD,
    TV,
    W1,
    GridSpec,
    KernelSpec,
    approx_projection_set,
    project,
)
from projfit.pilot import PilotSpec
from projfit.relfit import PairStatistic, expectation_bound_terms, statistic_for, summarize
from projfit.simharness import (
    ExperimentConfig,
    contamination_truth,
    example1_regression,
    example2_regression,
    overdispersion_config,
    run_experiment,
)
from projfit.util import rng_from
from conftest import random_bernoulli, random_categorical

NU_H = math.sqrt(3.0 + 2.0 * math.sqrt(2.0))
FIVE_POINTS = (0.0, 0.25, 0.5, 0.75, 1.0)


def _se(p, n):
    return math.sqrt(max(p * (1.0 - p), 1e-12) / n)


def _report(num, ok, text):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {text}")
    assert ok, f"criterion {num}: {text}"


def test_criterion_1_example1_slrt_failure():
    rep = example1_regression(n=1000, alpha=0.05, eps_scale=0.1, replicates=1000, master_seed=101, pipelines=("slrt",))["slrt"]
    assert rep.projection == (0.5,)
    ok = rep.coverage <= 0.15
    _report(1, ok, f"split-LRT coverage of Bern(1/2) = {rep.coverage:.3f} <= 0.15")


def test_criterion_2_example2_slrt_vs_studentized():
    reps = example2_regression(n=2000, alpha=0.05, c=0.1, replicates=2000, master_seed=102)
    assert reps["slrt"].projection == (0.75,)
    ok1 = reps["slrt"].coverage <= 0.90
    ok2 = reps["kl_redi"].coverage >= 0.93
    _report(
        2,
        ok1 and ok2,
        f"split-LRT coverage {reps['slrt'].coverage:.3f} <= 0.90; "
        f"studentized coverage {reps['kl_redi'].coverage:.3f} >= 0.93",
    )


def test_criterion_3_dp_hoeffding_fix():
    rep = example1_regression(n=200, alpha=0.05, eps_scale=0.1, replicates=1000, master_seed=103, pipelines=("dp_hoeffding",))["dp_hoeffding"]
    assert rep.projection == (0.0,)
    ok = rep.coverage >= 0.95 - 0.02
    _report(3, ok, f"density-power/Hoeffding coverage of Bern(0) = {rep.coverage:.3f} >= 0.93")


def test_criterion_4_hellinger_thresholds():
    fam = bernoulli_family(points=(0.0, 0.5))
    thetas, mask, _ = approx_projection_set(HELLINGER, bernoulli(0.04), fam, NU_H, GridSpec())
    small = thetas[mask].ravel().tolist()
    thetas, mask, _ = approx_projection_set(HELLINGER, bernoulli(0.10), fam, NU_H, GridSpec())
    large = sorted(thetas[mask].ravel().tolist())
    flip_lo = project(HELLINGER, bernoulli(0.14), fam, GridSpec()).theta
    flip_hi = project(HELLINGER, bernoulli(0.15), fam, GridSpec()).theta
    ok = small == [0.0] and large == [0.0, 0.5] and flip_lo == (0.0,) and flip_hi == (0.5,)
    _report(4, ok, f"approx set eps=0.04 -> {small}, eps=0.10 -> {large}; projection flips between 0.14 and 0.15")


def test_criterion_5_overdispersion_trend():
    results = {}
    for kappa in (2.0, 5.0):
        for rule_kind in ("slrt", "redi"):
            cfg = overdispersion_config(kappa, rule_kind=rule_kind, n=200, replicates=300, master_seed=105)
            rep = run_experiment(cfg)
            results[(kappa, rule_kind)] = rep
            assert rep.projection[0] == pytest.approx(10.0, abs=1e-3)
    slrt5 = results[(5.0, "slrt")].coverage
    # MC-frequency assertions carry a three-standard-error tolerance
    ok_slrt = slrt5 <= 0.90 + 3.0 * _se(slrt5, 300)
    ok_redi = all(
        results[(k, "redi")].coverage >= 0.95 - 3.0 * _se(results[(k, "redi")].coverage, 300) for k in (2.0, 5.0)
    )
    _report(
        5,
        ok_slrt and ok_redi,
        f"split-LRT coverage at kappa=5 {slrt5:.3f} <= 0.90+3se; studentized coverage "
        f"{results[(2.0, 'redi')].coverage:.3f}/{results[(5.0, 'redi')].coverage:.3f} >= 0.95-3se; projection 10+-1e-3",
    )


def test_criterion_6_approximate_coverage():
    covs = {}
    for kind in ("hellinger", "tv"):
        cfg = overdispersion_config(2.0, stat_kind=kind, rule_kind="redi", n=200, replicates=300, master_seed=106)
        covs[kind] = run_experiment(cfg).approx_coverage
    ok = all(c >= 0.97 for c in covs.values())
    _report(6, ok, f"approximate coverage at kappa=2: hellinger {covs['hellinger']:.3f}, tv {covs['tv']:.3f} >= 0.97")


def test_criterion_7_expectation_bound_suite():
    rng = rng_from(107)
    tags = (KL, DP(1.0), HELLINGER, TV, W1(1.0), MMD(KernelSpec(bandwidth=0.8)))
    worst = -math.inf
    for tag in tags:
        spec = statistic_for(tag, delta=0.0)
        for i in range(500):
            if i % 2 == 0 and tag.kind != "kl":
                Pstar = random_categorical(rng, FIVE_POINTS)
                P0 = random_categorical(rng, FIVE_POINTS)
                P1 = random_categorical(rng, FIVE_POINTS)
            else:
                Pstar = random_bernoulli(rng)
                P0 = random_bernoulli(rng)
                P1 = random_bernoulli(rng)
            lhs, rhs = expectation_bound_terms(spec, Pstar, P0, P1)
            worst = max(worst, lhs - rhs)
    ok = worst <= 1e-9
    _report(7, ok, f"c1 E T <= nu rho0 - rho1 on 500 triples per statistic (worst slack {worst:.2e} <= 1e-9)")


def test_criterion_8_antisymmetry_suite():
    rng = rng_from(108)
    tags = (KL, DP(1.0), HELLINGER, TV, W1(1.0), MMD(KernelSpec(bandwidth=0.8)))
    worst = 0.0
    for tag in tags:
        spec = statistic_for(tag, delta=0.0)
        for _ in range(200):
            P = random_categorical(rng, FIVE_POINTS)
            Q = random_categorical(rng, FIVE_POINTS)
            x = rng.choice(FIVE_POINTS, size=50)
            fwd = PairStatistic(spec, P, Q).values(x)
            bwd = PairStatistic(spec, Q, P).values(x)
            worst = max(worst, float(np.max(np.abs(fwd + bwd))))
    ok = worst <= 1e-9
    _report(8, ok, f"anti-symmetry over 200 pairs x 50 points per statistic (worst {worst:.2e} <= 1e-9)")


def test_criterion_9_finite_sample_bound_validity():
    alpha, R = 0.05, 10**4
    rng = rng_from(109)
    sd_uniform = 1.0 / math.sqrt(3.0)
    rates = {}
    for n0 in (20, 100):
        rules = {
            "hoeffding": HoeffdingRule(alpha, B=1.0),
            "empirical_bernstein": EmpiricalBernsteinRule(alpha, B=1.0),
            "bentkus": BentkusRule(alpha, B=1.0, S=sd_uniform),
            "empirical_bentkus": EmpiricalBentkusRule(alpha, B=1.0),
        }
        rejections = dict.fromkeys(rules, 0)
        for _ in range(R):
            values = rng.uniform(-1.0, 1.0, n0)
            sample = summarize(values, 0.0, 0)
            for name, rule in rules.items():
                rejections[name] += not rule.decide(sample).accept
        for name, count in rejections.items():
            rates[(name, n0)] = count / R
    bound = alpha + 3.0 * _se(alpha, R)
    ok_rates = all(rate <= bound for rate in rates.values())

    # quantile solver against a brute-force grid oracle
    from test_bounds import _bentkus_quantile_brute

    gen = rng_from(1090)
    worst = 0.0
    for _ in range(20):
        n0 = int(gen.integers(8, 60))
        a = float(gen.uniform(0.01, 0.3))
        B = float(gen.uniform(0.5, 2.0))
        S = float(gen.uniform(0.1, 1.0)) * B
        worst = max(worst, abs(bentkus_quantile(n0, a, B, S) - _bentkus_quantile_brute(n0, a, B, S)) / n0)
    ok = ok_rates and worst <= 1e-3
    summary = ", ".join(f"{k[0]}@{k[1]}={v:.4f}" for k, v in sorted(rates.items()))
    _report(9, ok, f"false-rejection {summary} all <= {bound:.4f}; quantile vs brute force {worst:.2e} <= 1e-3")


def test_criterion_10_min_diameter():
    truth = bernoulli(0.5)
    fam = bernoulli_family(points=(0.2, 0.8))
    stat = statistic_for(KL, delta=0.0)
    alpha = 0.05
    rule = HoeffdingRule(alpha, B=2.0 * math.log(4.0))
    proj = project(KL, truth, fam, GridSpec())
    R, both = 2000, 0
    for r in range(R):
        data = truth.sample(100, seed=int(rng_from(110, r).integers(0, 2**31)))
        sp = split(100, 0.5, seed=int(rng_from(111, r).integers(0, 2**31)))
        cs = invert_grid(fam, GridSpec(), data, sp, PilotSpec("mle"), stat, rule, noise_seed=r)
        both += cs.contains(proj.theta) and cs.contains(tuple(cs.provenance["pilot_params"]))
    rate = both / R
    ok = rate >= 1.0 - 2 * alpha - 3.0 * _se(rate, R)
    _report(10, ok, f"projection and pilot jointly covered with frequency {rate:.3f} >= 1-2a-3se")


def test_criterion_11_crossfit_validity():
    grid = GridSpec(explicit=tuple((round(v, 10),) for v in np.arange(0.02, 0.99, 0.02)))
    cfg = ExperimentConfig(
        truth=bernoulli(0.3),
        family=bernoulli_family(0.01, 0.99),
        grid=grid,
        stat=statistic_for(KL, delta=0.01),
        rule=CrossfitRule(0.05),
        pilot=PilotSpec("mle"),
        n=2000,
        replicates=2000,
        alpha=0.05,
        master_seed=111,
        name="crossfit_acceptance",
    )
    rep = run_experiment(cfg)
    ok = rep.coverage >= 0.94
    _report(11, ok, f"cross-fit coverage of the true parameter {rep.coverage:.3f} >= 0.94")


def test_criterion_12_rays_match_grid():
    truth = contamination_truth(1)
    fam = gaussian_location_scale_family((-3.0, 3.0), (0.5, 8.0))
    data = truth.sample(400, 42)
    sp = split(400, 0.5, seed=11)
    stat = statistic_for(KL, delta=0.01)
    rule = RediNormalRule(0.05)
    pilot = PilotSpec("mle")
    grid = GridSpec(points_per_dim=81)
    gset = invert_grid(fam, grid, data, sp, pilot, stat, rule, noise_seed=99)
    rset = invert_rays(fam, data, sp, pilot, stat, rule, n_rays=64, noise_seed=99)
    cell = np.array([(hi - lo) / 80.0 for lo, hi in fam.box])
    cell_diag = float(np.linalg.norm(cell))
    step = float(min(cell)) / 2.0

    def grid_boundary_radius(omega):
        # largest walked radius whose nearest grid point is accepted
        r, last = step, 0.0
        while True:
            theta = rset.center + r * omega
            if not fam.contains(theta):
                break
            if gset.contains(theta):
                last = r
            r += step
        return last

    errs = np.array([abs(grid_boundary_radius(om) - rset.radii[j]) for j, om in enumerate(rset.directions)])
    ok = bool(np.all(errs <= cell_diag + step))
    _report(12, ok, f"ray boundary vs grid boundary on 64 rays: max gap {errs.max():.4f} <= one cell ({cell_diag:.4f})")
