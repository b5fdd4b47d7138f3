"""Monte Carlo experiment runner: coverage, set-size metrics, and the
two-point regression experiments.

A run fixes a truth, a working family, a statistic/rule/pilot pipeline and a
replicate count; the projection target and its nu-approximate set are
computed once from the truth, then every replicate draws data, splits,
builds a confidence set and records coverage plus size metrics.  Replicate
seeds derive from the master seed and replicate index, so reports are
byte-identical across runs and across worker counts.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import HoeffdingRule, RediNormalRule, SplitLrtRule
from .confset import ConfidenceSet, CrossfitRule, _nearest_index, crossfit_set, invert_grid, split
from .distributions import (
    Distribution,
    ParametricFamily,
    bernoulli,
    bernoulli_family,
    gaussian_location_scale_family,
    gaussian_mixture,
    negbin_from_mean_dispersion,
    poisson_family,
)
from .divergences import (
    DP,
    HELLINGER,
    KL,
    TV,
    DivergenceTag,
    GridSpec,
    approx_projection_set,
    divergence,
    divergence_profile,
)
from .pilot import PilotSpec
from .relfit import StatisticSpec, statistic_for
from .util import child_seed, rng_from


@dataclass(frozen=True)
class ExperimentConfig:
    truth: Distribution
    family: ParametricFamily
    grid: GridSpec
    stat: StatisticSpec
    rule: object
    pilot: PilotSpec
    n: int
    replicates: int
    alpha: float
    master_seed: int
    split_ratio: float = 0.5
    threads: int = 1
    name: str = "experiment"

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")


@dataclass
class CoverageReport:
    """Aggregated coverage/size record with one row per replicate.

    Frequencies come with Monte Carlo standard errors sqrt(p(1-p)/R); the
    acceptance suite asserts at three standard errors.
    """

    name: str
    coverage: float
    coverage_se: float
    approx_coverage: float
    approx_coverage_se: float
    median_hausdorff_proj: float
    median_hausdorff_approx: float
    median_sup_rho: float
    median_l2_width: float
    n_empty: int
    replicates: int
    projection: tuple
    projection_value: float
    rows: list = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "coverage": self.coverage,
            "coverage_se": self.coverage_se,
            "approx_coverage": self.approx_coverage,
            "approx_coverage_se": self.approx_coverage_se,
            "median_hausdorff_proj": _json_num(self.median_hausdorff_proj),
            "median_hausdorff_approx": _json_num(self.median_hausdorff_approx),
            "median_sup_rho": _json_num(self.median_sup_rho),
            "median_l2_width": _json_num(self.median_l2_width),
            "n_empty": self.n_empty,
            "replicates": self.replicates,
            "projection": list(self.projection),
            "projection_value": self.projection_value,
            "config": self.config_echo,
        }

    def write_csv(self, path):
        cols = [
            "replicate",
            "covered",
            "approx_hit",
            "n_accepted",
            "hausdorff_proj",
            "hausdorff_approx",
            "sup_rho",
            "l2_width",
            "empty",
        ]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for row in self.rows:
                w.writerow({k: _csv_num(row[k]) for k in cols})

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def _csv_num(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, float):
        return f"{v:.12g}"
    return v


def _json_num(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None if v is None else ("inf" if v > 0 else "-inf")
    return v


def run_experiment(cfg: ExperimentConfig) -> CoverageReport:
    """Execute the configured Monte Carlo study; deterministic given the seed."""
    tag = cfg.stat.divergence
    thetas, approx_mask, proj = approx_projection_set(tag, cfg.truth, cfg.family, cfg.stat.nu, cfg.grid)
    profile = divergence_profile(tag, cfg.truth, cfg.family, thetas)
    pre = {
        "idx_proj": _nearest_index(thetas, np.asarray(proj.theta)),
        "proj_value": proj.value,
        "approx_mask": approx_mask,
        "approx_max": float(np.max(profile[approx_mask])),
        "profile": profile,
    }
    reps = range(cfg.replicates)
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(_replicate_row, [cfg] * cfg.replicates, reps, [pre] * cfg.replicates, chunksize=8))
    else:
        rows = [_replicate_row(cfg, r, pre) for r in reps]
    return _aggregate(cfg, rows, proj)


def _replicate_row(cfg: ExperimentConfig, r: int, pre: dict) -> dict:
    data = cfg.truth.sample(cfg.n, rng_from(cfg.master_seed, r, 0))
    sp = split(cfg.n, cfg.split_ratio, seed=child_seed(cfg.master_seed, r, 1))
    noise_seed = child_seed(cfg.master_seed, r, 2)
    if isinstance(cfg.rule, CrossfitRule):
        cset = crossfit_set(cfg.family, cfg.grid, data, sp, cfg.pilot, cfg.stat, cfg.rule.alpha, noise_seed)
    else:
        cset = invert_grid(cfg.family, cfg.grid, data, sp, cfg.pilot, cfg.stat, cfg.rule, noise_seed)
    row = {"replicate": r}
    row.update(_metric_row(cset.mask, pre))
    row["l2_width"] = l2_width(cset.thetas[cset.mask])
    return row


def _metric_row(mask: np.ndarray, pre: dict) -> dict:
    profile = pre["profile"]
    empty = not bool(np.any(mask))
    covered = bool(mask[pre["idx_proj"]])
    approx_hit = bool(np.any(mask & pre["approx_mask"]))
    if empty:
        sup_rho = math.nan
        hproj = math.inf
        happrox = math.inf
    else:
        sup_rho = float(np.max(profile[mask]))
        hproj = max(0.0, sup_rho - pre["proj_value"])
        happrox = max(0.0, sup_rho - pre["approx_max"])
    return {
        "covered": covered,
        "approx_hit": approx_hit,
        "n_accepted": int(np.sum(mask)),
        "hausdorff_proj": hproj,
        "hausdorff_approx": happrox,
        "sup_rho": sup_rho,
        "empty": empty,
    }


def metrics(
    cset: ConfidenceSet,
    truth: Distribution,
    family: ParametricFamily,
    tag: DivergenceTag,
    approx_mask: np.ndarray,
    profile: np.ndarray = None,
    proj_value: float = None,
) -> dict:
    """Size/coverage metrics for one grid set against a known truth."""
    if profile is None:
        profile = divergence_profile(tag, truth, family, cset.thetas)
    if proj_value is None:
        proj_value = float(np.min(profile))
    pre = {
        "idx_proj": int(np.argmin(profile)),
        "proj_value": proj_value,
        "approx_mask": approx_mask,
        "approx_max": float(np.max(profile[approx_mask])),
        "profile": profile,
    }
    out = _metric_row(cset.mask, pre)
    out["l2_width"] = l2_width(cset.thetas[cset.mask])
    return out


def l2_width(points: np.ndarray) -> float:
    """Max pairwise parameter distance (diameter) of the accepted points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m = len(pts)
    if m <= 1:
        return 0.0
    if pts.shape[1] == 1:
        return float(pts.max() - pts.min())
    if m <= 512:
        return _pairwise_diameter(pts)
    try:
        from scipy.spatial import ConvexHull

        hull = pts[ConvexHull(pts).vertices]
        return _pairwise_diameter(hull)
    except Exception:
        extremes = np.unique(
            np.concatenate([np.argmin(pts, axis=0), np.argmax(pts, axis=0)])
        )
        return _pairwise_diameter(pts[extremes])


def _pairwise_diameter(pts: np.ndarray) -> float:
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    return float(np.sqrt(d2.max()))


def _aggregate(cfg: ExperimentConfig, rows: list, proj) -> CoverageReport:
    R = len(rows)
    cov = float(np.mean([r["covered"] for r in rows]))
    acov = float(np.mean([r["approx_hit"] for r in rows]))
    med = lambda key: float(np.median([r[key] for r in rows]))
    return CoverageReport(
        name=cfg.name,
        coverage=cov,
        coverage_se=math.sqrt(cov * (1 - cov) / R),
        approx_coverage=acov,
        approx_coverage_se=math.sqrt(acov * (1 - acov) / R),
        median_hausdorff_proj=med("hausdorff_proj"),
        median_hausdorff_approx=med("hausdorff_approx"),
        median_sup_rho=med("sup_rho"),
        median_l2_width=med("l2_width"),
        n_empty=int(sum(r["empty"] for r in rows)),
        replicates=R,
        projection=tuple(float(v) for v in proj.theta),
        projection_value=float(proj.value),
        rows=rows,
        config_echo=config_echo(cfg),
    )


def config_echo(cfg: ExperimentConfig) -> dict:
    return {
        "name": cfg.name,
        "truth": {"family": cfg.truth.family, "params": _echo_params(cfg.truth)},
        "family": cfg.family.kind,
        "box": [list(b) for b in cfg.family.box],
        "statistic": cfg.stat.label(),
        "nu": cfg.stat.nu,
        "delta": cfg.stat.delta,
        "rule": cfg.rule.label() if hasattr(cfg.rule, "label") else type(cfg.rule).__name__,
        "alpha": cfg.alpha,
        "pilot": cfg.pilot.label(),
        "n": cfg.n,
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "split_ratio": cfg.split_ratio,
    }


def _echo_params(dist: Distribution):
    try:
        return [float(v) for v in dist.params]
    except (TypeError, ValueError):
        return json.loads(json.dumps(dist.params))


def variance_oracle(truth: Distribution, stat: StatisticSpec, family: ParametricFamily):
    """Oracle S(theta) = c1 nu sqrt(rho(P*||P_theta) + rho(P*||pilot)) for
    Bernstein/Bentkus rules in simulation mode (squared scale for Hellinger)."""
    tag = stat.divergence

    def rho(d):
        v = divergence(tag, truth, d)
        return v * v if tag.kind == "hellinger" else v

    def s_fn(theta, pilot):
        scale = stat.c1 * (stat.nu**2 if tag.kind == "hellinger" else stat.nu)
        return scale * math.sqrt(max(rho(family.make(theta)) + rho(pilot), 1e-300))

    return s_fn


# -- regression experiments from the two-point examples ------------------------


def example1_regression(
    n: int = 1000,
    alpha: float = 0.05,
    eps_scale: float = 0.1,
    replicates: int = 1000,
    master_seed: int = 20240811,
    pipelines=("slrt", "dp_hoeffding", "hellinger_redi"),
) -> dict:
    """Tiny-epsilon Bernoulli truth against the two-point model {0, 1/2}.

    The split-LRT pipeline loses the KL projection Bern(1/2); the density
    power pipeline with the Hoeffding rule covers its projection Bern(0); the
    Hellinger pipeline covers the nu-approximate projection set.
    """
    if not (0.0 < eps_scale < 1.0 - alpha):
        raise ValueError("eps_scale must lie in (0, 1 - alpha)")
    truth = bernoulli(eps_scale / n)
    family = bernoulli_family(points=(0.0, 0.5))
    grid = GridSpec()
    base = dict(
        truth=truth, family=family, grid=grid, n=n, replicates=replicates, alpha=alpha, master_seed=master_seed
    )
    configs = {
        "slrt": ExperimentConfig(
            stat=statistic_for(KL, delta=0.0),
            rule=SplitLrtRule(alpha),
            pilot=PilotSpec("mle"),
            name="example1_slrt",
            **base,
        ),
        "dp_hoeffding": ExperimentConfig(
            stat=statistic_for(DP(1.0), delta=0.0),
            rule=HoeffdingRule(alpha, B=2.0),
            pilot=PilotSpec("mle"),
            name="example1_dp_hoeffding",
            **base,
        ),
        "hellinger_redi": ExperimentConfig(
            stat=statistic_for(HELLINGER, delta=0.01),
            rule=RediNormalRule(alpha),
            pilot=PilotSpec("mde", divergence=HELLINGER),
            name="example1_hellinger_redi",
            **base,
        ),
    }
    return {name: run_experiment(configs[name]) for name in pipelines}


def example2_regression(
    n: int = 2000,
    alpha: float = 0.05,
    c: float = 0.1,
    replicates: int = 2000,
    master_seed: int = 20240812,
    pipelines=("slrt", "kl_redi"),
) -> dict:
    """Bern(1/2 + c/n) truth against the two-point model {1/4, 3/4}.

    Bounded likelihood ratios: the split LRT still under-covers the KL
    projection Bern(3/4) while the studentized rule restores nominal coverage.
    """
    truth = bernoulli(0.5 + c / n)
    family = bernoulli_family(points=(0.25, 0.75))
    base = dict(
        truth=truth,
        family=family,
        grid=GridSpec(),
        n=n,
        replicates=replicates,
        alpha=alpha,
        master_seed=master_seed,
        pilot=PilotSpec("mle"),
    )
    configs = {
        "slrt": ExperimentConfig(stat=statistic_for(KL, delta=0.0), rule=SplitLrtRule(alpha), name="example2_slrt", **base),
        "kl_redi": ExperimentConfig(
            stat=statistic_for(KL, delta=0.01), rule=RediNormalRule(alpha), name="example2_kl_redi", **base
        ),
    }
    return {name: run_experiment(configs[name]) for name in pipelines}


# -- preset builders -----------------------------------------------------------

OVERDISPERSION_GRID = GridSpec(explicit=tuple((v,) for v in np.arange(0.5, 30.0 + 1e-9, 0.25)))


def overdispersion_config(
    kappa: float,
    stat_kind: str = "kl",
    rule_kind: str = "redi",
    n: int = 200,
    replicates: int = 300,
    alpha: float = 0.05,
    master_seed: int = 20240813,
    mean: float = 10.0,
) -> ExperimentConfig:
    """Overdispersed counts (negative binomial truth) against a Poisson model."""
    truth = negbin_from_mean_dispersion(mean, kappa)
    family = poisson_family(0.5, 30.0)
    tag = {"kl": KL, "hellinger": HELLINGER, "tv": TV}[stat_kind]
    delta = 0.0 if rule_kind in ("slrt", "hoeffding") else 0.01
    stat = statistic_for(tag, delta=delta)
    if rule_kind == "slrt":
        rule = SplitLrtRule(alpha)
    elif rule_kind == "redi":
        rule = RediNormalRule(alpha)
    elif rule_kind == "hoeffding":
        rule = HoeffdingRule(alpha, B=stat.bound)
    elif rule_kind == "crossfit":
        rule = CrossfitRule(alpha)
    else:
        raise ValueError(f"unknown rule {rule_kind!r} for the overdispersion preset")
    pilot = PilotSpec("mle") if stat_kind == "kl" else PilotSpec("mde", divergence=tag)
    return ExperimentConfig(
        truth=truth,
        family=family,
        grid=OVERDISPERSION_GRID,
        stat=stat,
        rule=rule,
        pilot=pilot,
        n=n,
        replicates=replicates,
        alpha=alpha,
        master_seed=master_seed,
        name=f"overdispersion_k{kappa:g}_{stat_kind}_{rule_kind}",
    )


CONTAMINATION_CASES = {
    1: ((0.99, 0.01), (0.0, 0.0), (1.0, 30.0)),
    2: ((0.94, 0.01, 0.05), (0.0, 20.0, -30.0), (1.0, 20.0, 20.0)),
    3: ((0.7, 0.2, 0.1), (2.0, -2.0, 0.0), (1.0, 1.0, 30.0)),
}


def contamination_truth(case: int) -> Distribution:
    w, m, s = CONTAMINATION_CASES[case]
    return gaussian_mixture(w, m, s)


def contamination_config(
    case: int = 1,
    stat_kind: str = "kl",
    rule_kind: str = "redi",
    n: int = 400,
    replicates: int = 300,
    alpha: float = 0.05,
    master_seed: int = 20240814,
    beta: float = 0.5,
    loc_bounds=(-6.0, 6.0),
    scale_bounds=(0.5, 8.0),
    points_per_dim: int = 61,
) -> ExperimentConfig:
    """Contaminated Gaussian mixtures against a location-scale Gaussian model."""
    truth = contamination_truth(case)
    family = gaussian_location_scale_family(loc_bounds, scale_bounds)
    tag = {"kl": KL, "dp": DP(beta), "hellinger": HELLINGER, "tv": TV}[stat_kind]
    delta = 0.0 if rule_kind in ("slrt", "hoeffding") else 0.01
    stat = statistic_for(tag, delta=delta)
    if rule_kind == "slrt":
        rule = SplitLrtRule(alpha)
    elif rule_kind == "redi":
        rule = RediNormalRule(alpha)
    else:
        raise ValueError(f"unknown rule {rule_kind!r} for the contamination preset")
    pilot = PilotSpec("mle") if stat_kind == "kl" else PilotSpec("mde", divergence=tag)
    return ExperimentConfig(
        truth=truth,
        family=family,
        grid=GridSpec(points_per_dim=points_per_dim),
        stat=stat,
        rule=rule,
        pilot=pilot,
        n=n,
        replicates=replicates,
        alpha=alpha,
        master_seed=master_seed,
        name=f"contamination_case{case}_{stat_kind}_{rule_kind}",
    )
