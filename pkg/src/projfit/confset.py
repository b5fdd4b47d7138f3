"""Confidence-set construction: data splitting, grid inversion of relative-fit
tests, the cross-fit variant, and star-convex ray search.

The pilot is fit on one half of a seeded split; every candidate on a
parameter grid is compared against it on the other half and kept iff the
threshold rule accepts.  The pilot's own parameter is always a member: the
statistic vanishes identically on the diagonal, so no rule with a
non-negative cutoff can exclude it, and the grid/ray constructions
short-circuit it to keep that exact.

Corruption noise is drawn once per construction and shared across every
candidate, which makes the evidence function continuous along rays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .bounds import SplitLrtRule, z_quantile
from .distributions import Distribution, ParametricFamily
from .divergences import GridSpec
from .errors import InsufficientData, InvalidCenter
from .pilot import PilotSpec
from .relfit import StatisticSpec, PairStatistic, statistic_matrix, summarize, _diagonal_rows
from .util import child_seed, rng_from

_NOISE_STREAM = 7  # default noise stream derived from the split seed


@dataclass(frozen=True)
class SplitSample:
    """Disjoint covering index partition; |d0| = floor(ratio * n)."""

    d0: np.ndarray
    d1: np.ndarray
    ratio: float
    seed: int

    @property
    def n(self) -> int:
        return len(self.d0) + len(self.d1)


def split(n_or_data, ratio: float = 0.5, seed: int = 0) -> SplitSample:
    """Seeded shuffle split of n observations into evaluation/pilot halves."""
    n = n_or_data if isinstance(n_or_data, (int, np.integer)) else len(n_or_data)
    if n < 4:
        raise InsufficientData(f"need at least 4 observations to split, got {n}")
    if not (0.0 < ratio < 1.0):
        raise ValueError("split ratio must lie in (0, 1)")
    perm = rng_from(int(seed)).permutation(n)
    n0 = int(math.floor(ratio * n))
    return SplitSample(d0=perm[:n0], d1=perm[n0:], ratio=float(ratio), seed=int(seed))


def slrt_threshold(n0: int, alpha: float) -> float:
    """Split-likelihood-ratio cutoff log(1/alpha)/n0 (the non-robust baseline)."""
    return math.log(1.0 / alpha) / n0


def slrt_rule(alpha: float) -> SplitLrtRule:
    return SplitLrtRule(alpha)


@dataclass(frozen=True)
class CrossfitRule:
    """Marker rule: studentized cross-fit statistic at level alpha."""

    alpha: float

    def label(self) -> str:
        return "crossfit"


@dataclass(frozen=True, eq=False)
class ConfidenceSet:
    """Region of parameter space: grid mask or star-convex radial boundary."""

    kind: str  # "grid" | "star"
    provenance: dict
    thetas: np.ndarray = None
    mask: np.ndarray = None
    tbar: np.ndarray = None
    threshold: np.ndarray = None
    center: np.ndarray = None
    directions: np.ndarray = None
    radii: np.ndarray = None
    unbounded: np.ndarray = None

    def accepted(self) -> np.ndarray:
        if self.kind != "grid":
            raise ValueError("accepted() applies to grid sets")
        return self.thetas[self.mask]

    @property
    def is_empty(self) -> bool:
        if self.kind == "grid":
            return not bool(np.any(self.mask))
        return False  # a star set always contains its center

    def contains(self, theta) -> bool:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.kind == "grid":
            return bool(self.mask[_nearest_index(self.thetas, theta)])
        v = theta - self.center
        r = float(np.linalg.norm(v))
        if r < 1e-12:
            return True
        ray = int(np.argmax(self.directions @ (v / r)))
        return r <= self.radii[ray] + 1e-12

    def to_json(self) -> str:
        payload = {"kind": self.kind, "provenance": self.provenance}
        if self.kind == "grid":
            payload.update(
                thetas=self.thetas.tolist(),
                mask=self.mask.astype(int).tolist(),
                tbar=_jsonable(self.tbar),
                threshold=_jsonable(self.threshold),
            )
        else:
            payload.update(
                center=self.center.tolist(),
                directions=self.directions.tolist(),
                radii=self.radii.tolist(),
                unbounded=self.unbounded.astype(int).tolist(),
            )
        return json.dumps(payload, indent=2)

    def write_grid_csv(self, path):
        import csv

        dim = self.thetas.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"theta_{d}" for d in range(dim)] + ["tbar", "threshold", "accepted"])
            for i in range(len(self.thetas)):
                w.writerow(
                    [f"{v:.12g}" for v in self.thetas[i]]
                    + [f"{self.tbar[i]:.12g}", f"{self.threshold[i]:.12g}", int(self.mask[i])]
                )


def _jsonable(arr):
    return [None if not np.isfinite(v) else float(v) for v in arr]


def _nearest_index(thetas: np.ndarray, theta: np.ndarray) -> int:
    scale = np.ones(thetas.shape[1])
    for d in range(thetas.shape[1]):
        diffs = np.diff(np.unique(thetas[:, d]))
        if diffs.size:
            scale[d] = max(np.median(diffs), 1e-12)
    return int(np.argmin(np.sum(((thetas - theta[None, :]) / scale) ** 2, axis=1)))


def _noise_vector(spec: StatisticSpec, n0: int, noise_seed):
    if spec.delta <= 0:
        return None, None
    return rng_from(noise_seed).standard_normal(n0), int(noise_seed)


def invert_grid(
    family: ParametricFamily,
    grid: GridSpec,
    data,
    split_sample: SplitSample,
    pilot_spec: PilotSpec,
    stat_spec: StatisticSpec,
    rule,
    noise_seed: int = None,
) -> ConfidenceSet:
    """Keep every grid parameter whose relative-fit test against the pilot accepts."""
    data = np.asarray(data, dtype=float)
    x1 = data[split_sample.d1]
    x0 = data[split_sample.d0]
    pilot = pilot_spec.fit(family, x1)
    spec = stat_spec.resolve(x1)
    thetas = grid.materialize(family)
    if noise_seed is None:
        noise_seed = child_seed(split_sample.seed, _NOISE_STREAM)
    noise, noise_seed = _noise_vector(spec, len(x0), noise_seed)

    T = statistic_matrix(spec, family, thetas, pilot, x0)
    diagonal = _diagonal_rows(thetas, pilot, family)
    mask = np.zeros(len(thetas), dtype=bool)
    tbar = np.zeros(len(thetas))
    threshold = np.full(len(thetas), np.nan)
    for i in range(len(thetas)):
        if diagonal[i]:
            mask[i] = True
            continue
        sample = summarize(T[i], spec.delta, noise if noise is not None else 0)
        rule_i = rule.for_candidate(thetas[i], pilot) if hasattr(rule, "for_candidate") else rule
        dec = rule_i.decide(sample)
        mask[i], tbar[i], threshold[i] = dec.accept, dec.statistic, dec.threshold
    prov = _provenance(spec, rule, pilot_spec, pilot, split_sample, noise_seed, family)
    return ConfidenceSet("grid", prov, thetas=thetas, mask=mask, tbar=tbar, threshold=threshold)


def crossfit_set(
    family: ParametricFamily,
    grid: GridSpec,
    data,
    split_sample: SplitSample,
    pilot_spec: PilotSpec,
    stat_spec: StatisticSpec,
    alpha: float,
    noise_seed: int = None,
) -> ConfidenceSet:
    """Cross-fit studentized set: role-swapped split means, pooled variance.

    T-bar-cross(theta) = (n1 Tbar_D1(theta; pilot0) + n0 Tbar_D0(theta; pilot1)) / n,
    accepted iff below z_alpha * s-cross / sqrt(n) with
    s-cross^2 = [Var(T(.; theta, pilot1)) + Var(T(.; theta, pilot0))] / 2.
    """
    data = np.asarray(data, dtype=float)
    x0 = data[split_sample.d0]
    x1 = data[split_sample.d1]
    pilot1 = pilot_spec.fit(family, x1)
    pilot0 = pilot_spec.fit(family, x0)
    spec = stat_spec.resolve(x1)
    thetas = grid.materialize(family)
    if noise_seed is None:
        noise_seed = child_seed(split_sample.seed, _NOISE_STREAM)
    z0 = rng_from(noise_seed, 0).standard_normal(len(x0)) if spec.delta > 0 else None
    z1 = rng_from(noise_seed, 1).standard_normal(len(x1)) if spec.delta > 0 else None

    T0 = statistic_matrix(spec, family, thetas, pilot1, x0)
    T1 = statistic_matrix(spec, family, thetas, pilot0, x1)
    diag = _diagonal_rows(thetas, pilot1, family) & _diagonal_rows(thetas, pilot0, family)
    n0, n1 = len(x0), len(x1)
    n = n0 + n1
    zq = z_quantile(alpha)
    mask = np.zeros(len(thetas), dtype=bool)
    tbar = np.zeros(len(thetas))
    threshold = np.full(len(thetas), np.nan)
    for i in range(len(thetas)):
        if diag[i]:
            mask[i] = True
            continue
        s0 = summarize(T0[i], spec.delta, z0 if z0 is not None else 0)
        s1 = summarize(T1[i], spec.delta, z1 if z1 is not None else 0)
        stat = (n0 * s0.tbar_delta + n1 * s1.tbar_delta) / n
        s_cross = math.sqrt((s0.s_delta**2 + s1.s_delta**2) / 2.0)
        threshold[i] = zq * s_cross / math.sqrt(n)
        tbar[i] = stat
        if math.isinf(stat):
            mask[i] = stat < 0
        else:
            mask[i] = stat <= threshold[i]
    prov = _provenance(spec, CrossfitRule(alpha), pilot_spec, pilot1, split_sample, noise_seed, family)
    prov["pilot0"] = list(pilot0.params) if not isinstance(pilot0.params[0], tuple) else str(pilot0.params)
    return ConfidenceSet("grid", prov, thetas=thetas, mask=mask, tbar=tbar, threshold=threshold)


def invert_rays(
    family: ParametricFamily,
    data,
    split_sample: SplitSample,
    pilot,
    stat_spec: StatisticSpec,
    rule,
    n_rays: int = 64,
    r_max: float = None,
    noise_seed: int = None,
    directions_seed: int = 0,
) -> ConfidenceSet:
    """Star-convex boundary search from the pilot along fixed directions.

    ``pilot`` is either a PilotSpec (fit on the held-out half) or an explicit
    Distribution used as the center.  Along each ray the evidence (statistic
    minus threshold) starts at -t_alpha <= 0; the boundary is the first sign
    change located by doubling probes from r_max/64 and polished by Brent's
    method to 1e-8.  Rays with no positive evidence are clamped at the
    parameter box and flagged unbounded.  Star-convexity is assumed, not
    verified; interior spot checks are reported as ``star_violations``.
    """
    data = np.asarray(data, dtype=float)
    x1 = data[split_sample.d1]
    x0 = data[split_sample.d0]
    if isinstance(pilot, PilotSpec):
        pilot_spec, pilot = pilot, pilot.fit(family, x1)
    else:
        pilot_spec = None
    spec = stat_spec.resolve(x1)
    center = np.asarray(pilot.params, dtype=float)
    if not family.contains(center):
        raise InvalidCenter(f"center parameter {tuple(center)} outside the family box")
    if noise_seed is None:
        noise_seed = child_seed(split_sample.seed, _NOISE_STREAM)
    noise, noise_seed = _noise_vector(spec, len(x0), noise_seed)
    if r_max is None:
        r_max = math.sqrt(sum((hi - lo) ** 2 for lo, hi in family.box))

    directions = _ray_directions(family.dim, n_rays, directions_seed)

    def evidence_at(theta):
        theta = family.clip(theta)  # absorb float roundoff at the box edge
        values = PairStatistic(spec, family.make(theta), pilot).values(x0)
        sample = summarize(values, spec.delta, noise if noise is not None else 0)
        rule_t = rule.for_candidate(theta, pilot) if hasattr(rule, "for_candidate") else rule
        return rule_t.decide(sample).residual

    radii = np.zeros(len(directions))
    unbounded = np.zeros(len(directions), dtype=bool)
    for j, omega in enumerate(directions):
        r_box = _box_exit_radius(center, omega, family.box)
        r_cap = min(r_max, r_box)
        if r_cap <= 0:
            radii[j] = 0.0
            continue
        lo, hi = 0.0, None
        probe = r_cap / 64.0
        while probe <= r_cap * (1 + 1e-12):
            ev = evidence_at(tuple(center + min(probe, r_cap) * omega))
            if ev > 0:
                hi = min(probe, r_cap)
                break
            lo = min(probe, r_cap)
            probe *= 2.0
        if hi is None:
            radii[j] = r_box
            unbounded[j] = True
            continue
        radii[j] = optimize.brentq(
            lambda r: evidence_at(tuple(center + r * omega)), lo, hi, xtol=1e-8
        )
    # star-convexity diagnostic: interior points along each ray should accept
    violations = 0
    for j, omega in enumerate(directions):
        for frac in (0.35, 0.7):
            if radii[j] > 0 and evidence_at(tuple(center + frac * radii[j] * omega)) > 0:
                violations += 1
    prov = _provenance(spec, rule, pilot_spec, pilot, split_sample, noise_seed, family)
    prov["n_rays"] = int(n_rays)
    prov["r_max"] = float(r_max)
    prov["star_violations"] = violations
    return ConfidenceSet(
        "star", prov, center=center, directions=directions, radii=radii, unbounded=unbounded
    )


def _ray_directions(dim: int, n_rays: int, seed: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        omegas = np.linspace(-math.pi, math.pi, n_rays, endpoint=False)
        return np.column_stack([np.sin(omegas), -np.cos(omegas)])
    g = rng_from(seed).standard_normal((n_rays, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _box_exit_radius(center, omega, box) -> float:
    r = math.inf
    for d, (lo, hi) in enumerate(box):
        if omega[d] > 1e-15:
            r = min(r, (hi - center[d]) / omega[d])
        elif omega[d] < -1e-15:
            r = min(r, (lo - center[d]) / omega[d])
    return max(0.0, r)


def _provenance(spec, rule, pilot_spec, pilot, split_sample, noise_seed, family) -> dict:
    return {
        "statistic": spec.label(),
        "nu": spec.nu,
        "delta": spec.delta,
        "rule": rule.label() if hasattr(rule, "label") else type(rule).__name__,
        "alpha": getattr(rule, "alpha", None),
        "pilot_kind": pilot_spec.label() if pilot_spec is not None else "explicit",
        "pilot_params": _flat_params(pilot),
        "family": family.kind,
        "split_seed": split_sample.seed,
        "split_ratio": split_sample.ratio,
        "noise_seed": noise_seed,
        "n0": len(split_sample.d0),
        "n1": len(split_sample.d1),
    }


def _flat_params(dist: Distribution):
    try:
        return [float(v) for v in dist.params]
    except (TypeError, ValueError):
        return str(dist.params)
