"""Threshold rules t_alpha: accept a candidate iff its split statistic clears the cutoff.

The asymptotic rule studentizes the corrupted statistic against a normal
quantile; the finite-sample rules (Hoeffding, Bernstein, empirical Bernstein,
Bentkus, empirical Bentkus) act on the raw statistic and require a uniform
bound B on |T_i - E T|.  All rules are one-sided: small statistics are
favorable, and acceptance means "T-bar <= threshold" (for the betting-style
empirical Bernstein rule, a running-sum inequality instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import ndtri
from scipy.stats import binom

from .errors import BoundViolation, DegenerateVariance, InvalidSplit, NumericalError
from .relfit import StatisticSample

_E2 = math.e**2


def z_quantile(alpha: float) -> float:
    """Upper 1-alpha standard normal quantile."""
    return float(ndtri(1.0 - alpha))


@dataclass(frozen=True)
class Decision:
    """Outcome of one threshold rule on one statistic sample.

    ``residual`` is statistic minus threshold (or LHS minus RHS for the
    running-sum rule); positive residual means rejection.  It doubles as the
    evidence value for boundary root-finding.
    """

    accept: bool
    statistic: float
    threshold: float
    residual: float
    diagnostics: dict = None


def _threshold_decision(stat: float, threshold: float, **diag) -> Decision:
    if math.isinf(stat):
        accept = stat < 0
        residual = -math.inf if accept else math.inf
        return Decision(accept, stat, threshold, residual, diag or None)
    residual = stat - threshold
    return Decision(residual <= 0.0, stat, threshold, residual, diag or None)


def _check_bounded(values: np.ndarray, B: float):
    if not np.all(np.isfinite(values)):
        raise BoundViolation("non-finite statistic under a bounded-statistic rule")
    worst = float(np.max(np.abs(values))) if values.size else 0.0
    if worst > B * (1.0 + 1e-12):
        raise BoundViolation(f"|T_i| up to {worst:.6g} exceeds declared bound B={B:.6g}")


# -- rule functions -----------------------------------------------------------


def redi_normal(s: StatisticSample, alpha: float) -> Decision:
    """Accept iff the corrupted mean is below z_alpha * s_delta / sqrt(n0)."""
    if s.delta == 0.0 and s.s_delta == 0.0:
        raise DegenerateVariance("zero spread with no corruption noise")
    threshold = z_quantile(alpha) * s.s_delta / math.sqrt(s.n0)
    return _threshold_decision(s.tbar_delta, threshold)


def split_lrt(s: StatisticSample, alpha: float) -> Decision:
    """Non-robust baseline: accept iff the raw mean is below log(1/alpha)/n0."""
    threshold = math.log(1.0 / alpha) / s.n0
    return _threshold_decision(s.tbar, threshold)


def hoeffding(s: StatisticSample, alpha: float, B: float) -> Decision:
    """Accept iff T-bar <= B sqrt(log(1/alpha) / (2 n0)); checks |T_i| <= B."""
    _check_bounded(s.raw, B)
    threshold = B * math.sqrt(math.log(1.0 / alpha) / (2.0 * s.n0))
    return _threshold_decision(s.tbar, threshold)


def bernstein(s: StatisticSample, alpha: float, B: float, S: float) -> Decision:
    """Variance-aware bound; S is the oracle standard deviation scale."""
    L = math.log(1.0 / alpha)
    n0 = s.n0
    threshold = math.sqrt(2.0 * S * S * L / n0 + (B * B / 9.0) * (L / n0) ** 2) + B * L / (3.0 * n0)
    return _threshold_decision(s.tbar, threshold)


def psi_e(lam):
    """Exponential-bound penalty -(log(1 - lam) - lam)."""
    lam = np.asarray(lam, dtype=float)
    return -(np.log1p(-lam) - lam)


def empirical_bernstein(values, alpha: float, B: float, c: float = 0.5) -> Decision:
    """Betting-style empirical Bernstein test on [-B, B] values, in index order.

    With Ttilde_i = (T_i + B) / (2B) in [0, 1] and the null E T <= 0, i.e.
    E Ttilde <= 1/2, accept iff

        sum_i lam_i (Ttilde_i - 1/2) <= log(1/alpha) + sum_i v_i psi_e(lam_i),

    where lam_i = sqrt(2 log(1/alpha) / (n0 Shat_{i-1}^2)) ^ c,
    Shat_i^2 = (1/4 + sum_{l<=i} (Ttilde_l - Tbar_l)^2) / (i + 1) with the
    shrunk running mean Tbar_i = (sum_{l<=i} Ttilde_l) / (i + 1), and
    v_i = (Ttilde_i - Tbar_{i-1})^2 is predictable.
    """
    if not (0.0 < c < 1.0):
        raise ValueError("c must lie in (0, 1)")
    raw = np.asarray(values, dtype=float)
    _check_bounded(raw, B)
    n0 = raw.size
    tt = (raw + B) / (2.0 * B)
    csum = np.cumsum(tt)
    run_mean = csum / (np.arange(n0) + 2.0)  # Tbar_i, i = 1..n0
    prev_mean = np.concatenate([[0.0], run_mean[:-1]])  # Tbar_{i-1}
    dev_sq = (tt - run_mean) ** 2
    shat_sq = (0.25 + np.cumsum(dev_sq)) / (np.arange(n0) + 2.0)  # Shat_i^2
    prev_shat_sq = np.concatenate([[0.25], shat_sq[:-1]])  # Shat_{i-1}^2
    L = math.log(1.0 / alpha)
    lam = np.minimum(np.sqrt(2.0 * L / (n0 * prev_shat_sq)), c)
    v = (tt - prev_mean) ** 2
    lhs = float(np.sum(lam * (tt - 0.5)))
    rhs = L + float(np.sum(v * psi_e(lam)))
    return Decision(lhs <= rhs, lhs, rhs, lhs - rhs, {"lambdas": lam})


def bentkus_quantile(n0: int, alpha: float, B: float, S: float) -> float:
    """Upper 1-alpha quantile of the Bentkus binomial-dominating sum.

    G takes the value B with probability p = S^2/(S^2 + B^2) and -S^2/B
    otherwise (mean zero, variance S^2); the quantile q solves

        P2(u) := inf_{t <= u} E(sum G_i - t)_+^2 / (u - t)^2 = alpha

    on the sum scale.  Divide by n0 before comparing against a mean.
    """
    if alpha >= 1.0:
        return 0.0
    if not (S > 0 and B > 0):
        raise ValueError("bentkus_quantile needs positive S and B")
    return _bentkus_quantile_cached(int(n0), float(alpha), float(B), float(S))


@lru_cache(maxsize=4096)
def _bentkus_quantile_cached(n0: int, alpha: float, B: float, S: float) -> float:
    g, pmf = _bentkus_atoms(n0, B, S)
    hi = g[-1]
    if _p2_tail(hi * (1.0 - 1e-12) if hi > 0 else hi - 1e-12, g, pmf) > alpha:
        return float(hi)
    lo = 0.0
    if _p2_tail(lo, g, pmf) < alpha:
        raise NumericalError(f"P2(0) < alpha for n0={n0}, alpha={alpha}, B={B}, S={S}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _p2_tail(mid, g, pmf) >= alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10 * max(1.0, abs(hi)):
            break
    else:
        raise NumericalError(f"bentkus quantile bisection stalled at [{lo}, {hi}]")
    return 0.5 * (lo + hi)


def _bentkus_atoms(n0: int, B: float, S: float):
    p = S * S / (S * S + B * B)
    k = np.arange(n0 + 1)
    g = B * k - (S * S / B) * (n0 - k)  # increasing in k
    return g, binom.pmf(k, n0, p)


def _p2_tail(u: float, g: np.ndarray, pmf: np.ndarray) -> float:
    """inf_{t <= u} E(X - t)_+^2 / (u - t)^2 for discrete X with atoms g.

    On each segment between consecutive atoms the positive part is a fixed
    quadratic, so the segment minimizer is closed-form; the global inf is the
    minimum over segments (evaluated for all segments at once).
    """
    if u >= g[-1]:
        return 0.0 if u > g[-1] else float(pmf[-1])
    # suffix moments over active sets {g_k > t}, one per segment
    A = np.concatenate([np.cumsum((pmf * g * g)[::-1])[::-1], [0.0]])
    Bm = np.concatenate([np.cumsum((pmf * g)[::-1])[::-1], [0.0]])
    C = np.concatenate([np.cumsum(pmf[::-1])[::-1], [0.0]])
    span = g[-1] - g[0] + max(1.0, abs(u))
    eps = 1e-9 * max(1.0, abs(u))
    seg_lo = np.concatenate([[g[0] - 12.0 * span], g])
    seg_hi = np.minimum(np.concatenate([g, [u]]), u - eps)
    valid = seg_lo < seg_hi
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = (Bm * u - A) / (C * u - Bm)
        ts = np.stack([seg_lo, seg_hi, np.clip(np.nan_to_num(t_star, nan=seg_lo), seg_lo, seg_hi)])
        vals = (A - 2.0 * Bm * ts + C * ts * ts) / (u - ts) ** 2
    vals = np.where(valid[None, :], vals, math.inf)
    return float(np.min(vals))


def bentkus(s: StatisticSample, alpha: float, B: float, S: float) -> Decision:
    """Accept iff T-bar <= q(alpha)/n0 for the Bentkus dominating quantile."""
    threshold = bentkus_quantile(s.n0, alpha, B, S) / s.n0
    return _threshold_decision(s.tbar, threshold)


def variance_overestimate(values, B: float, delta: float) -> float:
    """Shat_*(delta): prefix-minimal over-estimator of the statistic's sd.

    Built from half-sample pair differences with the Gaussian inflation
    g_{2,i}(delta) = B (sqrt(2) i)^{-1} sqrt(floor(i/2)) ndtri(1 - 2 delta/e^2),
    minimized over prefixes i = 2..n0.
    """
    raw = np.asarray(values, dtype=float)
    n0 = raw.size
    if n0 < 2:
        raise InvalidSplit("variance over-estimation needs at least two values")
    zfac = float(ndtri(1.0 - 2.0 * delta / _E2))
    pair_sq = (raw[1::2] - raw[0::2]) ** 2 / 2.0  # (T_{2l} - T_{2l-1})^2 / 2
    cum_pairs = np.cumsum(pair_sq)
    best = math.inf
    for i in range(2, n0 + 1):
        m = i // 2
        sbar_sq = cum_pairs[m - 1] / m
        g2 = B / (math.sqrt(2.0) * i) * math.sqrt(m) * zfac
        best = min(best, math.sqrt(sbar_sq + g2) + g2)
    return best


def empirical_bentkus(values, alpha: float, B: float, delta_split: float = None) -> Decision:
    """Bentkus rule at level alpha - delta with the variance over-estimator.

    ``delta_split`` defaults to alpha / 3.
    """
    if delta_split is None:
        delta_split = alpha / 3.0
    if not (0.0 < delta_split < alpha):
        raise InvalidSplit("delta_split must lie strictly between 0 and alpha")
    raw = np.asarray(values, dtype=float)
    _check_bounded(raw, B)
    s_star = variance_overestimate(raw, B, delta_split)
    n0 = raw.size
    threshold = bentkus_quantile(n0, alpha - delta_split, B, s_star) / n0
    tbar = float(np.mean(raw))
    dec = _threshold_decision(tbar, threshold)
    return replace(dec, diagnostics={"s_star": s_star, "delta_split": delta_split})


# -- rule objects for set construction -----------------------------------------


@dataclass(frozen=True)
class RediNormalRule:
    alpha: float

    def decide(self, s: StatisticSample) -> Decision:
        return redi_normal(s, self.alpha)

    def label(self) -> str:
        return "redi"


@dataclass(frozen=True)
class SplitLrtRule:
    alpha: float

    def decide(self, s: StatisticSample) -> Decision:
        return split_lrt(s, self.alpha)

    def label(self) -> str:
        return "slrt"


@dataclass(frozen=True)
class HoeffdingRule:
    alpha: float
    B: float

    def decide(self, s: StatisticSample) -> Decision:
        return hoeffding(s, self.alpha, self.B)

    def label(self) -> str:
        return "hoeffding"


@dataclass(frozen=True)
class BernsteinRule:
    alpha: float
    B: float
    S: float = None
    s_fn: object = None  # callable(theta, pilot) -> S, for oracle-variance mode

    def for_candidate(self, theta, pilot) -> "BernsteinRule":
        if self.S is None and self.s_fn is not None:
            return replace(self, S=float(self.s_fn(theta, pilot)), s_fn=None)
        return self

    def decide(self, s: StatisticSample) -> Decision:
        if self.S is None:
            raise ValueError("Bernstein rule needs an oracle S (or s_fn)")
        return bernstein(s, self.alpha, self.B, self.S)

    def label(self) -> str:
        return "bernstein"


@dataclass(frozen=True)
class EmpiricalBernsteinRule:
    alpha: float
    B: float
    c: float = 0.5

    def decide(self, s: StatisticSample) -> Decision:
        return empirical_bernstein(s.raw, self.alpha, self.B, self.c)

    def label(self) -> str:
        return "empirical_bernstein"


@dataclass(frozen=True)
class BentkusRule:
    alpha: float
    B: float
    S: float = None
    s_fn: object = None

    def for_candidate(self, theta, pilot) -> "BentkusRule":
        if self.S is None and self.s_fn is not None:
            return replace(self, S=float(self.s_fn(theta, pilot)), s_fn=None)
        return self

    def decide(self, s: StatisticSample) -> Decision:
        if self.S is None:
            raise ValueError("Bentkus rule needs an oracle S (or s_fn)")
        return bentkus(s, self.alpha, self.B, self.S)

    def label(self) -> str:
        return "bentkus"


@dataclass(frozen=True)
class EmpiricalBentkusRule:
    alpha: float
    B: float
    delta_split: float = None

    def decide(self, s: StatisticSample) -> Decision:
        return empirical_bentkus(s.raw, self.alpha, self.B, self.delta_split)

    def label(self) -> str:
        return "empirical_bentkus"
