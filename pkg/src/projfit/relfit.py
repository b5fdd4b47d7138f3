"""Per-sample relative-fit statistics T(x; P, Q) and their split-sample summaries.

Each statistic compares a candidate P against a pilot Q, is anti-symmetric in
(P, Q), and has negative expectation under the data law whenever P fits at
least as well as Q (up to the statistic's approximation factor ``nu``):

  kl          T(x) = log q(x) - log p(x)
  dp(beta)    T(x) = int(p^{1+b} - q^{1+b}) - (1 + 1/b) (p^b(x) - q^b(x))
  hellinger   T(x) = Delta(P, Q) + psi(sqrt(q(x) / p(x))), with
              Delta = [H^2(P, Pbar) - H^2(Q, Pbar)] / sqrt(2), Pbar = (P+Q)/2,
              psi(u) = (u - 1) / sqrt(1 + u^2)
  tv / w1 / mmd   T(x) = int f* d(P+Q)/2 - f*(x) for the closed-form witness f*

The candidate sits in the first slot, the pilot in the second; every
threshold rule tests the sample mean against an upper cutoff.  When P equals
Q the statistic is identically zero (zero-witness convention), which keeps
tests of relative fit powerless on the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .distributions import Distribution, ParametricFamily
from .divergences import (
    DivergenceTag,
    KernelSpec,
    default_nu,
    divergence,
    family_lattice,
    family_pmf_matrix,
    joint_lattice,
    kernel_cross,
    mean_embedding,
    quad_nodes,
    yatracos_set,
)
from .errors import InsufficientData, UnsupportedDomain
from .util import rng_from

_SQRT2 = math.sqrt(2.0)
_MMD_DEGENERATE = 1e-12


def psi(u):
    """Bounded anti-symmetric likelihood-ratio transform, psi(u) = (u-1)/sqrt(1+u^2)."""
    u = np.asarray(u, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(u), 1.0, (u - 1.0) / np.sqrt(1.0 + u * u))
    return out if out.shape else float(out)


@dataclass(frozen=True)
class StatisticSpec:
    """A relative-fit statistic: divergence, approximation factor, expectation
    constant c1, uniform bound B (None if unbounded), and corruption scale."""

    divergence: DivergenceTag
    nu: float
    c1: float
    bound: float = None
    delta: float = 0.01

    def resolve(self, pilot_data) -> "StatisticSpec":
        """Fix data-dependent pieces (the MMD bandwidth) on pilot data."""
        tag = self.divergence
        if tag.kind == "mmd" and tag.kernel.bandwidth == "median":
            kernel = tag.kernel.resolve(pilot_data)
            return replace(self, divergence=DivergenceTag("mmd", kernel=kernel))
        return self

    def label(self) -> str:
        return self.divergence.label()


def statistic_for(tag: DivergenceTag, delta: float = 0.01, bound: float = None) -> StatisticSpec:
    """Statistic spec with the (nu, c1, B) constants attached to each divergence."""
    k = tag.kind
    if k in ("kl", "dp"):
        c1 = 1.0
        default_b = None if k == "kl" else 1.0 + 1.0 / tag.beta
    elif k == "hellinger":
        c1 = 2.0 + _SQRT2
        default_b = 1.0 + 1.0 / _SQRT2
    else:
        c1 = 2.0
        default_b = {"tv": 1.5, "mmd": 2.0}.get(k, 1.5 * tag.b if tag.b else None)
    return StatisticSpec(tag, nu=default_nu(tag), c1=c1, bound=bound if bound is not None else default_b, delta=delta)


# -- witnesses ---------------------------------------------------------------


class Witness:
    """Closed-form witness f* for an integral probability metric.

    ``offset`` is the integral of f* against the equal mixture (P + Q)/2, so
    the per-sample statistic is ``offset - f*(x)``.  A zero witness encodes
    the degenerate P = Q case.
    """

    def __init__(self, kind, evaluate, offset, zero=False, info=None):
        self.kind = kind
        self._evaluate = evaluate
        self.offset = float(offset)
        self.zero = zero
        self.info = info or {}

    def __call__(self, x):
        if self.zero:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self._evaluate(np.asarray(x, dtype=float))


def _zero_witness(kind):
    return Witness(kind, None, 0.0, zero=True)


def witness_tv(P: Distribution, Q: Distribution) -> Witness:
    """Scheffe witness f*(x) = 1{x in A} - 1/2 on the set A = {p > q}."""
    if P == Q:
        return _zero_witness("tv")
    A = yatracos_set(P, Q)
    offset = 0.5 * (A.prob(P) + A.prob(Q)) - 0.5
    return Witness("tv", lambda x: A.indicator(x) - 0.5, offset, info={"yatracos": A})


def witness_w1(P: Distribution, Q: Distribution, b: float) -> Witness:
    """CDF-sign witness f*(x) = int_0^x sgn(F_Q(t) - F_P(t)) dt on [0, b].

    1-Lipschitz with f*(0) = 0; both supports must sit inside [0, b].
    """
    from .divergences import _check_in_interval

    _check_in_interval(P, b)
    _check_in_interval(Q, b)
    if P == Q:
        return _zero_witness("w1")
    t = np.unique(np.concatenate([joint_lattice(P), joint_lattice(Q), [0.0, b]]))
    t = t[(t >= 0) & (t <= b)]
    seg = t[:-1]
    gaps = np.diff(t)
    fp, fq = P.cdf(seg), Q.cdf(seg)
    sgn = np.where(fq > fp, 1.0, np.where(fp > fq, -1.0, 0.0))
    cum = np.concatenate([[0.0], np.cumsum(sgn * gaps)])

    def evaluate(x, t=t, sgn=sgn, cum=cum):
        j = np.clip(np.searchsorted(t, x, side="right") - 1, 0, len(sgn) - 1)
        return cum[j] + sgn[j] * (x - t[j])

    fbar = 0.5 * (fp + fq)
    offset = float(np.sum(sgn * (1.0 - fbar) * gaps))
    return Witness("w1", evaluate, offset, info={"breaks": t, "sgn": sgn})


def witness_mmd(P: Distribution, Q: Distribution, kernel: KernelSpec) -> Witness:
    """Normalized mean-embedding difference f* = (mu_P - mu_Q) / ||mu_P - mu_Q||."""
    if P == Q:
        return _zero_witness("mmd")
    epp = kernel_cross(kernel, P, P)
    eqq = kernel_cross(kernel, Q, Q)
    epq = kernel_cross(kernel, P, Q)
    gap = math.sqrt(max(0.0, epp + eqq - 2.0 * epq))
    if gap < _MMD_DEGENERATE:
        return _zero_witness("mmd")

    def evaluate(x, kernel=kernel, gap=gap):
        return (mean_embedding(kernel, P, x) - mean_embedding(kernel, Q, x)) / gap

    # int f* d(P+Q)/2 = (||mu_P||^2 - ||mu_Q||^2) / (2 MMD), in closed form
    offset = (epp - eqq) / (2.0 * gap)
    return Witness("mmd", evaluate, offset, info={"mmd": gap})


def t_ipm(x, P: Distribution, Q: Distribution, witness: Witness):
    """Split IPM statistic at x: integral of f* against (P+Q)/2 minus f*(x)."""
    return witness.offset - witness(x)


# -- per-pair statistic objects ----------------------------------------------


class PairStatistic:
    """T(.; P, Q) for one candidate/pilot pair, precomputing integral terms."""

    def __init__(self, spec: StatisticSpec, P: Distribution, Q: Distribution):
        self.spec = spec
        self.P = P
        self.Q = Q
        self.diagonal = P == Q
        if self.diagonal:
            return
        kind = spec.divergence.kind
        if kind == "dp":
            self._dp_const = self._lp_norm_gap(spec.divergence.beta)
        elif kind == "hellinger":
            self._delta = hellinger_delta(P, Q)
        elif kind == "tv":
            self._witness = witness_tv(P, Q)
        elif kind == "w1":
            self._witness = witness_w1(P, Q, spec.divergence.b)
        elif kind == "mmd":
            self._witness = witness_mmd(P, Q, spec.divergence.kernel)

    def _lp_norm_gap(self, beta):
        P, Q = self.P, self.Q
        if P.is_discrete != Q.is_discrete:
            raise UnsupportedDomain("operands do not share a dominating measure")
        if P.is_discrete:
            x = joint_lattice(P, Q)
            p, q = P.pdf(x), Q.pdf(x)
            return float(np.sum(p ** (1 + beta) - q ** (1 + beta)))
        x, w = quad_nodes([P, Q])
        lp, lq = P.logpdf(x), Q.logpdf(x)
        return float(np.sum(w * (np.exp((1 + beta) * lp) - np.exp((1 + beta) * lq))))

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.diagonal:
            return np.zeros_like(x)
        kind = self.spec.divergence.kind
        if kind == "kl":
            return _log_ratio(self.Q.logpdf(x), self.P.logpdf(x))
        if kind == "dp":
            beta = self.spec.divergence.beta
            return self._dp_const - (1 + 1 / beta) * (self.P.pdf(x) ** beta - self.Q.pdf(x) ** beta)
        if kind == "hellinger":
            return self._delta + psi(_sqrt_ratio(self.Q.logpdf(x), self.P.logpdf(x)))
        return self._witness.offset - self._witness(x)


def _log_ratio(lq, lp):
    """lq - lp with the 0/0 convention log(0/0) = 0."""
    both_zero = np.isneginf(lq) & np.isneginf(lp)
    with np.errstate(invalid="ignore"):
        out = np.where(both_zero, 0.0, lq - lp)
    return out


def _sqrt_ratio(lq, lp):
    """sqrt(q/p) in [0, inf], with the 0/0 convention ratio = 1."""
    both_zero = np.isneginf(lq) & np.isneginf(lp)
    half = 0.5 * (lq - lp)
    with np.errstate(invalid="ignore", over="ignore"):
        out = np.where(both_zero, 1.0, np.exp(np.where(both_zero, 0.0, half)))
    return out


def hellinger_delta(P: Distribution, Q: Distribution) -> float:
    """Delta(P, Q) = [H^2(P, Pbar) - H^2(Q, Pbar)] / sqrt(2), Pbar the equal mixture."""
    if P.is_discrete != Q.is_discrete:
        raise UnsupportedDomain("operands do not share a dominating measure")
    if P.is_discrete:
        x = joint_lattice(P, Q)
        p, q = P.pdf(x), Q.pdf(x)
        pbar = 0.5 * (p + q)
        aff_p = float(np.sum(np.sqrt(p * pbar)))
        aff_q = float(np.sum(np.sqrt(q * pbar)))
    else:
        x, w = quad_nodes([P, Q])
        lp, lq = P.logpdf(x), Q.logpdf(x)
        lbar = np.logaddexp(lp, lq) - math.log(2.0)
        aff_p = float(np.sum(w * np.exp(0.5 * (lp + lbar))))
        aff_q = float(np.sum(w * np.exp(0.5 * (lq + lbar))))
    return (aff_q - aff_p) / _SQRT2


def t_kl(x, P: Distribution, Q: Distribution):
    """log(q(x)/p(x)); may be +-inf when exactly one density vanishes."""
    return PairStatistic(statistic_for(DivergenceTag("kl")), P, Q).values(x)


def t_dp(x, P: Distribution, Q: Distribution, beta: float):
    return PairStatistic(statistic_for(DivergenceTag("dp", beta=beta)), P, Q).values(x)


def t_hellinger(x, P: Distribution, Q: Distribution):
    return PairStatistic(statistic_for(DivergenceTag("hellinger")), P, Q).values(x)


# -- vectorized statistic over a parameter grid --------------------------------


def statistic_matrix(spec: StatisticSpec, family: ParametricFamily, thetas, pilot: Distribution, x) -> np.ndarray:
    """T(x_j; P_theta_i, pilot) as an (n_theta, n_obs) matrix.

    Vectorized over discrete families and Gaussian KL; other combinations
    fall back to one PairStatistic per row.  Rows at the pilot's own
    parameter are exactly zero.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    x = np.asarray(x, dtype=float)
    kind = spec.divergence.kind
    if family.is_discrete and pilot.is_discrete and kind in ("kl", "dp", "hellinger", "tv"):
        out = _statistic_matrix_discrete(spec, family, thetas, pilot, x)
    elif not family.is_discrete and not pilot.is_discrete and kind == "kl":
        if family.kind == "gaussian_location":
            mu = thetas[:, 0][:, None]
            sd = family.fixed_scale
        else:
            mu = thetas[:, 0][:, None]
            sd = thetas[:, 1][:, None]
        out = pilot.logpdf(x)[None, :] - stats.norm.logpdf(x[None, :], mu, sd)
    else:
        out = np.vstack([PairStatistic(spec, family.make(th), pilot).values(x) for th in thetas])
    out[_diagonal_rows(thetas, pilot, family)] = 0.0
    return out


def _diagonal_rows(thetas, pilot: Distribution, family: ParametricFamily) -> np.ndarray:
    mask = np.zeros(len(thetas), dtype=bool)
    for i, th in enumerate(thetas):
        try:
            mask[i] = family.make(th) == pilot
        except ValueError:
            mask[i] = False
    return mask


def _statistic_matrix_discrete(spec, family, thetas, pilot, x):
    lat = family_lattice(family, pilot)
    upper = max(float(lat[-1]), float(np.max(x)) if x.size else 0.0)
    if upper > lat[-1]:
        lat = np.arange(0.0, np.floor(upper) + 1.0)
    M = family_pmf_matrix(family, thetas, lat)
    q = pilot.pdf(lat)
    ix = np.searchsorted(lat, x)
    kind = spec.divergence.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "kl":
            lq = np.log(q[ix])[None, :]
            lp = np.log(M[:, ix])
            return _log_ratio(lq, lp)
        if kind == "dp":
            b = spec.divergence.beta
            const = (M ** (1 + b) - q[None, :] ** (1 + b)).sum(axis=1)
            return const[:, None] - (1 + 1 / b) * (M[:, ix] ** b - q[ix][None, :] ** b)
        if kind == "hellinger":
            pbar = 0.5 * (M + q[None, :])
            aff_p = np.sqrt(M * pbar).sum(axis=1)
            aff_q = np.sqrt(q[None, :] * pbar).sum(axis=1)
            delta = (aff_q - aff_p) / _SQRT2
            ratio = _sqrt_ratio(np.log(q[ix])[None, :], np.log(M[:, ix]))
            return delta[:, None] + psi(ratio)
        # tv: Scheffe statistic through the per-row Yatracos mask
        A = M > q[None, :]
        pa = np.where(A, M, 0.0).sum(axis=1)
        qa = np.where(A, q[None, :], 0.0).sum(axis=1)
        return 0.5 * (pa + qa)[:, None] - A[:, ix]


# -- split-sample summary ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StatisticSample:
    """Raw and delta-corrupted per-sample statistics on the evaluation half.

    ``tbar`` is the raw mean; ``tbar_delta``/``s_delta`` are the corrupted
    mean and the population (1/n0) standard deviation used by studentized
    rules.  Non-finite raw values propagate: a +inf anywhere dominates the
    mean (the candidate is impossible at an observed point).
    """

    raw: np.ndarray
    corrupted: np.ndarray
    delta: float
    tbar: float
    tbar_delta: float
    s_delta: float

    @property
    def n0(self) -> int:
        return len(self.raw)


def summarize(values, delta: float, noise) -> StatisticSample:
    """Attach delta-corruption noise and aggregate; ``noise`` is a seed,
    Generator, or a pre-drawn standard-normal vector shared across candidates."""
    raw = np.asarray(values, dtype=float)
    if raw.size < 2:
        raise InsufficientData("need at least two evaluation samples")
    if delta > 0:
        z = noise if isinstance(noise, np.ndarray) else rng_from(noise).standard_normal(raw.size)
        corrupted = raw + delta * z
    else:
        corrupted = raw
    return StatisticSample(
        raw=raw,
        corrupted=corrupted,
        delta=float(delta),
        tbar=_guarded_mean(raw),
        tbar_delta=_guarded_mean(corrupted),
        s_delta=_guarded_sd(corrupted),
    )


def _guarded_mean(v: np.ndarray) -> float:
    if np.any(np.isposinf(v)):
        return math.inf
    if np.any(np.isneginf(v)):
        return -math.inf
    return float(np.mean(v))


def _guarded_sd(v: np.ndarray) -> float:
    if not np.all(np.isfinite(v)):
        return math.inf
    return float(np.std(v))


# -- Assumption-2 style expectation bound --------------------------------------


def exact_expectation(spec: StatisticSpec, Pstar: Distribution, P0: Distribution, P1: Distribution) -> float:
    """E_{P*} T(X; P0, P1) by exact summation (discrete supports only)."""
    x = joint_lattice(Pstar, P0, P1)
    t = PairStatistic(spec, P0, P1).values(x)
    return float(np.sum(Pstar.pdf(x) * t))


def expectation_bound_terms(spec: StatisticSpec, Pstar, P0, P1):
    """(c1 * E T, nu' * rho(P*||P0) - rho(P*||P1)) in the scale the bound lives in.

    For the Hellinger statistic the bound is stated for squared distance,
    so rho = H^2 and the factor is nu^2 = 3 + 2 sqrt(2); all other statistics
    use their divergence and nu directly.
    """
    tag = spec.divergence
    lhs = spec.c1 * exact_expectation(spec, Pstar, P0, P1)
    r0 = divergence(tag, Pstar, P0)
    r1 = divergence(tag, Pstar, P1)
    if tag.kind == "hellinger":
        rhs = spec.nu**2 * r0**2 - r1**2
    else:
        rhs = spec.nu * r0 - r1
    return lhs, rhs
