"""Probability families used as working models and data-generating truths.

Five primary families (Bernoulli, Poisson, negative binomial, Gaussian,
Gaussian mixture) plus a finite ``categorical`` law that the verification
suite uses for exact expectations on small supports.  Every distribution is
an immutable value: density, CDF and moments are deterministic functions of
the parameters, and sampling takes an explicit seed (or Generator) per call,
so instances are safe to share across threads.

Dominating measures: counting measure on the integer lattice (or the given
atom set) for discrete families, Lebesgue measure on the line for Gaussian
families.  Mixtures inherit the measure of their components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .errors import InvalidDispersion
from .util import rng_from

_WEIGHT_TOL = 1e-12
# Standard-normal tail beyond 8.5 sigma is ~1e-17, far below the 1e-12
# truncation budget used for quadrature domains.
_GAUSS_Z = 8.5


@dataclass(frozen=True)
class Support:
    """Support descriptor: finite atom set, non-negative integers, or the real line."""

    kind: str  # "finite" | "counts" | "real"
    points: tuple = ()

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("finite", "counts")


@dataclass(frozen=True)
class Distribution:
    """A concrete law, identified by a family tag and a parameter packing.

    Parameter packings:
      bernoulli          (p,)
      poisson            (mu,)
      negative_binomial  (size, prob)       -- use negbin_from_mean_dispersion
      gaussian           (mu, sigma)
      gaussian_mixture   (weights, means, sds) as three tuples
      categorical        (points, probs) as two tuples
    """

    family: str
    params: tuple

    def __post_init__(self):
        f, p = self.family, self.params
        if f == "bernoulli":
            if not (0.0 <= p[0] <= 1.0):
                raise ValueError(f"Bernoulli parameter {p[0]} outside [0, 1]")
        elif f == "poisson":
            if p[0] <= 0:
                raise ValueError(f"Poisson mean {p[0]} must be positive")
        elif f == "negative_binomial":
            r, q = p
            if r <= 0 or not (0.0 < q < 1.0):
                raise ValueError(f"negative binomial parameters {p} invalid")
        elif f == "gaussian":
            if p[1] <= 0:
                raise ValueError(f"Gaussian scale {p[1]} must be positive")
        elif f == "gaussian_mixture":
            w, m, s = (np.asarray(v, dtype=float) for v in p)
            if not (len(w) == len(m) == len(s)) or len(w) == 0:
                raise ValueError("mixture component lists must share a positive length")
            if np.any(w < 0) or abs(w.sum() - 1.0) > _WEIGHT_TOL:
                raise ValueError("mixture weights must be non-negative and sum to 1")
            if np.any(s <= 0):
                raise ValueError("mixture scales must be positive")
        elif f == "categorical":
            pts, pr = (np.asarray(v, dtype=float) for v in p)
            if len(pts) != len(pr) or len(pts) == 0:
                raise ValueError("categorical points/probs must share a positive length")
            if len(np.unique(pts)) != len(pts):
                raise ValueError("categorical points must be distinct")
            if np.any(pr < 0) or abs(pr.sum() - 1.0) > _WEIGHT_TOL:
                raise ValueError("categorical probabilities must be non-negative and sum to 1")
        else:
            raise ValueError(f"unknown family {f!r}")

    # -- density ---------------------------------------------------------

    def pdf(self, x):
        """Density w.r.t. the dominating measure, vectorized over ``x``."""
        x = np.asarray(x, dtype=float)
        f, p = self.family, self.params
        if f == "bernoulli":
            q = p[0]
            out = np.where(x == 1.0, q, np.where(x == 0.0, 1.0 - q, 0.0))
            return out
        if f == "poisson":
            return _int_pmf(stats.poisson(p[0]), x)
        if f == "negative_binomial":
            return _int_pmf(stats.nbinom(p[0], p[1]), x)
        if f == "gaussian":
            return stats.norm.pdf(x, p[0], p[1])
        if f == "gaussian_mixture":
            w, m, s = (np.asarray(v, dtype=float) for v in p)
            comp = stats.norm.pdf(x[..., None], m, s)
            return comp @ w
        if f == "categorical":
            pts, pr = (np.asarray(v, dtype=float) for v in p)
            out = np.zeros_like(x)
            for pt, mass in zip(pts, pr):
                out = np.where(x == pt, mass, out)
            return out
        raise AssertionError(f)

    def logpdf(self, x):
        """log density; -inf where the density vanishes.

        Computed in log space per family (logsumexp for mixtures) so that far
        tails stay finite where the density itself would underflow.
        """
        x = np.asarray(x, dtype=float)
        f, p = self.family, self.params
        if f == "poisson":
            return _int_logpmf(stats.poisson(p[0]), x)
        if f == "negative_binomial":
            return _int_logpmf(stats.nbinom(p[0], p[1]), x)
        if f == "gaussian":
            return stats.norm.logpdf(x, p[0], p[1])
        if f == "gaussian_mixture":
            w, m, s = (np.asarray(v, dtype=float) for v in p)
            comp = stats.norm.logpdf(x[..., None], m, s)
            with np.errstate(divide="ignore"):
                return logsumexp(comp + np.log(w), axis=-1)
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    # -- CDF -------------------------------------------------------------

    def cdf(self, t):
        """Right-continuous CDF, vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        f, p = self.family, self.params
        if f == "bernoulli":
            q = p[0]
            return np.where(t < 0.0, 0.0, np.where(t < 1.0, 1.0 - q, 1.0))
        if f == "poisson":
            return stats.poisson.cdf(t, p[0])
        if f == "negative_binomial":
            return stats.nbinom.cdf(t, p[0], p[1])
        if f == "gaussian":
            return stats.norm.cdf(t, p[0], p[1])
        if f == "gaussian_mixture":
            w, m, s = (np.asarray(v, dtype=float) for v in p)
            comp = stats.norm.cdf(t[..., None], m, s)
            return comp @ w
        if f == "categorical":
            pts, pr = (np.asarray(v, dtype=float) for v in p)
            return (pr[None, :] * (pts[None, :] <= t.reshape(-1, 1))).sum(axis=1).reshape(t.shape)
        raise AssertionError(f)

    # -- sampling --------------------------------------------------------

    def sample(self, n: int, seed) -> np.ndarray:
        """Draw ``n`` i.i.d. values; reproducible bit-for-bit given ``seed``."""
        if n < 0:
            raise ValueError("n must be non-negative")
        rng = rng_from(seed)
        f, p = self.family, self.params
        if f == "bernoulli":
            return (rng.random(n) < p[0]).astype(float)
        if f == "poisson":
            return rng.poisson(p[0], n).astype(float)
        if f == "negative_binomial":
            return rng.negative_binomial(p[0], p[1], n).astype(float)
        if f == "gaussian":
            return rng.normal(p[0], p[1], n)
        if f == "gaussian_mixture":
            w, m, s = (np.asarray(v, dtype=float) for v in p)
            comp = rng.choice(len(w), size=n, p=w)
            return rng.normal(m[comp], s[comp])
        if f == "categorical":
            pts, pr = (np.asarray(v, dtype=float) for v in p)
            return rng.choice(pts, size=n, p=pr)
        raise AssertionError(f)

    # -- moments and support ---------------------------------------------

    def mean(self) -> float:
        f, p = self.family, self.params
        if f == "bernoulli":
            return float(p[0])
        if f == "poisson":
            return float(p[0])
        if f == "negative_binomial":
            r, q = p
            return float(r * (1.0 - q) / q)
        if f == "gaussian":
            return float(p[0])
        if f == "gaussian_mixture":
            w, m, _ = (np.asarray(v, dtype=float) for v in p)
            return float(w @ m)
        if f == "categorical":
            pts, pr = (np.asarray(v, dtype=float) for v in p)
            return float(pts @ pr)
        raise AssertionError(f)

    def var(self) -> float:
        f, p = self.family, self.params
        if f == "bernoulli":
            return float(p[0] * (1.0 - p[0]))
        if f == "poisson":
            return float(p[0])
        if f == "negative_binomial":
            r, q = p
            return float(r * (1.0 - q) / q**2)
        if f == "gaussian":
            return float(p[1] ** 2)
        if f == "gaussian_mixture":
            w, m, s = (np.asarray(v, dtype=float) for v in p)
            return float(w @ (s**2 + m**2) - (w @ m) ** 2)
        if f == "categorical":
            pts, pr = (np.asarray(v, dtype=float) for v in p)
            return float(pr @ pts**2 - (pr @ pts) ** 2)
        raise AssertionError(f)

    def support(self) -> Support:
        f = self.family
        if f == "bernoulli":
            return Support("finite", (0.0, 1.0))
        if f in ("poisson", "negative_binomial"):
            return Support("counts")
        if f == "categorical":
            return Support("finite", tuple(self.params[0]))
        return Support("real")

    @property
    def is_discrete(self) -> bool:
        return self.support().is_discrete

    def lattice_upper(self, tail: float = 1e-13) -> int:
        """Smallest K with P(X > K) <= tail, for counts-supported families."""
        f, p = self.family, self.params
        if f == "bernoulli":
            return 1
        if f == "poisson":
            return int(stats.poisson.ppf(1.0 - tail, p[0])) + 2
        if f == "negative_binomial":
            return int(stats.nbinom.ppf(1.0 - tail, p[0], p[1])) + 2
        if f == "categorical":
            return int(max(self.params[0]))
        raise ValueError(f"{f} has no counting lattice")

    def effective_interval(self) -> tuple[float, float]:
        """Interval carrying all but ~1e-12 of the mass, for continuous families."""
        f, p = self.family, self.params
        if f == "gaussian":
            m, s = p
            return (m - _GAUSS_Z * s, m + _GAUSS_Z * s)
        if f == "gaussian_mixture":
            _, m, s = (np.asarray(v, dtype=float) for v in p)
            return (float(np.min(m - _GAUSS_Z * s)), float(np.max(m + _GAUSS_Z * s)))
        raise ValueError(f"{f} is not continuous")

    def component_scales(self) -> np.ndarray:
        """Component (location, scale) pairs; used to build quadrature panels."""
        f, p = self.family, self.params
        if f == "gaussian":
            return np.array([[p[0], p[1]]])
        if f == "gaussian_mixture":
            _, m, s = (np.asarray(v, dtype=float) for v in p)
            return np.column_stack([m, s])
        raise ValueError(f"{f} is not continuous")


# -- constructors ----------------------------------------------------------


def bernoulli(p: float) -> Distribution:
    return Distribution("bernoulli", (float(p),))


def poisson(mu: float) -> Distribution:
    return Distribution("poisson", (float(mu),))


def gaussian(mu: float, sigma: float) -> Distribution:
    return Distribution("gaussian", (float(mu), float(sigma)))


def gaussian_mixture(weights, means, sds) -> Distribution:
    return Distribution(
        "gaussian_mixture",
        (tuple(float(w) for w in weights), tuple(float(m) for m in means), tuple(float(s) for s in sds)),
    )


def categorical(points, probs) -> Distribution:
    return Distribution(
        "categorical",
        (tuple(float(x) for x in points), tuple(float(p) for p in probs)),
    )


def negbin_from_mean_dispersion(mean: float, kappa: float) -> Distribution:
    """Negative binomial with the given mean and variance-to-mean ratio ``kappa``.

    The unique two-parameter negative binomial with E X = mean and
    V X = kappa * mean has size r = mean / (kappa - 1) and success probability
    p = 1 / kappa.  The Poisson limit kappa -> 1 is excluded.
    """
    if kappa <= 1.0:
        raise InvalidDispersion(f"dispersion ratio must exceed 1, got {kappa}")
    if mean <= 0.0:
        raise ValueError("mean must be positive")
    return Distribution("negative_binomial", (mean / (kappa - 1.0), 1.0 / kappa))


def _int_pmf(frozen, x: np.ndarray) -> np.ndarray:
    """pmf of an integer-supported scipy law, zero off the lattice."""
    on_lattice = (x >= 0) & (np.floor(x) == x)
    k = np.where(on_lattice, x, 0.0)
    return np.where(on_lattice, frozen.pmf(k), 0.0)


def _int_logpmf(frozen, x: np.ndarray) -> np.ndarray:
    on_lattice = (x >= 0) & (np.floor(x) == x)
    k = np.where(on_lattice, x, 0.0)
    return np.where(on_lattice, frozen.logpmf(k), -np.inf)


# -- parametric working models ---------------------------------------------


@dataclass(frozen=True)
class ParametricFamily:
    """A parameterized working model with box constraints.

    ``kind`` is one of "bernoulli", "poisson", "gaussian_location",
    "gaussian_location_scale".  ``points`` pins an explicit finite family
    (each entry a parameter vector); the box must still contain every point.
    ``fixed_scale`` applies to "gaussian_location" only.
    """

    kind: str
    box: tuple
    points: tuple = None
    fixed_scale: float = None

    def __post_init__(self):
        if self.kind not in ("bernoulli", "poisson", "gaussian_location", "gaussian_location_scale"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if len(self.box) != self.dim:
            raise ValueError(f"{self.kind} expects a {self.dim}-dimensional box")
        if self.kind == "gaussian_location" and not (self.fixed_scale and self.fixed_scale > 0):
            raise ValueError("gaussian_location requires a positive fixed_scale")
        if self.points is not None:
            for theta in self.points:
                if not self.contains(theta):
                    raise ValueError(f"explicit point {theta} outside the box")

    @property
    def dim(self) -> int:
        return 2 if self.kind == "gaussian_location_scale" else 1

    def contains(self, theta) -> bool:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim,):
            return False
        return all(lo <= v <= hi for v, (lo, hi) in zip(theta, self.box))

    def clip(self, theta) -> tuple:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return tuple(float(np.clip(v, lo, hi)) for v, (lo, hi) in zip(theta, self.box))

    def make(self, theta) -> Distribution:
        """Instantiate the distribution at parameter vector ``theta``."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if not self.contains(theta):
            raise ValueError(f"parameter {tuple(theta)} outside the family box {self.box}")
        if self.kind == "bernoulli":
            return bernoulli(theta[0])
        if self.kind == "poisson":
            return poisson(theta[0])
        if self.kind == "gaussian_location":
            return gaussian(theta[0], self.fixed_scale)
        return gaussian(theta[0], theta[1])

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("bernoulli", "poisson")


def bernoulli_family(lo: float = 0.0, hi: float = 1.0, points=None) -> ParametricFamily:
    pts = tuple((float(p),) for p in points) if points is not None else None
    return ParametricFamily("bernoulli", ((lo, hi),), points=pts)


def poisson_family(lo: float, hi: float) -> ParametricFamily:
    return ParametricFamily("poisson", ((lo, hi),))


def gaussian_location_family(lo: float, hi: float, sigma: float) -> ParametricFamily:
    return ParametricFamily("gaussian_location", ((lo, hi),), fixed_scale=float(sigma))


def gaussian_location_scale_family(loc_bounds, scale_bounds) -> ParametricFamily:
    (llo, lhi), (slo, shi) = loc_bounds, scale_bounds
    if slo <= 0:
        raise ValueError("scale lower bound must be positive")
    return ParametricFamily("gaussian_location_scale", ((llo, lhi), (slo, shi)))
