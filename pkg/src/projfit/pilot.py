"""Pilot estimators fit on the held-out half: maximum likelihood and
minimum-distance estimators matched to the target divergence.

MLE uses closed forms where the family admits them (sample mean for
Bernoulli/Poisson, moment pair for Gaussians, with box clipping) and a grid
scan with local refinement otherwise.  Minimum-distance criteria:

* Hellinger / TV on discrete supports: empirical pmf plug-in;
* Hellinger / TV on continuous supports: Freedman-Diaconis histogram plug-in;
* dp / mmd: their native sample criteria (no density estimate needed);
* w1: empirical CDF distance on [0, b];
* kl: the empirical criterion coincides with the MLE.

Ties break toward the lexicographically smallest parameter vector, and every
fit is deterministic given (data, spec).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, ParametricFamily
from .divergences import (
    DivergenceTag,
    GridSpec,
    _lex_argmin,
    _refine,
    family_lattice,
    family_pmf_matrix,
    kernel_cross,
    mean_embedding,
    quad_nodes,
)
from .errors import InsufficientData, UnsupportedDomain

_DEFAULT_GRID = GridSpec(points_per_dim=400)


@dataclass(frozen=True)
class PilotSpec:
    """Pilot choice: "mle", or "mde" with the divergence to minimize."""

    kind: str = "mle"
    divergence: DivergenceTag = None
    grid: GridSpec = _DEFAULT_GRID

    def __post_init__(self):
        if self.kind not in ("mle", "mde"):
            raise ValueError(f"unknown pilot kind {self.kind!r}")
        if self.kind == "mde":
            if self.divergence is None:
                raise ValueError("mde pilot needs a divergence tag")
            if self.divergence.kind == "kl":
                object.__setattr__(self, "kind", "mle")  # same criterion

    def fit(self, family: ParametricFamily, data) -> Distribution:
        if self.kind == "mle":
            return fit_mle(family, data, self.grid)
        return fit_min_distance(family, data, self.divergence, self.grid)

    def label(self) -> str:
        return "mle" if self.kind == "mle" else f"mde:{self.divergence.label()}"


def pilot_from_string(text: str, default_tag: DivergenceTag = None, grid: GridSpec = _DEFAULT_GRID) -> PilotSpec:
    """Parse "mle", "mde" (uses the experiment divergence), or "mde:<kind>"."""
    text = text.strip().lower()
    if text == "mle":
        return PilotSpec("mle", grid=grid)
    if text == "mde":
        if default_tag is None:
            raise ValueError("mde pilot needs a divergence")
        return PilotSpec("mde", divergence=default_tag, grid=grid)
    if text.startswith("mde:"):
        kind = text.split(":", 1)[1]
        if default_tag is not None and default_tag.kind == kind:
            return PilotSpec("mde", divergence=default_tag, grid=grid)
        if kind == "dp":
            return PilotSpec("mde", divergence=DivergenceTag("dp", beta=0.5), grid=grid)
        if kind == "w1":
            raise ValueError("mde:w1 needs the statistic's endpoint; set the divergence to w1")
        return PilotSpec("mde", divergence=DivergenceTag(kind), grid=grid)
    raise ValueError(f"cannot parse pilot {text!r}")


# -- maximum likelihood --------------------------------------------------------


def fit_mle(family: ParametricFamily, data, grid: GridSpec = _DEFAULT_GRID) -> Distribution:
    """Likelihood maximizer over the family; closed forms where available."""
    x = np.asarray(data, dtype=float)
    if x.size == 0:
        raise InsufficientData("cannot fit a pilot on empty data")
    if family.points is None:
        if family.kind == "bernoulli":
            return family.make(family.clip((float(np.mean(x)),)))
        if family.kind == "poisson":
            return family.make(family.clip((float(np.mean(x)),)))
        if family.kind == "gaussian_location":
            return family.make(family.clip((float(np.mean(x)),)))
        if family.kind == "gaussian_location_scale":
            return family.make(family.clip((float(np.mean(x)), float(np.std(x)))))
    return _minimize_criterion(family, grid, _neg_loglik_profile(family, x), _neg_loglik_scalar(family, x))


def _neg_loglik_profile(family, x):
    def profile(thetas):
        if family.is_discrete:
            u, counts = np.unique(x, return_counts=True)
            lat = family_lattice(family)
            if u.max() > lat[-1]:
                lat = np.arange(0.0, np.floor(u.max()) + 1.0)
            M = family_pmf_matrix(family, thetas, lat)
            ix = np.searchsorted(lat, u)
            with np.errstate(divide="ignore"):
                return -(np.log(M[:, ix]) @ counts)
        return np.array([_neg_loglik_scalar(family, x)(th) for th in thetas])

    return profile


def _neg_loglik_scalar(family, x):
    def objective(theta):
        return -float(np.sum(family.make(family.clip(theta)).logpdf(x)))

    return objective


# -- minimum distance ----------------------------------------------------------


def fit_min_distance(family: ParametricFamily, data, tag: DivergenceTag, grid: GridSpec = _DEFAULT_GRID) -> Distribution:
    """Minimizer of the empirical divergence criterion over the family."""
    x = np.asarray(data, dtype=float)
    if x.size == 0:
        raise InsufficientData("cannot fit a pilot on empty data")
    if tag.kind == "kl":
        return fit_mle(family, data, grid)
    if tag.kind == "mmd" and tag.kernel.bandwidth == "median":
        tag = DivergenceTag("mmd", kernel=tag.kernel.resolve(x))
    profile, scalar = _mde_criterion(family, x, tag)
    return _minimize_criterion(family, grid, profile, scalar)


def _minimize_criterion(family, grid, profile, scalar):
    thetas = grid.materialize(family)
    values = np.asarray(profile(thetas), dtype=float)
    idx = _lex_argmin(thetas, values)
    theta, value = thetas[idx], float(values[idx])
    if family.points is None and grid.explicit is None:
        spacing = [(hi - lo) / max(grid.points_per_dim - 1, 1) for (lo, hi) in family.box]
        theta, _ = _refine(scalar, theta, value, family, spacing)
    return family.make(tuple(theta))


def _mde_criterion(family, x, tag):
    if family.is_discrete:
        u, counts = np.unique(x, return_counts=True)
        phat = counts / counts.sum()
        lat = family_lattice(family)
        if u.max() > lat[-1]:
            lat = np.arange(0.0, np.floor(u.max()) + 1.0)
        emp = np.zeros(len(lat))
        emp[np.searchsorted(lat, u)] = phat

        def profile(thetas):
            M = family_pmf_matrix(family, thetas, lat)
            return _plugin_values(tag, emp, M, lat, x)

    elif tag.kind in ("hellinger", "tv"):
        edges = np.histogram_bin_edges(x, bins="fd")
        counts, _ = np.histogram(x, bins=edges)
        phat = counts / counts.sum()

        def profile(thetas):
            out = np.empty(len(thetas))
            for i, th in enumerate(thetas):
                d = family.make(th)
                qmass = np.diff(d.cdf(edges))
                if tag.kind == "tv":
                    out[i] = 0.5 * np.sum(np.abs(phat - qmass)) + 0.5 * (1.0 - qmass.sum())
                else:
                    aff = np.sum(np.sqrt(phat * np.clip(qmass, 0.0, None)))
                    out[i] = np.sqrt(max(0.0, 1.0 - aff))
            return out

    elif tag.kind == "dp":
        beta = tag.beta

        def profile(thetas):
            out = np.empty(len(thetas))
            for i, th in enumerate(thetas):
                d = family.make(th)
                nodes, w = quad_nodes([d])
                lq = d.logpdf(nodes)
                out[i] = float(np.sum(w * np.exp((1 + beta) * lq))) - (1 + 1 / beta) * float(
                    np.mean(d.pdf(x) ** beta)
                )
            return out

    elif tag.kind == "mmd":

        def profile(thetas):
            out = np.empty(len(thetas))
            for i, th in enumerate(thetas):
                d = family.make(th)
                out[i] = kernel_cross(tag.kernel, d, d) - 2.0 * float(np.mean(mean_embedding(tag.kernel, d, x)))
            return out

    else:
        raise UnsupportedDomain(f"no continuous minimum-distance criterion for {tag.kind}")

    def scalar(theta):
        return float(profile(np.atleast_2d(np.asarray(family.clip(theta))))[0])

    return profile, scalar


def _plugin_values(tag, emp, M, lat, x):
    if tag.kind == "hellinger":
        return np.sqrt(np.clip(1.0 - np.sqrt(M * emp[None, :]).sum(axis=1), 0.0, None))
    if tag.kind == "tv":
        return 0.5 * np.abs(M - emp[None, :]).sum(axis=1)
    if tag.kind == "dp":
        b = tag.beta
        sample_term = (M[:, np.searchsorted(lat, x)] ** b).mean(axis=1)
        return (M ** (1 + b)).sum(axis=1) - (1 + 1 / b) * sample_term
    if tag.kind == "w1":
        t = np.unique(np.concatenate([lat, [0.0, tag.b]]))
        t = t[(t >= 0) & (t <= tag.b)]
        gaps = np.diff(t)
        Fm = np.cumsum(family_pmf_matrix_from(M, lat, t), axis=1)
        Fh = (x[None, :] <= t[:, None]).mean(axis=1)
        return np.sum(np.abs(Fm[:, :-1] - Fh[None, :-1]) * gaps[None, :], axis=1)
    if tag.kind == "mmd":
        K = tag.kernel.gram(lat, lat)
        cross = tag.kernel.gram(lat, x).mean(axis=1)
        return np.einsum("ik,kl,il->i", M, K, M) - 2.0 * (M @ cross)
    raise UnsupportedDomain(tag.kind)


def family_pmf_matrix_from(M, lat, t):
    """Re-grid a pmf matrix onto evaluation points ``t`` (zeros off-lattice)."""
    out = np.zeros((M.shape[0], len(t)))
    ix = np.searchsorted(t, lat)
    on = (ix < len(t)) & np.isclose(np.take(t, np.minimum(ix, len(t) - 1)), lat)
    out[:, ix[on]] = M[:, on]
    return out
