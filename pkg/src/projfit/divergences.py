"""Divergence evaluation, projections onto working families, and set geometry.

Discrete pairs are evaluated by exact summation over a truncated lattice
(truncation tail below 1e-12); continuous pairs by composite Gauss-Legendre
quadrature on panels adapted to every Gaussian component, in log-density
space so far tails cannot overflow.  Conventions:

* ``hellinger`` returns the distance H in [0, 1], not H^2;
* ``kl`` returns +inf when the first argument is not dominated by the second;
* ``tv`` is computed through the maximal-discrepancy set {p > q} and exact
  CDF masses, which keeps kinked integrands out of the quadrature;
* ``w1`` requires both supports inside [0, b].

All operations are pure; profiles over parameter grids are vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats
from .distributions import Distribution, ParametricFamily
from .errors import InvalidGrid, InvalidSet, UnsupportedDomain

_LATTICE_TAIL = 1e-13
_TIE_EXCLUDED = 0.0  # points with p == q never enter a Yatracos set


@dataclass(frozen=True)
class KernelSpec:
    """Kernel for maximum mean discrepancy; bandwidth may defer to pilot data."""

    kind: str = "gaussian_rbf"
    bandwidth: object = "median"  # positive float or "median"

    def __post_init__(self):
        if self.kind != "gaussian_rbf":
            raise ValueError(f"unsupported kernel {self.kind!r}")
        if self.bandwidth != "median" and not (float(self.bandwidth) > 0):
            raise ValueError("bandwidth must be positive or 'median'")

    def resolve(self, data) -> "KernelSpec":
        """Fix a numeric bandwidth by the median pairwise distance heuristic."""
        if self.bandwidth != "median":
            return self
        x = np.asarray(data, dtype=float)
        if x.size > 2000:  # median is stable; cap the quadratic cost
            x = x[:2000]
        d = np.abs(x[:, None] - x[None, :])[np.triu_indices(len(x), k=1)]
        h = float(np.median(d)) if d.size else 0.0
        return KernelSpec(self.kind, h if h > 0 else 1.0)

    def gram(self, x, y) -> np.ndarray:
        h = float(self.bandwidth)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.exp(-((x[:, None] - y[None, :]) ** 2) / (2.0 * h * h))


@dataclass(frozen=True)
class DivergenceTag:
    """Divergence selector: kl, dp(beta), hellinger, tv, w1(b), mmd(kernel)."""

    kind: str
    beta: float = None
    b: float = None
    kernel: KernelSpec = None

    def __post_init__(self):
        if self.kind not in ("kl", "dp", "hellinger", "tv", "w1", "mmd"):
            raise ValueError(f"unknown divergence {self.kind!r}")
        if self.kind == "dp" and not (self.beta and self.beta > 0):
            raise ValueError("dp requires beta > 0")
        if self.kind == "w1" and not (self.b and self.b > 0):
            raise ValueError("w1 requires a positive upper endpoint b")
        if self.kind == "mmd" and self.kernel is None:
            object.__setattr__(self, "kernel", KernelSpec())

    def label(self) -> str:
        if self.kind == "dp":
            return f"dp({self.beta:g})"
        if self.kind == "w1":
            return f"w1(b={self.b:g})"
        return self.kind


KL = DivergenceTag("kl")
HELLINGER = DivergenceTag("hellinger")
TV = DivergenceTag("tv")


def DP(beta: float) -> DivergenceTag:
    return DivergenceTag("dp", beta=float(beta))


def W1(b: float) -> DivergenceTag:
    return DivergenceTag("w1", b=float(b))


def MMD(kernel: KernelSpec = None) -> DivergenceTag:
    return DivergenceTag("mmd", kernel=kernel or KernelSpec())


def default_nu(tag: DivergenceTag) -> float:
    """Approximation factor under which the matching relative-fit test is valid."""
    if tag.kind == "hellinger":
        return math.sqrt(3.0 + 2.0 * math.sqrt(2.0))
    if tag.kind in ("tv", "w1", "mmd"):
        return 3.0
    return 1.0


# -- evaluation domains ------------------------------------------------------


def joint_lattice(*dists: Distribution) -> np.ndarray:
    """Common atom set for discrete laws, truncated below 1e-12 total tail mass."""
    atoms = set()
    upper = 0
    has_counts = False
    for d in dists:
        sup = d.support()
        if sup.kind == "finite":
            atoms.update(sup.points)
        elif sup.kind == "counts":
            has_counts = True
            upper = max(upper, d.lattice_upper(_LATTICE_TAIL))
        else:
            raise UnsupportedDomain(f"{d.family} is not discrete")
    if has_counts:
        for a in atoms:
            if a < 0 or a != int(a):
                raise UnsupportedDomain("finite atoms off the counting lattice")
        upper = max(upper, int(max(atoms)) if atoms else 0)
        return np.arange(0, upper + 1, dtype=float)
    return np.array(sorted(atoms), dtype=float)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def quad_nodes(dists):
    """Gauss-Legendre nodes/weights on panels resolving every Gaussian component.

    Panels subdivide each component's 8.5-sigma interval into half-sigma
    pieces, merged across all operands.
    """
    breaks = []
    for d in dists:
        for loc, scale in d.component_scales():
            breaks.append(loc + scale * np.linspace(-8.5, 8.5, 35))
    breaks = np.concatenate(breaks)
    breaks = np.unique(np.clip(breaks, breaks.min(), breaks.max()))
    widths = np.diff(breaks)
    keep = widths > 1e-12
    lo_edges, w_half = breaks[:-1][keep], widths[keep] / 2.0
    nodes = (lo_edges[:, None] + w_half[:, None] * (_GL_NODES[None, :] + 1.0)).ravel()
    weights = (w_half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


# -- pairwise divergences ----------------------------------------------------


def divergence(tag: DivergenceTag, P: Distribution, Q: Distribution) -> float:
    """rho(P || Q) >= 0; zero (to numerical tolerance) iff P = Q."""
    k = tag.kind
    if k == "mmd":
        return _mmd(tag.kernel, P, Q)
    if k == "w1":
        return _w1(tag.b, P, Q)
    if P.is_discrete != Q.is_discrete:
        raise UnsupportedDomain("operands do not share a dominating measure")
    if P.is_discrete:
        x = joint_lattice(P, Q)
        return _f_divergence_discrete(tag, P.pdf(x), Q.pdf(x))
    if k == "tv":
        A = yatracos_set(P, Q)
        return max(0.0, A.prob(P) - A.prob(Q))
    x, w = quad_nodes([P, Q])
    return _f_divergence_continuous(tag, P.logpdf(x), Q.logpdf(x), w)


def _f_divergence_discrete(tag: DivergenceTag, p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if tag.kind == "kl":
        if np.any((p > 0) & (q == 0)):
            return math.inf
        m = p > 0
        return float(np.sum(p[m] * (np.log(p[m]) - np.log(q[m]))))
    if tag.kind == "hellinger":
        return math.sqrt(max(0.0, 1.0 - float(np.sum(np.sqrt(p * q)))))
    if tag.kind == "tv":
        return min(1.0, 0.5 * float(np.sum(np.abs(p - q))))
    if tag.kind == "dp":
        b = tag.beta
        val = np.sum(q ** (1 + b)) - (1 + 1 / b) * np.sum(q**b * p) + np.sum(p ** (1 + b)) / b
        return max(0.0, float(val))
    raise AssertionError(tag.kind)


def _f_divergence_continuous(tag: DivergenceTag, lp, lq, w) -> float:
    p = np.exp(lp)
    if tag.kind == "kl":
        mass = p > 0
        if np.any(mass & np.isneginf(lq)):
            return math.inf
        integrand = np.where(mass, p * (lp - np.where(mass, lq, 0.0)), 0.0)
        return float(np.sum(w * integrand))
    if tag.kind == "hellinger":
        aff = float(np.sum(w * np.exp(0.5 * (lp + lq))))
        return math.sqrt(max(0.0, 1.0 - aff))
    if tag.kind == "dp":
        b = tag.beta
        val = (
            np.sum(w * np.exp((1 + b) * lq))
            - (1 + 1 / b) * np.sum(w * np.exp(b * lq + lp))
            + np.sum(w * np.exp((1 + b) * lp)) / b
        )
        return max(0.0, float(val))
    raise AssertionError(tag.kind)


def _w1(b: float, P: Distribution, Q: Distribution) -> float:
    for d in (P, Q):
        _check_in_interval(d, b)
    # integral of |F_P - F_Q| over [0, b]; both CDFs are step functions on a
    # lattice for discrete laws, so the integral is an exact finite sum
    if P.is_discrete and Q.is_discrete:
        t = np.unique(np.concatenate([joint_lattice(P), joint_lattice(Q), [0.0, b]]))
        t = t[(t >= 0) & (t <= b)]
        gaps = np.diff(t)
        mid = t[:-1]
        return float(np.sum(np.abs(P.cdf(mid) - Q.cdf(mid)) * gaps))
    raise UnsupportedDomain("w1 is implemented for discrete laws on [0, b]")


def _check_in_interval(d: Distribution, b: float):
    sup = d.support()
    if sup.kind == "finite":
        if min(sup.points) < 0 or max(sup.points) > b:
            raise UnsupportedDomain(f"support of {d.family} escapes [0, {b}]")
    elif sup.kind == "counts":
        if 1.0 - d.cdf(np.asarray(b)) > 1e-9:
            raise UnsupportedDomain(f"{d.family} carries mass beyond b={b}")
    else:
        raise UnsupportedDomain(f"{d.family} is not supported inside [0, {b}]")


# -- maximum mean discrepancy ------------------------------------------------


def _atoms_pmf(d: Distribution):
    x = joint_lattice(d)
    return x, d.pdf(x)


def _rbf_cross_gauss(h, a, sa, b, sb):
    v = h * h + sa * sa + sb * sb
    return h / np.sqrt(v) * np.exp(-((a - b) ** 2) / (2.0 * v))


def kernel_cross(kernel: KernelSpec, P: Distribution, Q: Distribution) -> float:
    """E k(X, Y) for independent X ~ P, Y ~ Q, exact per family."""
    h = float(kernel.bandwidth)
    if P.is_discrete and Q.is_discrete:
        xa, pa = _atoms_pmf(P)
        xb, pb = _atoms_pmf(Q)
        return float(pa @ kernel.gram(xa, xb) @ pb)
    if not P.is_discrete and not Q.is_discrete:
        total = 0.0
        for wa, (a, sa) in zip(_mix_weights(P), P.component_scales()):
            for wb, (b, sb) in zip(_mix_weights(Q), Q.component_scales()):
                total += wa * wb * _rbf_cross_gauss(h, a, sa, b, sb)
        return float(total)
    if Q.is_discrete:
        P, Q = Q, P
    xa, pa = _atoms_pmf(P)
    total = np.zeros_like(xa)
    for wb, (b, sb) in zip(_mix_weights(Q), Q.component_scales()):
        total += wb * _rbf_cross_gauss(h, xa, 0.0, b, sb)
    return float(pa @ total)


def _mix_weights(d: Distribution) -> np.ndarray:
    if d.family == "gaussian_mixture":
        return np.asarray(d.params[0], dtype=float)
    return np.array([1.0])


def mean_embedding(kernel: KernelSpec, P: Distribution, x) -> np.ndarray:
    """mu_P(x) = E_P k(X, x), vectorized over query points ``x``."""
    x = np.asarray(x, dtype=float)
    h = float(kernel.bandwidth)
    if P.is_discrete:
        xa, pa = _atoms_pmf(P)
        return kernel.gram(x, xa) @ pa
    out = np.zeros_like(x)
    for w, (m, s) in zip(_mix_weights(P), P.component_scales()):
        out += w * _rbf_cross_gauss(h, x, 0.0, m, s)
    return out


def _mmd(kernel: KernelSpec, P: Distribution, Q: Distribution) -> float:
    if kernel.bandwidth == "median":
        raise ValueError("kernel bandwidth must be resolved before evaluating MMD")
    epp = kernel_cross(kernel, P, P)
    eqq = kernel_cross(kernel, Q, Q)
    epq = kernel_cross(kernel, P, Q)
    return math.sqrt(max(0.0, epp + eqq - 2.0 * epq))


# -- Yatracos sets -----------------------------------------------------------


@dataclass(frozen=True)
class YatracosSet:
    """The set {x : p(x) > q(x)}, exact atoms or refined intervals.

    ``ties_flagged`` marks degenerate pairs whose densities agree on a set of
    positive measure; anti-symmetry of the split statistic is then void.
    """

    kind: str  # "atoms" | "intervals"
    atoms: tuple = ()
    intervals: tuple = ()
    ties_flagged: bool = False

    def indicator(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "atoms":
            if not self.atoms:
                return np.zeros_like(x)
            return np.isin(x, np.asarray(self.atoms)).astype(float)
        out = np.zeros_like(x, dtype=float)
        for lo, hi in self.intervals:
            out = np.where((x > lo) & (x < hi), 1.0, out)
        return out

    def prob(self, d: Distribution) -> float:
        if self.kind == "atoms":
            if not self.atoms:
                return 0.0
            return float(np.sum(d.pdf(np.asarray(self.atoms))))
        total = 0.0
        for lo, hi in self.intervals:
            total += float(d.cdf(np.asarray(hi)) - d.cdf(np.asarray(lo)))
        return total

    @property
    def is_empty(self) -> bool:
        return not (self.atoms or self.intervals)


def yatracos_set(P: Distribution, Q: Distribution, scan_points: int = 4096) -> YatracosSet:
    """Maximal-discrepancy set A = {p > q}; ties p = q are excluded."""
    if P.is_discrete != Q.is_discrete:
        raise UnsupportedDomain("operands do not share a dominating measure")
    if P.is_discrete:
        x = joint_lattice(P, Q)
        p, q = P.pdf(x), Q.pdf(x)
        live = (p > 0) | (q > 0)
        ties = bool(np.any((p == q) & live))
        return YatracosSet("atoms", atoms=tuple(x[p > q]), ties_flagged=ties)
    lo = min(P.effective_interval()[0], Q.effective_interval()[0])
    hi = max(P.effective_interval()[1], Q.effective_interval()[1])
    grid = np.linspace(lo, hi, scan_points)
    diff = P.pdf(grid) - Q.pdf(grid)
    if np.all(diff == 0.0):
        return YatracosSet("intervals", intervals=(), ties_flagged=True)
    crossings = []
    sign = np.sign(diff)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        root = optimize.bisect(
            lambda t: float(P.pdf(np.asarray(t)) - Q.pdf(np.asarray(t))),
            grid[i],
            grid[i + 1],
            xtol=1e-10,
        )
        crossings.append(root)
    edges = np.concatenate([[lo], np.sort(crossings), [hi]])
    intervals = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        if float(P.pdf(np.asarray(mid)) - Q.pdf(np.asarray(mid))) > _TIE_EXCLUDED:
            intervals.append((float(a), float(b)))
    return YatracosSet("intervals", intervals=tuple(intervals))


# -- grids and projections ---------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over the family box; ``explicit`` overrides with given points."""

    points_per_dim: int = 400
    explicit: tuple = None

    def materialize(self, family: ParametricFamily) -> np.ndarray:
        if self.explicit is not None:
            pts = np.atleast_2d(np.asarray(self.explicit, dtype=float))
            if pts.shape[1] != family.dim:
                pts = pts.reshape(-1, family.dim)
        elif family.points is not None:
            pts = np.asarray(family.points, dtype=float)
        else:
            axes = [np.linspace(lo, hi, self.points_per_dim) for (lo, hi) in family.box]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.column_stack([m.ravel() for m in mesh])
        if pts.size == 0:
            raise InvalidGrid("empty parameter grid")
        return pts


@dataclass(frozen=True)
class ProjectionResult:
    theta: tuple
    value: float
    grid_theta: tuple
    grid_value: float
    n_grid: int
    refined: bool = False


def divergence_profile(tag: DivergenceTag, Pstar: Distribution, family: ParametricFamily, thetas) -> np.ndarray:
    """rho(P* || P_theta) for every row of ``thetas``; vectorized where possible."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if family.is_discrete and Pstar.is_discrete:
        return _profile_discrete(tag, Pstar, family, thetas)
    if not family.is_discrete and not Pstar.is_discrete and tag.kind == "kl":
        return _profile_kl_gaussian(Pstar, family, thetas)
    return np.array([divergence(tag, Pstar, family.make(th)) for th in thetas])


def family_lattice(family: ParametricFamily, *extra: Distribution) -> np.ndarray:
    """Lattice covering every member of a discrete family plus extra laws."""
    if family.kind == "bernoulli":
        members = []
    else:  # poisson: tail is widest at the upper box edge
        members = [family.make((family.box[0][1],))]
    return joint_lattice(*members, *extra) if (members or extra) else np.array([0.0, 1.0])


def family_pmf_matrix(family: ParametricFamily, thetas: np.ndarray, lattice: np.ndarray) -> np.ndarray:
    """pmf of each family member on the lattice, one row per parameter vector."""
    if family.kind == "bernoulli":
        p = thetas[:, 0][:, None]
        return np.where(lattice[None, :] == 1.0, p, np.where(lattice[None, :] == 0.0, 1.0 - p, 0.0))
    if family.kind == "poisson":
        return stats.poisson.pmf(lattice[None, :], thetas[:, 0][:, None])
    raise UnsupportedDomain(f"{family.kind} has no discrete pmf matrix")


def _profile_discrete(tag, Pstar, family, thetas):
    x = family_lattice(family, Pstar)
    M = family_pmf_matrix(family, thetas, x)
    p = Pstar.pdf(x)
    if tag.kind == "kl":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p[None, :] > 0, p[None, :] * (np.log(p[None, :]) - np.log(M)), 0.0)
        out = terms.sum(axis=1)
        out[np.any((p[None, :] > 0) & (M == 0), axis=1)] = math.inf
        return out
    if tag.kind == "hellinger":
        return np.sqrt(np.clip(1.0 - np.sqrt(M * p[None, :]).sum(axis=1), 0.0, None))
    if tag.kind == "tv":
        return np.minimum(1.0, 0.5 * np.abs(M - p[None, :]).sum(axis=1))
    if tag.kind == "dp":
        b = tag.beta
        return np.clip(
            (M ** (1 + b)).sum(axis=1)
            - (1 + 1 / b) * (M**b * p[None, :]).sum(axis=1)
            + (p ** (1 + b)).sum() / b,
            0.0,
            None,
        )
    if tag.kind == "w1":
        for th in thetas:
            _check_in_interval(family.make(th), tag.b)
        _check_in_interval(Pstar, tag.b)
        t = np.unique(np.concatenate([x, [0.0, tag.b]]))
        t = t[(t >= 0) & (t <= tag.b)]
        gaps = np.diff(t)
        Fm = np.cumsum(family_pmf_matrix(family, thetas, t), axis=1)
        Fp = Pstar.cdf(t)
        return np.sum(np.abs(Fm[:, :-1] - Fp[None, :-1]) * gaps[None, :], axis=1)
    if tag.kind == "mmd":
        K = tag.kernel.gram(x, x)
        epp = float(Pstar.pdf(x) @ K @ Pstar.pdf(x))
        eqq = np.einsum("ik,kl,il->i", M, K, M)
        epq = M @ (K @ p)
        return np.sqrt(np.clip(epp + eqq - 2.0 * epq, 0.0, None))
    raise AssertionError(tag.kind)


def _profile_kl_gaussian(Pstar, family, thetas):
    # E_{P*} log q_theta is a moment identity for Gaussian candidates, so only
    # the entropy of P* needs quadrature (and it cancels in argmins anyway).
    x, w = quad_nodes([Pstar])
    lp = Pstar.logpdf(x)
    p = np.exp(lp)
    neg_entropy = float(np.sum(w * np.where(p > 0, p * lp, 0.0)))
    m, v = Pstar.mean(), Pstar.var()
    if family.kind == "gaussian_location":
        mu = thetas[:, 0]
        sd = np.full_like(mu, family.fixed_scale)
    else:
        mu, sd = thetas[:, 0], thetas[:, 1]
    e_logq = -0.5 * math.log(2.0 * math.pi) - np.log(sd) - (v + (m - mu) ** 2) / (2.0 * sd**2)
    return neg_entropy - e_logq


def project(tag: DivergenceTag, Pstar: Distribution, family: ParametricFamily, grid: GridSpec) -> ProjectionResult:
    """Forward projection of P* onto the family: global grid scan + local refinement.

    Grid ties break toward the lexicographically smallest parameter vector;
    refinement (bounded scalar search per coordinate) stops at 1e-6.
    """
    thetas = grid.materialize(family)
    values = divergence_profile(tag, Pstar, family, thetas)
    idx = _lex_argmin(thetas, values)
    g_theta, g_value = thetas[idx], float(values[idx])
    if family.points is not None or grid.explicit is not None:
        return ProjectionResult(tuple(g_theta), g_value, tuple(g_theta), g_value, len(thetas))

    def objective(th):
        return divergence(tag, Pstar, family.make(th))

    spacing = [(hi - lo) / max(grid.points_per_dim - 1, 1) for (lo, hi) in family.box]
    theta, value = _refine(objective, g_theta, g_value, family, spacing)
    return ProjectionResult(tuple(theta), value, tuple(g_theta), g_value, len(thetas), refined=True)


def _lex_argmin(thetas: np.ndarray, values: np.ndarray) -> int:
    vmin = np.min(values)
    tol = 1e-12 * max(1.0, abs(vmin) if np.isfinite(vmin) else 1.0)
    tied = np.nonzero(values <= vmin + tol)[0]
    order = np.lexsort(thetas[tied].T[::-1])
    return int(tied[order[0]])


def _refine(objective, theta0, value0, family, spacing, tol=1e-6, sweeps=60):
    theta = np.asarray(theta0, dtype=float).copy()
    value = value0
    for _ in range(sweeps):
        moved = 0.0
        for d in range(family.dim):
            lo = max(family.box[d][0], theta[d] - spacing[d])
            hi = min(family.box[d][1], theta[d] + spacing[d])
            if hi - lo < tol / 10:
                continue

            def along(v, d=d):
                t = theta.copy()
                t[d] = v
                return objective(t)

            res = optimize.minimize_scalar(along, bounds=(lo, hi), method="bounded", options={"xatol": tol / 4})
            if res.fun < value:
                moved = max(moved, abs(res.x - theta[d]))
                theta[d] = res.x
                value = float(res.fun)
        if moved < tol:
            break
    return theta, value


def approx_projection_set(
    tag: DivergenceTag,
    Pstar: Distribution,
    family: ParametricFamily,
    nu: float,
    grid: GridSpec,
):
    """Grid parameters within a factor ``nu`` of the minimal divergence.

    Returns ``(thetas, mask, projection)``.  The grid argmin is always a
    member, so the set is never empty even when refinement beats the grid.
    """
    if nu < 1.0:
        raise ValueError("nu must be at least 1")
    thetas = grid.materialize(family)
    values = divergence_profile(tag, Pstar, family, thetas)
    proj = project(tag, Pstar, family, grid)
    cut = nu * proj.value
    mask = values <= cut + 1e-12 * max(1.0, abs(cut))
    vmin = np.min(values)
    mask |= values <= vmin + 1e-12 * max(1.0, abs(vmin))
    return thetas, mask, proj


def rho_hausdorff(S0, S1, Pstar: Distribution, tag: DivergenceTag, family: ParametricFamily) -> float:
    """Directed set divergence: least fattening of S1 (in excess divergence
    from P*) that absorbs S0.  Over finite parameter sets this is
    max(0, max_{S0} rho - max_{S1} rho)."""
    S0 = np.atleast_2d(np.asarray(S0, dtype=float))
    S1 = np.atleast_2d(np.asarray(S1, dtype=float))
    if S0.size == 0 or S1.size == 0:
        raise InvalidSet("rho_hausdorff needs non-empty parameter sets")
    v0 = divergence_profile(tag, Pstar, family, S0)
    v1 = divergence_profile(tag, Pstar, family, S1)
    return max(0.0, float(np.max(v0) - np.max(v1)))
