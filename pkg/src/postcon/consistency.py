"""Contraction experiments, rate fitting and related checks.

Every random quantity is drawn from a stream keyed by ``(seed, purpose, n)``
so that rows of a curve are independent tasks whose results do not depend
on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import logsumexp

from postcon.errors import PreconditionError
from postcon.forward import GridFunction, solve_elliptic_1d, solve_elliptic_batch
from postcon.norms import GridNorm, HilbertNorm, c2_norm, sup_norm
from postcon.posterior import (
    ESS_MIN,
    batch_means_se,
    conjugate_posterior_diagonal,
    conjugate_sample,
    pcn_sample,
    pointwise_likelihood,
)
from postcon.priors import GaussianPrior, UniformPrior
from postcon.spectral import ScaleSpec, sample_noise

KINDS = ("conjugate", "large_data", "elliptic", "point_mass")
BISECT_STEPS = 12
QUANTILE_TOL = 0.02

_TRUTH, _NOISE, _SAMPLER = 0, 1, 2


def _rng(seed, purpose, n=0):
    return np.random.default_rng([int(seed), purpose, int(n)])


# -- weighted posterior samples -------------------------------------------------------------


@dataclass(frozen=True)
class WeightedSample:
    """Distances of posterior draws to the truth, with normalized weights.

    ``method`` is ``conjugate-mc`` (i.i.d.), ``importance`` (self-normalized
    weights) or ``mcmc`` (a correlated chain with equal weights).
    """

    dist: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    method: str
    ess: float
    flag: str = ""

    def mass(self, radius):
        inside = (self.dist <= radius).astype(float)
        if inside.min() == inside.max():
            return float(inside[0]), 3.0 / self.ess
        p = min(1.0, max(0.0, float(np.dot(self.weights, inside))))
        if self.method == "mcmc":
            se = float(batch_means_se(inside))
        else:
            se = float(math.sqrt(np.sum((self.weights * (inside - p)) ** 2)))
        se = se or 3.0 / self.ess
        return p, se

    def quantile_radius(self, level, steps=BISECT_STEPS):
        """Smallest radius with mass >= level, by bisection; returns ``(radius, mass, ok)``."""
        lo, hi = 0.0, float(np.max(self.dist)) * (1.0 + 1e-12)
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            if self.mass(mid)[0] >= level:
                hi = mid
            else:
                lo = mid
        m = self.mass(hi)[0]
        return hi, m, abs(m - level) <= QUANTILE_TOL


def _iid(dist, method="conjugate-mc"):
    n = dist.size
    return WeightedSample(dist, np.full(n, 1.0 / n), method, float(n))


def _importance(dist, logw):
    w = np.exp(logw - np.max(logw))
    w /= w.sum()
    ess = float(1.0 / np.sum(w**2))
    flag = "" if ess >= ESS_MIN else "unreliable; increase n or use MCMC"
    return WeightedSample(dist, w, "importance", ess, flag)


# -- experiments ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ContractionConfig:
    """Specification of a contraction experiment.

    ``conjugate``: Gaussian prior ``N(0, k**-2t)``, small-noise data with
    noise scale ``k**-r``, ball in ``||.||_1``.
    ``large_data``: uniform prior, ``n`` equidistant noisy point values of
    the coefficient field, ball in the sup norm.
    ``elliptic``: as ``large_data`` but observing the pressure solving
    ``-(a p')' = 1``; balls are still taken on the coefficient.
    ``point_mass``: prior is a single atom at the truth.
    """

    kind: str = "conjugate"
    n_grid: tuple = (10, 100, 1000, 10000)
    seeds: tuple = (0,)
    eps: float = 0.5
    level: float = 0.9
    t: float = 3.0
    r: float = 1.0
    trunc: int = 64
    n_samples: int = 20_000
    gamma_decay: float = 2.0
    gamma_scale: float = 0.5
    n_modes: int = 8
    mean: float = 1.0
    beta: float = 1.0
    m: int = 128
    sigma: float = 0.1
    method: str = "auto"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError("known experiment kind", f"kind must be one of {KINDS}")
        n = tuple(int(v) for v in self.n_grid)
        if len(n) == 0:
            raise PreconditionError("nonempty n grid")
        if any(b <= a for a, b in zip(n, n[1:])) or n[0] < 1:
            raise PreconditionError("n grid strictly increasing and positive")
        object.__setattr__(self, "n_grid", n)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise PreconditionError("at least one seed")
        if not 0 < self.level < 1:
            raise PreconditionError("0 < level < 1")
        if not self.eps > 0:
            raise PreconditionError("eps > 0")

    def to_table(self):
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        d["seeds"] = list(self.seeds)
        return d

    def uniform_prior(self):
        return UniformPrior.power_law(self.gamma_decay, self.n_modes, scale=self.gamma_scale,
                                      mean=self.mean, beta=self.beta, m=self.m)


@dataclass(frozen=True)
class ContractionRow:
    n: int
    seed: int
    eps: float
    mass: float
    stderr: float
    ess: float
    method: str
    radius: float
    radius_mass: float
    flag: str = ""


@dataclass(frozen=True)
class ContractionCurve:
    rows: tuple
    config: ContractionConfig

    def for_seed(self, seed):
        return [row for row in self.rows if row.seed == seed]

    @property
    def flagged(self):
        return [row for row in self.rows if row.flag]


def _row(n, seed, cfg, sample):
    mass, se = sample.mass(cfg.eps)
    radius, rmass, ok = sample.quantile_radius(cfg.level)
    flag = sample.flag
    if not ok:
        flag = (flag + "; " if flag else "") + "quantile bisection outside tolerance"
    return ContractionRow(n, seed, cfg.eps, mass, se, sample.ess, sample.method, radius, rmass, flag)


def conjugate_truth(cfg, seed):
    """Truth drawn from the prior and one fixed noise realization per seed."""
    prior = GaussianPrior(cfg.t, cfg.trunc)
    truth = prior.sample_states(_rng(seed, _TRUTH), 1)[0]
    xi = sample_noise(ScaleSpec(r=cfg.r, trunc=cfg.trunc), cfg.trunc, _rng(seed, _NOISE)).coeffs
    return truth, xi


def _conjugate_rows(cfg, seed):
    truth, xi = conjugate_truth(cfg, seed)
    norm = HilbertNorm(1.0, ScaleSpec(r=cfg.r, trunc=cfg.trunc))
    rows = []
    for n in cfg.n_grid:
        y = truth + xi / math.sqrt(n)
        mean, var = conjugate_posterior_diagonal(cfg.t, cfg.r, y, n)
        draws = conjugate_sample(mean, var, _rng(seed, _SAMPLER, n), cfg.n_samples)
        rows.append(_row(n, seed, cfg, _iid(norm(draws - truth))))
    return rows


def _uniform_rows(cfg, seed):
    prior = cfg.uniform_prior()
    z_true = prior.sample_states(_rng(seed, _TRUTH), 1)[0]
    a_true = prior.fields(z_true[None, :])[0]
    f = np.ones(prior.m + 1) if cfg.kind == "elliptic" else None
    target = GridFunction(solve_elliptic_1d(GridFunction(a_true), GridFunction(f)).values
                          if f is not None else a_true)
    rows = []
    for n in cfg.n_grid:
        x = np.arange(1, n + 1) / (n + 1.0)
        y = target(x) + cfg.sigma * _rng(seed, _NOISE, n).standard_normal(n)
        like = pointwise_likelihood(prior, (x, y), cfg.sigma, f=f)
        sample = _uniform_sample(prior, like, a_true, cfg, _rng(seed, _SAMPLER, n))
        rows.append(_row(n, seed, cfg, sample))
    return rows


def _uniform_sample(prior, like, a_true, cfg, rng):
    if cfg.method in ("auto", "importance"):
        states = prior.sample_states(rng, cfg.n_samples)
        sample = _importance(sup_norm(prior.fields(states) - a_true), like(states))
        if cfg.method == "importance" or sample.ess >= ESS_MIN:
            return sample
    res = pcn_sample(like, prior, 0.5, cfg.n_samples, cfg.n_samples // 5, rng)
    dist = sup_norm(prior.fields(res.states) - a_true)
    flag = "" if res.acceptance_rate >= 0.01 else "pCN acceptance below 1%"
    n = dist.size
    return WeightedSample(dist, np.full(n, 1.0 / n), "mcmc", float(n), flag)


def run_contraction(cfg, seeds=None):
    """Posterior ball mass at ``eps`` and the ``level`` quantile radius for each ``(n, seed)``."""
    rows = []
    for seed in cfg.seeds if seeds is None else seeds:
        if cfg.kind == "conjugate":
            rows.extend(_conjugate_rows(cfg, seed))
        elif cfg.kind == "point_mass":
            for n in cfg.n_grid:
                rows.append(ContractionRow(n, seed, cfg.eps, 1.0, 0.0, float(cfg.n_samples),
                                           "point-mass", 0.0, 1.0))
        else:
            rows.extend(_uniform_rows(cfg, seed))
    return ContractionCurve(tuple(rows), cfg)


def monotone_in_n(rows, k_se=3.0, atol=1e-9):
    """Mass nondecreasing in ``n`` up to ``k_se`` combined standard errors.

    ``atol`` absorbs rounding in masses that saturate at 1.
    """
    rows = sorted(rows, key=lambda row: row.n)
    return all(b.mass >= a.mass - k_se * math.hypot(a.stderr, b.stderr) - atol
               for a, b in zip(rows, rows[1:]))


# -- rate fitting ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    kappa_hat: float
    intercept: float
    residual: float
    n_range: tuple


def fit_rate(n, radii=None):
    """Least-squares slope of ``log radius`` on ``log n``; ``kappa_hat = -slope``.

    ``n`` may be a :class:`ContractionCurve`, whose quantile radii are pooled
    over seeds.
    """
    if isinstance(n, ContractionCurve):
        radii = [row.radius for row in n.rows]
        n = [row.n for row in n.rows]
    n = np.asarray(n, dtype=float)
    radii = np.asarray(radii, dtype=float)
    keep = (radii > 0) & np.isfinite(radii) & (n > 0)
    n, radii = n[keep], radii[keep]
    if np.unique(n).size < 4:
        raise PreconditionError("at least 4 usable n values", f"got {np.unique(n).size}")
    ln, lr = np.log(n), np.log(radii)
    slope, intercept = np.polyfit(ln, lr, 1)
    resid = float(np.sqrt(np.mean((lr - (slope * ln + intercept)) ** 2)))
    return RateFit(float(-slope) + 0.0, float(intercept), resid, (float(n.min()), float(n.max())))


# -- stability reduction --------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    M_hat: float
    ratios: np.ndarray = field(repr=False)


def stability_sweep(prior, f, n_pairs, rng, scales=(1.0, 0.3, 0.1, 0.03, 0.01)):
    """Empirical constant ``M`` in ``||a1 - a2||_inf <= M ||p1 - p2||_{C^2}`` over prior pairs.

    Pairs are a prior draw and a perturbation of it at several relative
    scales, so both distant and nearby pairs are probed.
    """
    fv = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    h = 1.0 / prior.m
    ratios = []
    per = max(1, n_pairs // len(scales))
    for s in scales:
        z1 = prior.sample_states(rng, per)
        z2 = np.clip(z1 + s * rng.uniform(-1.0, 1.0, z1.shape), -1.0, 1.0)
        a1, a2 = prior.fields(z1), prior.fields(z2)
        p1, p2 = solve_elliptic_batch(a1, fv), solve_elliptic_batch(a2, fv)
        num, den = sup_norm(a1 - a2), c2_norm(p1 - p2, h)
        ok = den > 0
        ratios.append(num[ok] / den[ok])
    ratios = np.concatenate(ratios)
    return StabilityReport(float(np.max(ratios)), ratios)


@dataclass(frozen=True)
class ReductionResult:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    ess: float
    M_hat: float
    eps: float

    @property
    def slack(self):
        return self.lhs - self.rhs

    @property
    def combined_se(self):
        return math.hypot(self.lhs_se, self.rhs_se)

    @property
    def holds(self):
        return self.lhs >= self.rhs - 3.0 * self.combined_se


def pushforward_reduction_check(prior, z_true, data, eps, f, M_hat, sigma, n_samples, rng):
    """Coefficient-ball mass against pressure-ball mass at radius ``eps / M_hat``.

    Both masses are self-normalized importance estimates from one set of
    prior draws weighted by the pointwise pressure likelihood.
    """
    if M_hat is None or not M_hat > 0:
        raise PreconditionError("stability constant available", "run stability_sweep first")
    fv = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    a_true = prior.fields(np.asarray(z_true, dtype=float)[None, :])[0]
    p_true = solve_elliptic_batch(a_true[None, :], fv)[0]
    states = prior.sample_states(rng, n_samples)
    fields = prior.fields(states)
    pressures = solve_elliptic_batch(fields, fv)
    like = pointwise_likelihood(prior, data, sigma, f=fv)
    sample_a = _importance(sup_norm(fields - a_true), like(states))
    d_p = c2_norm(pressures - p_true, 1.0 / prior.m)
    lhs, lhs_se = sample_a.mass(eps)
    sample_p = WeightedSample(d_p, sample_a.weights, "importance", sample_a.ess)
    rhs, rhs_se = sample_p.mass(eps / M_hat)
    return ReductionResult(lhs, rhs, lhs_se, rhs_se, sample_a.ess, M_hat, eps)


# -- inconsistency example -----------------------------------------------------------------


@dataclass(frozen=True)
class InconsistencyResult:
    n: int
    theta: float
    log_ratio: float
    k_max: int
    log_tail_bound: float


def inconsistency_ratio(n, theta=0.5, k_max=None, rng=None, zero_noise=False):
    """Log posterior odds of ``A`` against ``A^c`` for the two-component atomic prior.

    The prior puts mass ``exp(-2k**2)`` on ``(1/sqrt(k), 0)`` and
    ``exp(-k**2)`` on ``(1/(2 sqrt(k)), 1)``; the truth is ``(0, 0)`` and
    there are ``n`` and ``floor(n**theta)`` unit-variance observations of
    the two components. Both sums are evaluated by log-sum-exp over
    ``k <= k_max``; the neglected tail is below ``exp(-k_max**2)``.
    """
    if n < 1:
        raise PreconditionError("n >= 1")
    if not 0 < theta < 1:
        raise PreconditionError("0 < theta < 1")
    need = math.ceil(math.sqrt(n)) + 10
    if k_max is None:
        k_max = math.ceil(math.sqrt(n)) + 50
    if k_max < need:
        raise PreconditionError("k_max >= ceil(sqrt(n)) + 10", f"k_max = {k_max} < {need}")
    n_t = int(math.floor(n**theta + 1e-9))
    if zero_noise:
        xi, xt = np.zeros(n), np.zeros(n_t)
    else:
        if rng is None:
            raise PreconditionError("rng given unless zero_noise")
        xi, xt = rng.standard_normal(n), rng.standard_normal(n_t)
    k = np.arange(1, k_max + 1, dtype=float)
    s1, s2 = xi.sum(), (xi**2).sum()

    def quad(c):
        # sum_j (c - xi_j)**2 for each c
        return n * c**2 - 2.0 * c * s1 + s2

    num = -0.5 * quad(1.0 / np.sqrt(k)) - 0.5 * np.sum(xt**2) - 2.0 * k**2
    den = -0.5 * quad(0.5 / np.sqrt(k)) - 0.5 * np.sum((xt - 1.0) ** 2) - k**2
    return InconsistencyResult(int(n), float(theta), float(logsumexp(num) - logsumexp(den)),
                               int(k_max), -float(k_max) ** 2)


# -- stronger norms ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiftResult:
    rate: float
    lam: float
    split: str


def stronger_norm_lift(kappa, s, r, e=None, f=None):
    """Rate in ``||.||_r`` implied by a rate ``kappa`` in ``||.||_1`` and control in ``||.||_s``.

    Interpolation gives ``||u||_r <= ||u||_1**lam ||u||_s**(1 - lam)`` with
    ``lam = (s - r)/(s - 1)``; the lifted rate is ``kappa lam``. ``e`` and
    ``f`` (prior tail parameters) are recorded in the split description only.
    """
    if not s > 1:
        raise PreconditionError("s > 1")
    if not 1 <= r <= s:
        raise PreconditionError("1 <= r <= s", f"r = {r} outside [1, {s}]")
    if isinstance(kappa, RateFit):
        kappa = kappa.kappa_hat
    lam = (s - r) / (s - 1.0)
    split = (f"{{||a - a0||_1**{lam:.6g} > eps/K}} u {{||a - a0||_{s:g}**{1 - lam:.6g} > K}}"
             + (f"; tail e = {e}, f = {f}" if e is not None or f is not None else ""))
    return LiftResult(kappa * lam, lam, split)


def ball_norm(kind, cfg):
    """Distance used for balls in an experiment of the given kind."""
    if kind == "conjugate":
        return HilbertNorm(1.0, ScaleSpec(r=cfg.r, trunc=cfg.trunc))
    return GridNorm("sup")
