"""Posterior log-densities, the conjugate diagonal posterior, pCN and ball masses.

Log-densities are taken with respect to the prior. They are evaluated on
batches of prior *states* (coefficient vectors as produced by
``prior.sample_states``), which keeps importance sampling and MCMC on the
same footing.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf, logsumexp

from postcon.errors import PreconditionError
from postcon.forward import GridFunction, solve_elliptic_batch
from postcon.priors import GaussianPrior, PointMassPrior, UniformPrior
from postcon.spectral import SpectralField, inner_t, norm_t

ESS_MIN = 50


def _coeffs(x):
    return x.coeffs if isinstance(x, SpectralField) else np.asarray(x, dtype=float)


# -- log-densities ------------------------------------------------------------------------


def log_density_small_noise(a, y, n, scale):
    """``-(n/2) ||a||_1**2 + n <a, y>_1`` (additive constants dropped).

    ``a`` may be a batch of coefficient vectors.
    """
    ca, cy = _coeffs(a), _coeffs(y)
    if ca.shape[-1] != cy.shape[-1]:
        raise ValueError(f"mismatched truncations: {ca.shape[-1]} vs {cy.shape[-1]}")
    return -0.5 * n * norm_t(ca, 1.0, scale) ** 2 + n * inner_t(ca, cy, 1.0, scale)


def log_density_pointwise(a, data, sigma, forward=None):
    """``-sum_i (eval(x_i) - y_i)**2 / (2 sigma**2)``.

    ``eval`` is ``a`` itself, or ``forward(a)`` when a forward map is given
    (for instance the pressure of a diffusion coefficient). ``data`` is a pair
    of arrays ``(x, y)``.
    """
    x, y = (np.asarray(v, dtype=float) for v in data)
    if x.size == 0:
        return 0.0
    if not sigma > 0:
        raise PreconditionError("sigma > 0")
    g = forward(a) if forward is not None else a
    g = g if isinstance(g, GridFunction) else GridFunction(g)
    if np.any(x < 0) or np.any(x > 1):
        raise PreconditionError("design points in mesh range")
    resid = g(x) - y
    return float(-np.sum(resid**2) / (2.0 * sigma**2))


@dataclass(frozen=True)
class LogDensity:
    """Log-density relative to the prior, evaluated on batches of prior states.

    ``fn`` maps an array ``(B, dim)`` to ``(B,)``; ``meta`` records the
    observation model and data.
    """

    fn: Callable
    meta: dict = field(default_factory=dict)

    def __call__(self, states):
        s = np.asarray(states, dtype=float)
        if s.ndim == 1:
            return float(self.fn(s[None, :])[0])
        return np.asarray(self.fn(s), dtype=float)

    @classmethod
    def zero(cls):
        return cls(lambda s: np.zeros(s.shape[0]), {"kind": "zero"})


def small_noise_likelihood(y, n, scale):
    """Small-noise log-likelihood on Gaussian-prior states (coefficient vectors)."""
    cy = _coeffs(y)
    w = scale.values(cy.size) ** -2.0
    wy = w * cy

    def fn(states):
        return -0.5 * n * (states**2) @ w + n * states @ wy

    return LogDensity(fn, {"kind": "small_noise", "n": n, "y": cy})


class _Interpolator:
    """Linear interpolation weights from grid nodes to fixed points."""

    def __init__(self, m, points):
        x = np.asarray(points, dtype=float)
        h = 1.0 / m
        j = np.clip(np.floor(x / h).astype(int), 0, m - 1)
        self.j = j
        self.w = x / h - j

    def __call__(self, values):
        return values[..., self.j] * (1.0 - self.w) + values[..., self.j + 1] * self.w


def pointwise_likelihood(prior, data, sigma, f=None):
    """Pointwise Gaussian log-likelihood of grid fields of a :class:`UniformPrior`.

    With ``f`` given, observations are of the pressure solving
    ``-(a p')' = f``; otherwise of the coefficient field itself.
    """
    x, y = (np.asarray(v, dtype=float) for v in data)
    if not sigma > 0:
        raise PreconditionError("sigma > 0")
    interp = _Interpolator(prior.m, x)
    fv = None if f is None else (f.values if isinstance(f, GridFunction) else np.asarray(f, float))

    def fn(states):
        fields = prior.fields(states)
        if fv is not None:
            fields = solve_elliptic_batch(fields, fv)
        resid = interp(fields) - y
        return -np.sum(resid**2, axis=-1) / (2.0 * sigma**2)

    return LogDensity(fn, {"kind": "pointwise" if f is None else "elliptic", "n": x.size})


# -- conjugate posterior --------------------------------------------------------------------


def conjugate_posterior_diagonal(t, r, y, n):
    """Per-mode posterior ``(mean, variance)`` for prior ``N(0, j**-2t)`` and noise ``j**-2r / n``."""
    if n < 1:
        raise PreconditionError("n >= 1")
    cy = _coeffs(y)
    j = np.arange(1, cy.size + 1, dtype=float)
    mu2 = j ** (-2.0 * t)
    lam2n = j ** (-2.0 * r) / n
    mean = cy * mu2 / (mu2 + lam2n)
    var = mu2 * lam2n / (mu2 + lam2n)
    return mean, var


def conjugate_sample(mean, var, rng, size):
    return mean + np.sqrt(var) * rng.standard_normal((size, mean.size))


# -- ball-mass estimates ---------------------------------------------------------------------


@dataclass(frozen=True)
class BallMassEstimate:
    mass: float
    stderr: float
    ess: float
    method: str
    flag: str = ""

    @property
    def reliable(self):
        return not self.flag


def _distances(prior, states, center, norm):
    c = center.values if isinstance(center, GridFunction) else _coeffs(center)
    return norm(prior.fields(states) - c)


def _weighted(inside, logw, method):
    w = np.exp(logw - np.max(logw))
    sw = w.sum()
    ess = float(sw**2 / np.sum(w**2))
    if inside.min() == inside.max():
        # all-in or all-out: rule-of-three bound at the effective sample size
        mass, se = float(inside[0]), 3.0 / ess
    else:
        mass = min(1.0, max(0.0, float(np.dot(w, inside) / sw)))
        se = float(math.sqrt(np.sum((w * (inside - mass)) ** 2)) / sw)
    flag = "" if ess >= ESS_MIN else "unreliable; increase n or use MCMC"
    return BallMassEstimate(mass, se, ess, method, flag)


def importance_ball_masses(prior, log_density, center, radii, norm, n_samples, rng):
    """Self-normalized importance sampling with the prior as proposal, for several radii.

    Weights are max-stabilized; the standard error uses the delta method.
    """
    if n_samples < 1000:
        raise PreconditionError("n_samples >= 1000")
    states = prior.sample_states(rng, n_samples)
    logw = log_density(states)
    dist = _distances(prior, states, center, norm)
    return [_weighted((dist <= r).astype(float), logw, "importance") for r in radii]


def importance_ball_mass(prior, log_density, center, radius, norm, n_samples, rng):
    return importance_ball_masses(prior, log_density, center, [radius], norm, n_samples, rng)[0]


def conjugate_mc_ball_masses(mean, var, center, radii, norm, n_samples, rng):
    """Ball masses from exact draws of a diagonal Gaussian posterior."""
    d = norm(conjugate_sample(mean, var, rng, n_samples) - _coeffs(center))
    out = []
    for r in radii:
        p = float(np.mean(d <= r))
        se = math.sqrt(p * (1 - p) / n_samples) or 3.0 / n_samples
        out.append(BallMassEstimate(p, se, float(n_samples), "conjugate-mc"))
    return out


def log_normalizer(prior, log_density, n_samples, rng):
    """``log((1/N) sum_i exp(log_density(a_i)))`` over prior draws, with its delta-method SE."""
    ld = log_density(prior.sample_states(rng, n_samples))
    val = float(logsumexp(ld) - math.log(n_samples))
    w = np.exp(ld - ld.max())
    se = float(np.std(w) / (math.sqrt(n_samples) * np.mean(w)))
    return val, se


# -- pCN ---------------------------------------------------------------------------------------


def _latent_map(prior):
    """Map standard normal latents to prior states (prior-reversibility is preserved)."""
    if isinstance(prior, GaussianPrior):
        std = prior.std
        return lambda w: std * w
    if isinstance(prior, UniformPrior):
        return lambda w: erf(w / math.sqrt(2.0))
    if isinstance(prior, PointMassPrior):
        atom = np.asarray(prior.atom, dtype=float)
        return lambda w: np.broadcast_to(atom, w.shape)
    raise TypeError(f"unsupported prior {type(prior).__name__}")


@dataclass(frozen=True)
class PCNResult:
    states: np.ndarray = field(repr=False)
    log_likelihood: np.ndarray = field(repr=False)
    accepted: np.ndarray = field(repr=False)
    acceptance_rate: float
    beta: float

    def to_csv(self, path):
        """Columns ``step, c_1..c_N, log_density, accepted``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", *[f"c_{k + 1}" for k in range(self.states.shape[1])], "log_density", "accepted"])
            for i, (s, ll, acc) in enumerate(zip(self.states, self.log_likelihood, self.accepted)):
                w.writerow([i, *map(repr, s.tolist()), repr(float(ll)), int(acc)])


def pcn_sample(log_likelihood, prior, beta, n_steps, burn_in, rng, tune=True, window=None):
    """Preconditioned Crank-Nicolson chain targeting the posterior.

    Proposal ``w' = sqrt(1 - beta**2) w + beta xi`` on standard normal
    latents, which for a Gaussian prior is the usual pCN move on
    coefficients. During burn-in ``beta`` is halved when the windowed
    acceptance falls below 20% and doubled (capped at 1) above 40%. The
    window defaults to ``max(50, burn_in // 20)`` steps. Sampling then uses
    the step whose acceptance, pooled over all but the first window, lies
    in the target band and closest to 30%.
    Returns the post-burn-in chain of prior states.
    """
    if not 0 < beta <= 1:
        raise PreconditionError("0 < beta <= 1", f"beta = {beta}")
    if n_steps < 1 or burn_in < 0:
        raise ValueError("n_steps must be >= 1 and burn_in >= 0")
    window = max(50, burn_in // 20) if window is None else int(window)
    to_state = _latent_map(prior)
    dim = prior.dim
    w = rng.standard_normal(dim)
    x = to_state(w)
    ll = log_likelihood(x)
    total = burn_in + n_steps
    states = np.empty((n_steps, dim))
    lls = np.empty(n_steps)
    accepted = np.zeros(n_steps, dtype=bool)
    win_acc = 0
    pooled = {}
    for it in range(total):
        if tune and it == burn_in and pooled:
            in_band = [(abs(a / c - 0.3), b) for b, (a, c) in pooled.items() if 0.2 <= a / c <= 0.4]
            if in_band:
                beta = min(in_band)[1]
        w_new = math.sqrt(1.0 - beta * beta) * w + beta * rng.standard_normal(dim)
        x_new = to_state(w_new)
        ll_new = log_likelihood(x_new)
        acc = math.log(rng.random()) < ll_new - ll
        if acc:
            w, x, ll = w_new, x_new, ll_new
        if it < burn_in:
            win_acc += acc
            if tune and (it + 1) % window == 0:
                rate = win_acc / window
                if it + 1 > window:
                    a, c = pooled.get(beta, (0, 0))
                    pooled[beta] = (a + win_acc, c + window)
                if rate < 0.2:
                    beta *= 0.5
                elif rate > 0.4:
                    beta = min(1.0, 2.0 * beta)
                win_acc = 0
        else:
            k = it - burn_in
            states[k] = x
            lls[k] = ll
            accepted[k] = acc
    rate = float(accepted.mean())
    if rate < 0.01:
        warnings.warn(f"pCN acceptance rate {rate:.4f} below 1% after burn-in", RuntimeWarning, stacklevel=2)
    return PCNResult(states, lls, accepted, rate, beta)


def batch_means_se(x, n_batches=25):
    """Monte Carlo standard error of the mean of a chain (batch means, along axis 0)."""
    x = np.asarray(x, dtype=float)
    b = x.shape[0] // n_batches
    if b < 1:
        raise ValueError("chain too short for batch means")
    means = x[: b * n_batches].reshape(n_batches, b, *x.shape[1:]).mean(axis=1)
    return means.std(axis=0, ddof=1) / math.sqrt(n_batches)


def pcn_ball_masses(prior, log_likelihood, center, radii, norm, n_steps, rng, burn_in=None, beta=0.5):
    """Ball masses from a tuned pCN chain; SE by batch means, ESS from the SE."""
    burn_in = n_steps // 5 if burn_in is None else burn_in
    res = pcn_sample(log_likelihood, prior, beta, n_steps, burn_in, rng)
    dist = _distances(prior, res.states, center, norm)
    out = []
    for r in radii:
        ind = (dist <= r).astype(float)
        p = float(ind.mean())
        se = float(batch_means_se(ind))
        ess = p * (1 - p) / se**2 if se > 0 else float(n_steps)
        se = se or 3.0 / n_steps
        flag = "" if res.acceptance_rate >= 0.01 else "pCN acceptance below 1%"
        out.append(BallMassEstimate(p, se, float(ess), "mcmc", flag))
    return out


def ball_masses(prior, log_likelihood, center, radii, norm, n_samples, rng, method="auto"):
    """Posterior ball masses: importance sampling, falling back to pCN when ESS < 50."""
    if method not in ("auto", "importance", "mcmc"):
        raise ValueError("method must be auto, importance or mcmc")
    if method in ("auto", "importance"):
        est = importance_ball_masses(prior, log_likelihood, center, radii, norm, n_samples, rng)
        if method == "importance" or all(e.reliable for e in est):
            return est
    return pcn_ball_masses(prior, log_likelihood, center, radii, norm, n_samples, rng)

