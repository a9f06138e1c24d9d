"""Series priors, sampling and small-ball probabilities.

Two prior families are supported:

* :class:`GaussianPrior` -- independent coefficients ``N(0, k**(-2t))`` in the
  eigenbasis of a scale;
* :class:`UniformPrior` -- ``a0 + sum_i gamma_i z_i psi_i`` with
  ``z_i ~ U[-1, 1]`` and cosine basis functions ``psi_i`` normalized to unit
  ``C^beta`` norm, evaluated on a uniform grid.

Every prior exposes ``sample_states(rng, size)`` (coefficient vectors) and
``fields(states)`` (the objects balls are measured on), which is all the
Monte Carlo estimators need.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from postcon.errors import PreconditionError
from postcon.forward import GridFunction
from postcon.spectral import SpectralField

DEFAULT_GRID = 128
MC_CHUNK = 20_000


# -- Gaussian series prior ----------------------------------------------------------


@dataclass(frozen=True)
class GaussianPrior:
    """Coefficient ``k`` is ``N(0, mu_k**2)`` with ``mu_k = k**-t``."""

    t: float
    trunc: int = 256

    def __post_init__(self):
        if self.trunc < 1:
            raise ValueError("trunc must be >= 1")

    @property
    def std(self):
        return np.arange(1, self.trunc + 1, dtype=float) ** (-self.t)

    @property
    def dim(self):
        return self.trunc

    def sample_states(self, rng, size):
        return self.std * rng.standard_normal((size, self.trunc))

    def sample(self, rng):
        return SpectralField(self.sample_states(rng, 1)[0])

    def fields(self, states):
        return np.asarray(states, dtype=float)

    def to_table(self):
        return {"kind": "gaussian", "t": self.t, "trunc": self.trunc}


# -- uniform series prior --------------------------------------------------------------


def cosine_holder_norm(i, beta, n_h=4000):
    """``C^beta`` norm of ``cos(i pi x)`` on ``[0, 1]``, ``0 < beta <= 1``.

    Uses ``|cos(w u) - cos(w v)| = 2 |sin(w c)| |sin(w h / 2)|`` with centre
    ``c`` and separation ``h``; the maximum over ``c`` is taken exactly and
    the one over ``h`` on a fine geometric grid.
    """
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    w = i * math.pi
    if beta == 1.0:
        return 1.0 + w
    h = np.geomspace(1e-7, 1.0, n_h)
    lo, hi = h / 2.0, 1.0 - h / 2.0
    # is there a peak of |sin(w c)| with c in [lo, hi]?  peaks at c = (k + 1/2) / i
    k_first = np.ceil(lo * i - 0.5)
    has_peak = (k_first + 0.5) / i <= hi + 1e-15
    edge = np.maximum(np.abs(np.sin(w * lo)), np.abs(np.sin(w * hi)))
    peak = np.where(has_peak, 1.0, edge)
    return 1.0 + float(np.max(2.0 * peak * np.abs(np.sin(w * h / 2.0)) / h**beta))


@lru_cache(maxsize=64)
def _cosine_basis(n_modes, m, beta):
    x = np.linspace(0.0, 1.0, m + 1)
    rows = [np.cos(i * np.pi * x) / cosine_holder_norm(i, beta) for i in range(1, n_modes + 1)]
    out = np.array(rows)
    out.setflags(write=False)
    return out


def estimate_decay_exponent(values, min_len=8):
    """Fit ``values_i ~ i**-a`` on the last half of a positive sequence; returns ``a``."""
    v = np.asarray(values, dtype=float)
    if v.size < min_len:
        return math.inf
    k = np.arange(1, v.size + 1, dtype=float)
    tail = slice(v.size // 2, None)
    slope = np.polyfit(np.log(k[tail]), np.log(v[tail]), 1)[0]
    return -slope


@dataclass(frozen=True)
class UniformPrior:
    """Law of ``a0 + sum_i gamma_i z_i psi_i``, ``z_i`` i.i.d. ``U[-1, 1]``.

    Parameters
    ----------
    gammas : sequence of float
        Positive nonincreasing weights; the working truncation is their length.
    mean : float or sequence of float
        ``a0``: a constant, or values on the ``m + 1`` grid nodes.
    beta : float
        Holder index at which ``||psi_i||_{C^beta} = 1`` is enforced.
    m : int
        Grid resolution on which fields are evaluated.
    nu_star : float, optional
        Summability threshold: ``sum gamma_i**nu < inf`` for ``nu > nu_star``.
        Estimated from the tail of ``gammas`` when omitted.
    require_positive : bool
        Reject weights that allow ``a0 - sum gamma_i <= 0``.
    """

    gammas: tuple
    mean: object = 1.0
    beta: float = 1.0
    m: int = DEFAULT_GRID
    nu_star: float | None = None
    require_positive: bool = True
    _basis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float).reshape(-1)
        if g.size == 0 or np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("gammas must be a nonempty list of finite nonnegative weights")
        if np.any(np.diff(g) > 0):
            raise ValueError("gammas must be nonincreasing")
        object.__setattr__(self, "gammas", tuple(float(v) for v in g))
        if not np.isscalar(self.mean):
            mv = np.asarray(self.mean, dtype=float)
            if mv.shape != (self.m + 1,):
                raise ValueError(f"grid mean must have m + 1 = {self.m + 1} values")
            object.__setattr__(self, "mean", tuple(float(v) for v in mv))
        if self.nu_star is None:
            a = estimate_decay_exponent(g[g > 0])
            object.__setattr__(self, "nu_star", 0.0 if not math.isfinite(a) or a <= 0 else min(1.0, 1.0 / a))
        if self.require_positive and self.a_min <= 0:
            raise PreconditionError(
                "a0 - sum(gamma) > 0",
                f"prior admits nonpositive coefficients: min(a0) - S = {self.a_min:.4g}",
            )
        object.__setattr__(self, "_basis", _cosine_basis(g.size, self.m, float(self.beta)))

    @classmethod
    def power_law(cls, decay, n_modes, scale=1.0, **kwargs):
        """``gamma_i = scale * i**-decay`` with the exact threshold ``nu* = 1/decay``."""
        g = scale * np.arange(1, n_modes + 1, dtype=float) ** (-decay)
        kwargs.setdefault("nu_star", 1.0 / decay)
        return cls(tuple(g), **kwargs)

    @property
    def S(self):
        return float(sum(self.gammas))

    @property
    def dim(self):
        return len(self.gammas)

    @property
    def mean_values(self):
        if np.isscalar(self.mean):
            return np.full(self.m + 1, float(self.mean))
        return np.asarray(self.mean)

    @property
    def a_min(self):
        return float(np.min(self.mean_values)) - self.S

    @property
    def a_max(self):
        return float(np.max(self.mean_values)) + self.S

    @property
    def x(self):
        return np.linspace(0.0, 1.0, self.m + 1)

    @property
    def basis(self):
        """Rows ``psi_i`` on the grid (unit ``C^beta`` norm)."""
        return self._basis

    def S_nu(self, nu):
        g = np.asarray(self.gammas)
        return float(np.sum(g**nu) ** (1.0 / nu))

    def sample_states(self, rng, size):
        return rng.uniform(-1.0, 1.0, (size, self.dim))

    def fields(self, states):
        z = np.asarray(states, dtype=float)
        return self.mean_values + (z * np.asarray(self.gammas)) @ self._basis

    def field(self, z):
        return GridFunction(self.fields(np.asarray(z)[None, :])[0])

    def sample(self, rng):
        return self.field(self.sample_states(rng, 1)[0])

    def to_table(self):
        return {"kind": "uniform", "gammas": list(self.gammas), "mean": self.mean,
                "beta": self.beta, "m": self.m, "nu_star": self.nu_star}


@dataclass(frozen=True)
class PointMassPrior:
    """Dirac prior at a single coefficient vector."""

    atom: tuple

    @property
    def dim(self):
        return len(self.atom)

    def sample_states(self, rng, size):
        return np.tile(np.asarray(self.atom, dtype=float), (size, 1))

    def fields(self, states):
        return np.asarray(states, dtype=float)


def sample_prior(spec, rng):
    """One exact draw of the truncated prior (a SpectralField or a GridFunction)."""
    return spec.sample(rng)


def prior_from_table(table):
    """Build a prior from a config table with ``kind = gaussian | uniform``."""
    kind = table.get("kind", "gaussian")
    if kind == "gaussian":
        return GaussianPrior(t=float(table["t"]), trunc=int(table.get("trunc", 256)))
    if kind == "uniform":
        n_modes = int(table.get("trunc", table.get("n_modes", 16)))
        common = dict(mean=float(table.get("mean", 1.0)), beta=float(table.get("beta", 1.0)),
                      m=int(table.get("m", DEFAULT_GRID)))
        if "gamma_decay" in table:
            return UniformPrior.power_law(float(table["gamma_decay"]), n_modes,
                                          scale=float(table.get("gamma_scale", 1.0)), **common)
        gam = table["gammas"]
        if isinstance(gam, str):
            gam = [float(v) for v in gam.replace(",", " ").split()]
        return UniformPrior(tuple(gam), **common)
    raise ValueError(f"unknown prior kind {kind!r}")


# -- small-ball probabilities -----------------------------------------------------------


def gaussian_small_ball_exponent(t, r):
    """Small-ball exponent ``rho = 1/(t - r - 1)`` of ``N(0, diag(k**-2t))`` in ``||.||_1``.

    The positive sign is the one consistent with the downstream rate
    constraints ``rho kappa < 1 - 2 kappa``.
    """
    if not t > r + 1:
        raise PreconditionError("t > r + 1", f"no positive small-ball exponent for t = {t}, r = {r}")
    return 1.0 / (t - r - 1.0)


def uniform_small_ball_lower(spec, nu, eps, z_true=None):
    """Analytic lower bound on ``log mu0(B_eps(a_true))`` for a uniform prior.

    With ``nu_tilde = (nu_star + nu) / 2`` the first
    ``N_eps = ceil((2 S_nu_tilde / eps)**(1/(1/nu_tilde - 1)))`` coefficients
    (capped at the working truncation) are confined to one-sided intervals of
    width ``eps / (2 S)``, giving ``N_eps * log(eps / (2 S))``.
    """
    if not 0 < nu < 1:
        raise PreconditionError("0 < nu < 1")
    if not nu > spec.nu_star:
        raise PreconditionError("nu > nu_star", f"nu = {nu} must exceed nu_star = {spec.nu_star}")
    if z_true is not None:
        zt = np.asarray(z_true, dtype=float)
        if np.any(np.abs(zt) > 1):
            raise PreconditionError("z_true in [-1, 1]")
    S = spec.S
    if eps >= 2.0 * S:
        return 0.0
    n_eps = small_ball_dimension(spec, nu, eps)
    return n_eps * math.log(eps / (2.0 * S))


def small_ball_dimension(spec, nu, eps):
    """``N_eps`` of the analytic small-ball bound, capped at the truncation."""
    nu_t = 0.5 * (spec.nu_star + nu)
    raw = (2.0 * spec.S_nu(nu_t) / eps) ** (1.0 / (1.0 / nu_t - 1.0))
    return int(min(spec.dim, math.ceil(raw)))


@dataclass(frozen=True)
class SmallBallEstimate:
    eps: float
    estimate: float
    stderr: float
    hits: int
    n_samples: int
    flag: str = ""


def ball_distances(prior, center, norm, n_samples, rng, chunk=MC_CHUNK):
    """Distances ``norm(field - center)`` for ``n_samples`` prior draws.

    Draws are generated in chunks from independent child streams of ``rng``
    so the result does not depend on how chunks are scheduled.
    """
    c = center.values if isinstance(center, GridFunction) else (
        center.coeffs if isinstance(center, SpectralField) else np.asarray(center, dtype=float))
    n_chunks = -(-n_samples // chunk)
    streams = rng.spawn(n_chunks)
    out = np.empty(n_samples)
    for k, stream in enumerate(streams):
        lo = k * chunk
        size = min(chunk, n_samples - lo)
        f = prior.fields(prior.sample_states(stream, size))
        out[lo:lo + size] = norm(f - c)
    return out


def _binomial(eps, dist):
    n = dist.size
    hits = int(np.count_nonzero(dist <= eps))
    if hits == 0:
        # rule of three: one-sided 95% upper confidence bound
        return SmallBallEstimate(eps, 0.0, 3.0 / n, 0, n, "no hits: increase n_samples or eps")
    p = hits / n
    return SmallBallEstimate(eps, p, math.sqrt(p * (1.0 - p) / n), hits, n)


def small_ball_mc(prior, center, eps, norm, n_samples, rng):
    """Monte Carlo estimate of ``mu0(B_eps(center))`` with binomial standard error."""
    if n_samples < 1000:
        raise PreconditionError("n_samples >= 1000")
    return _binomial(float(eps), ball_distances(prior, center, norm, n_samples, rng))


def small_ball_curve(prior, center, eps_grid, norm, n_samples, rng):
    """:func:`small_ball_mc` over several radii with common random numbers."""
    if n_samples < 1000:
        raise PreconditionError("n_samples >= 1000")
    dist = ball_distances(prior, center, norm, n_samples, rng)
    return [_binomial(float(e), dist) for e in eps_grid]


SMALL_BALL_COLUMNS = ("eps", "estimate", "stderr", "analytic_bound", "n_samples", "seed")


def append_small_ball_csv(path, estimates, bounds, seed):
    """Append MC rows ``(eps, estimate, stderr, analytic_bound, n_samples, seed)``."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(SMALL_BALL_COLUMNS)
        for est, bound in zip(estimates, bounds):
            w.writerow([repr(est.eps), repr(est.estimate), repr(est.stderr), repr(float(bound)),
                        est.n_samples, seed])
