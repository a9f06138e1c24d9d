"""Hilbert-scale arithmetic over a fixed eigenbasis.

A covariance operator is described only through its eigenvalues
``lambda_k**2``; fields are coefficient sequences against the matching
eigenbasis. Norms follow ``||u||_t = ||Gamma^{-t/2} u||``, i.e.

    ||x||_t**2 = sum_k lambda_k**(-2 t) x_k**2 .
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from postcon.errors import PreconditionError

LAWS = ("power", "dirichlet_laplacian", "explicit")
DEFAULT_TRUNC = 256


@dataclass(frozen=True)
class ScaleSpec:
    """Eigenvalue model ``lambda_k`` of a covariance operator.

    Parameters
    ----------
    law : {"power", "dirichlet_laplacian", "explicit"}
        ``power``: ``lambda_k = k**-r``.
        ``dirichlet_laplacian``: ``(pi k)**-r`` for ``d = 1`` (the exact 1D
        Dirichlet spectrum) and ``k**(-r/d)`` otherwise.
        ``explicit``: the positive nonincreasing list ``eigenvalues``.
    r : float, optional
        Decay exponent for the two parametric laws.
    d : int
        Spatial dimension (Weyl law only).
    eigenvalues : tuple of float, optional
        Values for the explicit law.
    trunc : int
        Default truncation level.
    """

    law: str = "power"
    r: float | None = 1.0
    d: int = 1
    eigenvalues: tuple | None = None
    trunc: int = DEFAULT_TRUNC

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"unknown eigenvalue law {self.law!r}; expected one of {LAWS}")
        if self.trunc < 1:
            raise ValueError("trunc must be a positive integer")
        if self.law == "explicit":
            if not self.eigenvalues:
                raise ValueError("explicit law needs a nonempty eigenvalue list")
            vals = np.asarray(self.eigenvalues, dtype=float)
            if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
                raise ValueError("explicit eigenvalues must be finite and strictly positive")
            if np.any(np.diff(vals) > 0):
                raise ValueError("explicit eigenvalues must be nonincreasing")
            object.__setattr__(self, "eigenvalues", tuple(float(v) for v in vals))
        else:
            if self.r is None or not self.r > 0:
                raise ValueError(f"{self.law} law needs r > 0")
            if self.d < 1:
                raise ValueError("d must be >= 1")

    @property
    def available(self):
        """Number of eigenvalues the law can supply (``inf`` for parametric laws)."""
        if self.law == "explicit":
            return len(self.eigenvalues)
        return math.inf

    def values(self, trunc=None):
        """Eigenvalues ``lambda_1 .. lambda_N`` as an array."""
        n = self.trunc if trunc is None else int(trunc)
        if n > self.available:
            raise PreconditionError(
                "trunc <= available eigenvalues",
                f"requested {n} eigenvalues, only {self.available} available",
            )
        k = np.arange(1, n + 1, dtype=float)
        if self.law == "power":
            return k ** (-self.r)
        if self.law == "dirichlet_laplacian":
            if self.d == 1:
                return (np.pi * k) ** (-self.r)
            return k ** (-self.r / self.d)
        return np.asarray(self.eigenvalues[:n], dtype=float)

    def to_table(self):
        table = {"law": self.law, "trunc": self.trunc}
        if self.law == "explicit":
            table["eigenvalues"] = list(self.eigenvalues)
        else:
            table["r"] = self.r
            table["d"] = self.d
        return table

    @classmethod
    def from_table(cls, table):
        """Build from a config table ``{law, r, d, eigenvalues, trunc}``."""
        law = table.get("law", "power")
        eig = table.get("eigenvalues")
        if isinstance(eig, str):
            eig = [float(v) for v in eig.replace(",", " ").split()]
        return cls(
            law=law,
            r=float(table.get("r", 1.0)),
            d=int(table.get("d", 1)),
            eigenvalues=tuple(eig) if eig is not None else None,
            trunc=int(table.get("trunc", DEFAULT_TRUNC)),
        )


@dataclass(frozen=True)
class SpectralField:
    """Coefficients ``x_k`` of a function against the eigenbasis ``phi_k``."""

    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def trunc(self):
        return self.coeffs.shape[0]

    def __add__(self, other):
        return SpectralField(self.coeffs + _coeffs(other, self.trunc))

    def __sub__(self, other):
        return SpectralField(self.coeffs - _coeffs(other, self.trunc))

    def __mul__(self, scalar):
        return SpectralField(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(-self.coeffs)

    @classmethod
    def zeros(cls, trunc):
        return cls(np.zeros(trunc))


def _coeffs(other, trunc):
    c = other.coeffs if isinstance(other, SpectralField) else np.asarray(other, dtype=float)
    if c.shape[-1] != trunc:
        raise ValueError(f"mismatched truncations: {c.shape[-1]} vs {trunc}")
    return c


def _as_coeff_array(x):
    c = x.coeffs if isinstance(x, SpectralField) else np.asarray(x, dtype=float)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    return c


def norm_t(field, t, scale):
    """Hilbert-scale norm ``sqrt(sum_k lambda_k**(-2t) x_k**2)``.

    ``field`` may be a :class:`SpectralField` or an array whose last axis
    holds coefficients; a batch of fields returns an array of norms.
    """
    c = _as_coeff_array(field)
    lam = scale.values(c.shape[-1])
    # log-domain weights keep lambda**(-2t) finite for steep decays
    w = np.exp(-2.0 * t * np.log(lam))
    return np.sqrt(np.sum(w * c * c, axis=-1))


def inner_t(x, y, t, scale):
    """Inner product ``<x, y>_t`` of the Hilbert scale."""
    cx, cy = _as_coeff_array(x), _as_coeff_array(y)
    if cx.shape[-1] != cy.shape[-1]:
        raise ValueError("mismatched truncations")
    lam = scale.values(cx.shape[-1])
    return np.sum(lam ** (-2.0 * t) * cx * cy, axis=-1)


def interpolation_gap(field, q, r, s, scale):
    """Slack in ``||x||_r <= ||x||_q**((s-r)/(s-q)) ||x||_s**((r-q)/(s-q))``.

    The returned value is nonnegative up to rounding; it vanishes for
    single-mode fields and the zero field.
    """
    if not q < r:
        raise PreconditionError("q < r")
    if not r < s:
        raise PreconditionError("r < s")
    nq = norm_t(field, q, scale)
    nr = norm_t(field, r, scale)
    ns = norm_t(field, s, scale)
    theta = (s - r) / (s - q)
    return nq**theta * ns ** (1.0 - theta) - nr


def trace_sigma0(scale, tol=0.01):
    """Critical exponent ``sigma0``: ``sum_k lambda_k**(2 sigma)`` converges iff ``sigma > sigma0``.

    Closed forms for the parametric laws. Explicit lists are extrapolated by
    regressing the last half of the list: a power-law tail ``k**-a`` gives
    ``1/(2a)``; a geometric tail (linear in ``k`` on the log scale) gives 0.
    The better fit must reach ``R**2 >= 1 - tol``.
    """
    if scale.law == "power":
        return 1.0 / (2.0 * scale.r)
    if scale.law == "dirichlet_laplacian":
        return scale.d / (2.0 * scale.r)

    lam = np.asarray(scale.eigenvalues, dtype=float)
    if lam.size < 8:
        raise PreconditionError(
            "explicit list long enough to extrapolate",
            f"need at least 8 eigenvalues to extrapolate the tail, got {lam.size}",
        )
    k = np.arange(1, lam.size + 1, dtype=float)
    tail = slice(lam.size // 2, None)
    log_lam = np.log(lam[tail])

    slope_pow, r2_pow = _linfit(np.log(k[tail]), log_lam)
    slope_geo, r2_geo = _linfit(k[tail], log_lam)
    if r2_geo >= 1.0 - tol and r2_geo > r2_pow and slope_geo < 0:
        return 0.0
    if r2_pow < 1.0 - tol:
        raise PreconditionError(
            "tail follows a power or geometric law",
            f"log-log tail regression has R^2 = {r2_pow:.4f} < {1 - tol:.4f}; "
            "cannot extrapolate sigma0",
        )
    if slope_pow >= 0:
        raise PreconditionError("decaying eigenvalues", "eigenvalue tail does not decay")
    return 1.0 / (2.0 * -slope_pow)


def _linfit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - np.sum(resid**2) / ss_tot
    return coef[0], r2


def sample_noise(scale, trunc, rng, size=None):
    """Draw ``xi = sum_k lambda_k zeta_k phi_k`` with ``zeta_k`` i.i.d. standard normal.

    With ``size`` given, returns an array of shape ``(size, trunc)`` instead
    of a single :class:`SpectralField`.
    """
    if trunc < 1:
        raise ValueError("trunc must be >= 1")
    lam = scale.values(trunc)
    if size is None:
        return SpectralField(lam * rng.standard_normal(trunc))
    return lam * rng.standard_normal((size, trunc))


def noise_partial_sums(scale, sigma, trunc):
    """Partial sums ``sum_{k<=N} lambda_k**(2 sigma)`` for ``N = 1..trunc``.

    These equal ``E||xi||_{1-sigma}**2`` at truncation ``N``; they converge
    iff ``sigma > sigma0``.
    """
    lam = scale.values(trunc)
    return np.cumsum(lam ** (2.0 * sigma))


def tail_bound(scale, sigma, trunc):
    """Integral bound on ``sum_{k>N} lambda_k**(2 sigma)`` for power and Weyl laws.

    Returns ``inf`` when the series diverges and ``nan`` for explicit lists.
    """
    if scale.law == "explicit":
        return math.nan
    if scale.law == "power":
        expo, const = 2.0 * sigma * scale.r, 1.0
    elif scale.d == 1:
        expo, const = 2.0 * sigma * scale.r, np.pi ** (-2.0 * sigma * scale.r)
    else:
        expo, const = 2.0 * sigma * scale.r / scale.d, 1.0
    if expo <= 1.0:
        return math.inf
    return const * trunc ** (1.0 - expo) / (expo - 1.0)
