"""Theoretical contraction rates.

Closed-form bounds for the tail-free, large-data, elliptic and uniform-prior
settings, plus a certified optimizer for the general constraint system

    (1) 1/2 + eta p/q - kappa lam p < 1 - 2 kappa
    (2) 1/2 - eta + (1 - lam) q theta < 1 - 2 kappa
    (3) rho kappa < e theta
    (4) rho kappa < 1 - 2 kappa
    (5) lam p < 2
    (6) (eta p/q - 1/2) / (2 - lam p) < -kappa      [form="theorem"]
        (eta p/q - 1/2) lam p < -kappa              [form="corollary"]
    (7) (1 - lam) q < e
    (8) (1/2 - eta)(1 + 1/(e - (1 - lam) q)) < max(1 - 2 kappa, theta e)

over ``kappa, p > 1, q = p/(p-1), eta >= 0, theta >= 0``, where
``lam = (s - 1 - sigma0)/(s - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from postcon.errors import InfeasibleRateError, PreconditionError

FORMS = ("theorem", "corollary")
DELTA = 1e-9
P_MIN, P_MAX = 1.0 + 1e-3, 50.0
N_P, N_S = 400, 100
N_BISECT = 60


@dataclass(frozen=True)
class RateCertificate:
    """A rate ``kappa`` together with a strictly feasible witness.

    ``slacks`` holds right-hand side minus left-hand side for each of the
    eight constraints, in order; every entry is positive.
    """

    kappa: float
    p: float
    q: float
    eta: float
    theta: float
    lam: float
    rho: float
    e: float
    s: float | None = None
    sigma0: float | None = None
    form: str = "theorem"
    problem: str = "general"
    slacks: tuple = field(default=())

    @property
    def witness(self):
        return {"p": self.p, "q": self.q, "eta": self.eta, "theta": self.theta, "s": self.s}

    def replay(self):
        """Re-evaluate all eight constraints independently; True iff all hold strictly."""
        return all(v > 0 for v in constraint_slacks(
            self.kappa, self.p, self.eta, self.theta, self.lam, self.rho, self.e, self.form))


def lam_from_s(s, sigma0):
    """Interpolation exponent ``(s - 1 - sigma0)/(s - 1)``."""
    if not s > 1 + sigma0:
        raise PreconditionError("s > 1 + sigma0", f"s = {s} must exceed 1 + sigma0 = {1 + sigma0}")
    return (s - 1.0 - sigma0) / (s - 1.0)


# -- replay: scalar transcription of the constraint list ----------------------------------


def constraint_slacks(kappa, p, eta, theta, lam, rho, e, form="theorem"):
    """Slacks (rhs - lhs) of the eight constraints at a candidate point.

    Written directly from the inequality list, independently of the
    vectorized optimizer, so it can serve as a replay check.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    if not p > 1:
        return (-math.inf,) * 8
    q = p / (p - 1.0)
    s1 = (1 - 2 * kappa) - (0.5 + eta * p / q - kappa * lam * p)
    s2 = (1 - 2 * kappa) - (0.5 - eta + (1 - lam) * q * theta)
    s3 = e * theta - rho * kappa
    s4 = (1 - 2 * kappa) - rho * kappa
    s5 = 2 - lam * p
    if form == "theorem":
        lhs6 = (eta * p / q - 0.5) / (2 - lam * p) if s5 > 0 else math.inf
    else:
        lhs6 = (eta * p / q - 0.5) * lam * p
    s6 = -kappa - lhs6
    s7 = e - (1 - lam) * q
    if s7 > 0:
        lhs8 = (0.5 - eta) * (1 + 1 / (e - (1 - lam) * q))
        s8 = max(1 - 2 * kappa, theta * e) - lhs8
    else:
        s8 = -math.inf
    extra = min(eta, theta)  # eta, theta >= 0
    if extra < 0:
        return tuple(min(v, extra) for v in (s1, s2, s3, s4, s5, s6, s7, s8))
    return (s1, s2, s3, s4, s5, s6, s7, s8)


def replay_certificate(cert):
    return cert.replay()


# -- vectorized optimizer -------------------------------------------------------------------


def _eliminate(kappa, lam, p, rho, e, form, delta=DELTA):
    """Largest admissible ``eta`` and ``theta`` at fixed ``(kappa, lam, p)``.

    Constraint (8) improves as ``eta`` and ``theta`` grow, so the binding
    upper bounds from (1), (6) and (2) are optimal; returns ``(eta, theta, ok)``.
    """
    q = p / (p - 1.0)
    upper = (0.5 - 2 * kappa + kappa * lam * p) / (p - 1.0)
    if form == "corollary":
        upper = np.minimum(upper, (0.5 - kappa / (lam * p)) / (p - 1.0))
    eta = upper - delta
    theta = (eta - 2 * kappa + 0.5) / ((1 - lam) * q) - delta
    with np.errstate(divide="ignore", invalid="ignore"):
        gap7 = e - (1 - lam) * q
        lhs8 = (0.5 - eta) * (1 + 1 / gap7)
    ok = (
        (eta >= 0)
        & (theta >= 0)
        & (lam * p < 2 - delta)
        & (gap7 > delta)
        & (e * theta - rho * kappa > delta)
        & ((1 - 2 * kappa) - rho * kappa > delta)
        & (np.maximum(1 - 2 * kappa, theta * e) - lhs8 > delta)
    )
    return eta, theta, ok


def _kappa_max(lam, p, rho, e, form):
    """Bisection for the largest feasible ``kappa`` at each ``(lam, p)``; 0 if none."""
    lam, p = np.broadcast_arrays(np.asarray(lam, float), np.asarray(p, float))
    lo = np.zeros(lam.shape)
    hi = np.full(lam.shape, 1.0 / (2.0 + rho))
    _, _, ok0 = _eliminate(1e-12, lam, p, rho, e, form)
    for _ in range(N_BISECT):
        mid = 0.5 * (lo + hi)
        _, _, ok = _eliminate(mid, lam, p, rho, e, form)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return np.where(ok0, lo, 0.0)


def _certify(kappa, lam, p, rho, e, form, s=None, sigma0=None, problem="general"):
    eta, theta, ok = _eliminate(kappa, lam, p, rho, e, form)
    eta, theta = float(eta), float(theta)
    cert = RateCertificate(
        kappa=float(kappa), p=float(p), q=float(p / (p - 1.0)), eta=eta, theta=theta,
        lam=float(lam), rho=float(rho), e=float(e), s=s, sigma0=sigma0, form=form,
        problem=problem,
        slacks=constraint_slacks(kappa, p, eta, theta, lam, rho, e, form),
    )
    if not (bool(ok) and cert.replay()):
        return None
    return cert


def _optimize(rho, e, form, lam=None, s_range=None, sigma0=None, problem="general"):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    if not rho > 0:
        raise PreconditionError("rho > 0")
    if not e > 0:
        raise PreconditionError("e > 0")
    logp = np.linspace(math.log(P_MIN - 1.0), math.log(P_MAX - 1.0), N_P)
    if s_range is None:
        lam_of = lambda s: lam  # noqa: E731
        s_grid = np.array([np.nan])
    else:
        s_lo, s_hi = s_range
        lam_of = lambda s: (s - 1.0 - sigma0) / (s - 1.0)  # noqa: E731
        width = s_hi - s_lo
        # the supremum typically sits at the upper endpoint
        s_grid = np.concatenate([np.linspace(s_lo, s_hi, N_S + 2)[1:-1], [s_hi - 1e-9 * width]])

    S, LP = np.meshgrid(s_grid, logp, indexing="ij")
    P = 1.0 + np.exp(LP)
    K = _kappa_max(lam_of(S), P, rho, e, form)
    i = np.unravel_index(np.argmax(K), K.shape)
    if K[i] < 1e-4:
        raise InfeasibleRateError("no positive rate certified")
    x0 = [LP[i]] if s_range is None else [LP[i], S[i]]

    def clip(x):
        lp = float(np.clip(x[0], logp[0], logp[-1]))
        if s_range is None:
            return lp, None
        sv = float(np.clip(x[1], s_range[0] + 1e-12 * width, s_range[1] - 1e-12 * width))
        return lp, sv

    def neg_kappa(x):
        lp, sv = clip(x)
        lv = lam if sv is None else lam_of(sv)
        return -float(_kappa_max(lv, 1.0 + math.exp(lp), rho, e, form))

    res = minimize(neg_kappa, x0, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    best_x = res.x if res.fun < -K[i] else np.asarray(x0)
    lp, sv = clip(best_x)
    lv = lam if sv is None else lam_of(sv)
    p = 1.0 + math.exp(lp)
    kappa = float(_kappa_max(lv, p, rho, e, form))
    # the bisection lower end is strictly feasible; back off slightly if rounding bites
    for backoff in (0.0, 1e-12, 1e-9, 1e-6):
        cert = _certify(kappa - backoff, lv, p, rho, e, form, s=sv, sigma0=sigma0, problem=problem)
        if cert is not None:
            return cert
    raise InfeasibleRateError("no positive rate certified")


def rate_general_optimize(rho, e, lam=None, s=None, sigma0=None, form="theorem"):
    """Maximize ``kappa`` subject to the eight constraints.

    Give either ``lam`` directly or ``(s, sigma0)``. Returns a
    :class:`RateCertificate` whose witness strictly satisfies every
    constraint; raises :class:`InfeasibleRateError` when no ``kappa >= 1e-4``
    is feasible.
    """
    if lam is None:
        if s is None or sigma0 is None:
            raise PreconditionError("lam or (s, sigma0) given")
        lam = lam_from_s(s, sigma0)
    if not 0 < lam < 1:
        raise PreconditionError("0 < lam < 1", f"lam = {lam}")
    return _with_s(_optimize(rho, e, form, lam=lam, problem="general"), s, sigma0)


def _with_s(cert, s, sigma0):
    if s is None:
        return cert
    return RateCertificate(**{**cert.__dict__, "s": float(s), "sigma0": float(sigma0)})


def rate_gaussian_case(t, r, form="theorem"):
    """Gaussian-prior rate: optimize additionally over ``s`` in ``(1 + 1/(2r), (t - 1/2)/r)``.

    Uses ``e = 2``, ``sigma0 = 1/(2r)`` and ``rho = 1/(t - r - 1)``.
    """
    if not r > 0:
        raise PreconditionError("r > 0")
    s_lo, s_hi = 1.0 + 1.0 / (2.0 * r), (t - 0.5) / r
    if not s_hi > s_lo:
        raise PreconditionError("1 + 1/(2r) < (t - 1/2)/r", f"empty s interval for t = {t}, r = {r}")
    if not t > r + 1:
        raise PreconditionError("t > r + 1", f"rho undefined for t = {t}, r = {r}")
    rho = 1.0 / (t - r - 1.0)
    return _optimize(rho, 2.0, form, s_range=(s_lo, s_hi), sigma0=1.0 / (2.0 * r),
                     problem=f"gaussian(t={t}, r={r})")


# -- closed forms ---------------------------------------------------------------------------


def rate_no_tail(s, sigma0, rho):
    """``min{1/(2(2 - lam)), 1/(2 + rho)}`` with ``lam = (s - 1 - sigma0)/(s - 1)``."""
    if not rho > 0:
        raise PreconditionError("rho > 0")
    lam = lam_from_s(s, sigma0)
    return min(1.0 / (2.0 * (2.0 - lam)), 1.0 / (2.0 + rho))


def consistency_condition(lam, e):
    """Tail condition on ``e`` guaranteeing consistency at interpolation exponent ``lam``."""
    if not 0 < lam < 1:
        raise PreconditionError("0 < lam < 1")
    if not e > 0:
        raise PreconditionError("e > 0")
    if lam <= 0.5:
        return bool(e > -1.0 + 2.0 * math.sqrt(2.0) * math.sqrt(1.0 - lam))
    return bool(e > 2.0 - 2.0 * lam)


def rate_opt_closed(t, r):
    """``(t - r - 1/2)/(2(t - r) - 1)``."""
    den = 2.0 * (t - r) - 1.0
    if not t > r + 0.5 or den <= 0:
        raise PreconditionError("t > r + 1/2", f"nonpositive denominator for t = {t}, r = {r}")
    return (t - r - 0.5) / den


def kappa_small_ball(t, r):
    """``(t - r - 1)/(2(t - r) - 1)``."""
    if not t > r + 1:
        raise PreconditionError("t > r + 1")
    return (t - r - 1.0) / (2.0 * (t - r) - 1.0)


def rate_large_data(beta, rho):
    """Return ``(stated, proof)`` bounds for regression with growing data.

    stated: ``min{1/(2(2 + 1/beta)), 2 beta/((2 beta + 1)(2 + rho))}``;
    proof:  ``min{1/(3(1 + 1/(2 beta))), 1/((1 + 1/(2 beta))(2 + rho))}``.
    """
    if not 0 < beta <= 1:
        raise PreconditionError("0 < beta <= 1")
    if not rho > 0:
        raise PreconditionError("rho > 0")
    stated = min(1.0 / (2.0 * (2.0 + 1.0 / beta)), 2.0 * beta / ((2.0 * beta + 1.0) * (2.0 + rho)))
    proof = min(1.0 / (3.0 * (1.0 + 1.0 / (2.0 * beta))), 1.0 / ((1.0 + 1.0 / (2.0 * beta)) * (2.0 + rho)))
    return stated, proof


def _elliptic_pre(alpha, d, r):
    if not r > 0:
        raise PreconditionError("r > 0")
    if not alpha > 1:
        raise PreconditionError("alpha > 1")
    if not alpha > r + d / 2.0 - 2.0:
        raise PreconditionError("alpha > r + d/2 - 2")


def _smoothing_factor(alpha, d, r):
    return min(alpha / (alpha + 2.0 + d / 2.0 - r), 1.0)


def rate_elliptic(alpha, d, r, rho):
    """``(alpha/(alpha + 2 + d/2 - r) ^ 1)(1/(2 + rho) ^ alpha/(2(alpha + 1 + d/(2r))))``."""
    _elliptic_pre(alpha, d, r)
    if not rho > 0:
        raise PreconditionError("rho > 0")
    return _smoothing_factor(alpha, d, r) * min(
        1.0 / (2.0 + rho), alpha / (2.0 * (alpha + 1.0 + d / (2.0 * r))))


def uniform_rho(nu):
    """Small-ball exponent ``1/(1/nu - 1)`` of a uniform prior with summability index ``nu``."""
    if not 0 < nu < 1:
        raise PreconditionError("0 < nu < 1")
    return 1.0 / (1.0 / nu - 1.0)


def uniform_small_ball_branch(nu):
    """``(1 - nu)/(2 - nu)``."""
    if not 0 < nu < 1:
        raise PreconditionError("0 < nu < 1")
    return (1.0 - nu) / (2.0 - nu)


def rate_uniform_prior(alpha, nu, d, r):
    """``(alpha/(alpha + 2 + d/2 - r) ^ 1)((1 - nu)/(2 - nu) ^ (alpha - r + 2)/(2 alpha + d - 2r + 4))``."""
    _elliptic_pre(alpha, d, r)
    return _smoothing_factor(alpha, d, r) * min(
        uniform_small_ball_branch(nu), (alpha - r + 2.0) / (2.0 * alpha + d - 2.0 * r + 4.0))


# -- Figure-style table ------------------------------------------------------------------------


@dataclass(frozen=True)
class Figure1Row:
    t: float
    kappa_cor: float
    kappa_opt: float
    kappa_smallball: float
    certificate: RateCertificate = field(repr=False, compare=False)

    @property
    def ordered(self):
        return self.kappa_cor <= self.kappa_smallball + 1e-3 <= self.kappa_opt


def figure1_table(r, t_grid, form="theorem"):
    """Rows ``(t, kappa_cor, kappa_opt, kappa_smallball)`` for each ``t > r + 1``."""
    rows = []
    for t in t_grid:
        if not t > r + 1:
            raise PreconditionError("t > r + 1", f"t = {t} gives no positive small-ball exponent")
        cert = rate_gaussian_case(t, r, form=form)
        rows.append(Figure1Row(float(t), cert.kappa, rate_opt_closed(t, r), kappa_small_ball(t, r), cert))
    return rows
