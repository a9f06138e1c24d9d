"""1D elliptic forward map, coefficient recovery, observations and stability diagnostics.

The forward problem is ``-(a p')' = f`` on ``[0, 1]`` with ``p(0) = p(1) = 0``,
discretized conservatively with harmonic-mean face coefficients.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dst
from scipy.linalg import solve_banded

from postcon.errors import DegeneratePressureError, InconsistencyError, PreconditionError
from postcon.norms import c1_norm, c2_norm, holder_norm, sup_norm
from postcon.spectral import ScaleSpec, SpectralField, sample_noise

MIN_NODES = 5


@dataclass(frozen=True)
class GridFunction:
    """Values on the uniform mesh ``x_i = i/m``, ``i = 0..m``."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size < MIN_NODES:
            raise ValueError(f"grid functions need m >= 4 (got {v.size} nodes)")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self):
        return self.values.size - 1

    @property
    def h(self):
        return 1.0 / self.m

    @property
    def x(self):
        return np.linspace(0.0, 1.0, self.m + 1)

    def __call__(self, points):
        """Piecewise-linear interpolation at ``points``."""
        return np.interp(points, self.x, self.values)

    def __sub__(self, other):
        _check_same_mesh(self, other)
        return GridFunction(self.values - other.values)

    def __add__(self, other):
        _check_same_mesh(self, other)
        return GridFunction(self.values + other.values)

    def __mul__(self, scalar):
        return GridFunction(self.values * float(scalar))

    __rmul__ = __mul__

    @classmethod
    def from_callable(cls, func, m):
        x = np.linspace(0.0, 1.0, m + 1)
        return cls(np.broadcast_to(np.asarray(func(x), dtype=float), x.shape))

    @classmethod
    def constant(cls, value, m):
        return cls(np.full(m + 1, float(value)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "value"])
            for xi, vi in zip(self.x, self.values):
                writer.writerow([repr(float(xi)), repr(float(vi))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = [r for r in csv.DictReader(fh)]
        x = np.array([float(r["x"]) for r in rows])
        m = x.size - 1
        if m < 1 or not np.allclose(x, np.linspace(0.0, 1.0, m + 1), atol=1e-12):
            raise ValueError("CSV grid must be the uniform mesh on [0, 1]")
        return cls(np.array([float(r["value"]) for r in rows]))


def _check_same_mesh(a, b):
    if a.values.size != b.values.size:
        raise ValueError(f"mismatched meshes: m = {a.m} vs m = {b.m}")


def _as_grid(g, m=None):
    if isinstance(g, GridFunction):
        return g
    if np.isscalar(g):
        if m is None:
            raise ValueError("scalar grid data needs a mesh size")
        return GridFunction.constant(g, m)
    return GridFunction(g)


def face_coefficients(a_values):
    """Harmonic means ``2 a_i a_{i+1} / (a_i + a_{i+1})`` on the cell faces."""
    a = np.asarray(a_values, dtype=float)
    return 2.0 * a[..., 1:] * a[..., :-1] / (a[..., 1:] + a[..., :-1])


# -- forward solver -----------------------------------------------------------


def solve_elliptic_1d(a, f):
    """Solve ``-(a p')' = f``, ``p(0) = p(1) = 0`` by conservative finite differences.

    Parameters
    ----------
    a : GridFunction
        Diffusion coefficient at the nodes; must be strictly positive.
    f : GridFunction or float
        Source term on the same mesh.

    Returns
    -------
    GridFunction
        Nodal pressure ``p`` with zero boundary values.
    """
    a = _as_grid(a)
    f = _as_grid(f, a.m)
    _check_same_mesh(a, f)
    if np.any(a.values <= 0):
        raise PreconditionError("a > a_min > 0", "coefficient must be strictly positive at every node")
    m, h = a.m, a.h
    af = face_coefficients(a.values)
    # rows 1..m-1 of the interior system, scaled by h**2
    ab = np.zeros((3, m - 1))
    ab[0, 1:] = -af[1:-1]
    ab[1, :] = af[:-1] + af[1:]
    ab[2, :-1] = -af[1:-1]
    p = np.zeros(m + 1)
    p[1:-1] = solve_banded((1, 1), ab, h * h * f.values[1:-1])
    return GridFunction(p)


def solve_elliptic_batch(a_values, f_values):
    """Batched version of :func:`solve_elliptic_1d` over the leading axis.

    ``a_values`` has shape ``(B, m+1)``; returns pressures of the same shape.
    Uses the Thomas algorithm, vectorized across the batch.
    """
    A = np.atleast_2d(np.asarray(a_values, dtype=float))
    if np.any(A <= 0):
        raise PreconditionError("a > a_min > 0", "coefficient must be strictly positive at every node")
    B, npts = A.shape
    m = npts - 1
    h = 1.0 / m
    F = np.broadcast_to(np.asarray(f_values, dtype=float), (npts,)) if np.ndim(f_values) <= 1 else f_values
    af = face_coefficients(A)
    lower = -af[:, 1:-1]
    diag = af[:, :-1] + af[:, 1:]
    upper = -af[:, 1:-1]
    rhs = np.broadcast_to(h * h * np.asarray(F)[..., 1:-1], (B, m - 1)).copy()
    n = m - 1
    cp = np.empty((B, n))
    dp = np.empty((B, n))
    cp[:, 0] = upper[:, 0] / diag[:, 0] if n > 1 else 0.0
    dp[:, 0] = rhs[:, 0] / diag[:, 0]
    for i in range(1, n):
        denom = diag[:, i] - lower[:, i - 1] * cp[:, i - 1]
        if i < n - 1:
            cp[:, i] = upper[:, i] / denom
        dp[:, i] = (rhs[:, i] - lower[:, i - 1] * dp[:, i - 1]) / denom
    p = np.zeros((B, npts))
    p[:, n] = dp[:, n - 1]
    for i in range(n - 2, -1, -1):
        p[:, i + 1] = dp[:, i] - cp[:, i] * p[:, i + 2]
    return p


# -- coefficient recovery ------------------------------------------------------


@dataclass(frozen=True)
class Recovery:
    """Recovered coefficient together with recovery diagnostics."""

    a: GridFunction
    x_star: float
    curvature: float
    below_guard: bool


def recover_coefficient_1d(p, f, a_min_guard=0.0, near_nodes=2):
    """Recover ``a`` from a Dirichlet pressure ``p`` and source ``f``.

    In 1D the flux ``a p'`` is an antiderivative of ``-f``. The constant is
    fixed at the unique zero ``x*`` of ``p'``, so that
    ``a(x) = (int_x^{x*} f) / p'(x)``. Flux and slope are formed on cell
    faces with the same quadrature as the forward solver. Within
    ``near_nodes`` nodes of ``x*`` the quotient is replaced by interpolation
    towards ``a(x*) = f(x*) / (-p''(x*))``.

    Raises
    ------
    DegeneratePressureError
        If ``p'`` has zero, two or more sign changes.
    """
    p = _as_grid(p)
    f = _as_grid(f, p.m)
    _check_same_mesh(p, f)
    if np.any(f.values[1:-1] <= 0):
        raise PreconditionError("f > f_min > 0", "source must be strictly positive")
    m, h, x = p.m, p.h, p.x
    slope = np.diff(p.values) / h  # faces j = 0..m-1 at x = (j + 1/2) h

    j = _single_sign_change(slope)
    x_star, curv = _critical_point(p.values, x, j)
    if curv >= 0:
        raise DegeneratePressureError("pressure is not concave at its critical point")

    # F_{k+1/2} = C - h * sum_{i=1..k} f_i, with F(x*) = 0 under linear interpolation
    xf = (np.arange(m) + 0.5) * h
    cum = np.concatenate([[0.0], np.cumsum(f.values[1:m])]) * h
    shape = -cum
    C = -np.interp(x_star, xf, shape)
    flux = C + shape

    far = np.abs(xf - x_star) > 0.5 * h
    tiny = far & (np.abs(slope) < 1e-12)
    if np.any(tiny):
        warnings.warn("pressure slope below 1e-12 away from the critical point; recovery ill-conditioned",
                      RuntimeWarning, stacklevel=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        a_face = flux / slope

    a = np.empty(m + 1)
    a[1:-1] = 0.5 * (a_face[:-1] + a_face[1:])
    a[0] = 1.5 * a_face[0] - 0.5 * a_face[1]
    a[-1] = 1.5 * a_face[-1] - 0.5 * a_face[-2]

    a_star = float(np.interp(x_star, x, f.values)) / (-curv)
    near = np.abs(x - x_star) < near_nodes * h
    left = np.flatnonzero((x < x_star) & ~near)
    right = np.flatnonzero((x > x_star) & ~near)
    anchors_x = [x_star]
    anchors_a = [a_star]
    if left.size:
        anchors_x.insert(0, x[left[-1]])
        anchors_a.insert(0, a[left[-1]])
    if right.size:
        anchors_x.append(x[right[0]])
        anchors_a.append(a[right[0]])
    a[near] = np.interp(x[near], anchors_x, anchors_a)

    below = bool(np.any(a < a_min_guard))
    if below:
        warnings.warn(f"recovered coefficient drops below the guard {a_min_guard}", RuntimeWarning, stacklevel=2)
    return Recovery(GridFunction(a), float(x_star), float(curv), below)


def _single_sign_change(slope):
    s = np.sign(slope)
    nz = np.flatnonzero(s != 0)
    if nz.size == 0:
        raise DegeneratePressureError("pressure slope vanishes identically")
    changes = nz[:-1][s[nz[:-1]] != s[nz[1:]]]
    if changes.size != 1:
        raise DegeneratePressureError(
            f"pressure slope changes sign {changes.size} times; expected exactly one interior critical point"
        )
    j = int(changes[0])
    if s[j] < 0:
        raise DegeneratePressureError("pressure slope changes from negative to positive")
    return j


def _critical_point(p, x, j):
    """Least-squares parabola through 5 nodes around the sign change; returns (x*, p'')."""
    m = p.size - 1
    centre = j + 1
    lo = min(max(centre - 2, 0), m - 4)
    idx = np.arange(lo, lo + 5)
    xs = x[idx] - x[centre]
    c2, c1, _ = np.polyfit(xs, p[idx], 2)
    if c2 == 0:
        return float(x[centre]), 0.0
    xs_star = -c1 / (2.0 * c2)
    # keep the estimate inside the bracketing faces
    h = x[1] - x[0]
    xs_star = float(np.clip(xs_star, -0.5 * h, 0.5 * h))
    return float(x[centre] + xs_star), float(2.0 * c2)


# -- stability diagnostics -------------------------------------------------------


def forward_stability_ratio(a1, a2, f, alpha=1.0):
    """``||p1 - p2||_{C^2} / ||a1 - a2||_{C^alpha}`` on the grid (0 when both vanish)."""
    a1, a2 = _as_grid(a1), _as_grid(a2)
    _check_same_mesh(a1, a2)
    f = _as_grid(f, a1.m)
    p1 = solve_elliptic_1d(a1, f)
    p2 = solve_elliptic_1d(a2, f)
    num = float(c2_norm(p1.values - p2.values, a1.h))
    den = float(holder_norm(a1.values - a2.values, a1.h, alpha))
    if den == 0.0:
        if num == 0.0:
            return 0.0
        raise InconsistencyError("identical coefficients produced different pressures")
    return num / den


def inverse_stability_ratio(a1, a2, f):
    """``||a1 - a2||_inf / (||a1||_{C^1} ||p1 - p2||_{C^2})`` on the grid."""
    a1, a2 = _as_grid(a1), _as_grid(a2)
    _check_same_mesh(a1, a2)
    f = _as_grid(f, a1.m)
    diff = float(sup_norm(a1.values - a2.values))
    if diff == 0.0:
        return 0.0
    p1 = solve_elliptic_1d(a1, f)
    p2 = solve_elliptic_1d(a2, f)
    dp = float(c2_norm(p1.values - p2.values, a1.h))
    if dp == 0.0:
        raise InconsistencyError("distinct coefficients produced identical pressures")
    return diff / (float(c1_norm(a1.values, a1.h)) * dp)


def inverse_stability_ratios_batch(a1_values, a2_values, f):
    """Vectorized :func:`inverse_stability_ratio` over paired rows."""
    A1 = np.atleast_2d(a1_values)
    A2 = np.atleast_2d(a2_values)
    h = 1.0 / (A1.shape[1] - 1)
    P1 = solve_elliptic_batch(A1, f)
    P2 = solve_elliptic_batch(A2, f)
    diff = sup_norm(A1 - A2)
    dp = c2_norm(P1 - P2, h)
    if np.any((dp == 0) & (diff > 0)):
        raise InconsistencyError("distinct coefficients produced identical pressures")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(diff == 0, 0.0, diff / (c1_norm(A1, h) * dp))
    return out


# -- observations -------------------------------------------------------------------


@dataclass(frozen=True)
class ObservationModel:
    """Small-noise model ``y = p + n**-0.5 xi`` or pointwise model ``y_i = p(x_i) + sigma zeta_i``."""

    kind: str
    n: int = 1
    scale: ScaleSpec | None = None
    design: tuple = ()
    sigma: float = 1.0
    trunc: int | None = None

    def __post_init__(self):
        if self.kind == "small_noise":
            if self.n < 1:
                raise ValueError("n must be >= 1")
            if self.scale is None:
                raise ValueError("small-noise model needs a ScaleSpec")
        elif self.kind == "pointwise":
            pts = np.asarray(self.design, dtype=float)
            if pts.size == 0:
                raise ValueError("pointwise model needs a nonempty design")
            if np.any(pts <= 0) or np.any(pts >= 1):
                raise ValueError("design points must lie strictly inside (0, 1)")
            if self.sigma < 0:
                raise ValueError("sigma must be nonnegative")
            object.__setattr__(self, "design", tuple(float(v) for v in pts))
        else:
            raise ValueError(f"unknown observation kind {self.kind!r}")

    @classmethod
    def small_noise(cls, n, scale, trunc=None):
        return cls("small_noise", n=int(n), scale=scale, trunc=trunc)

    @classmethod
    def pointwise(cls, design, sigma):
        return cls("pointwise", design=tuple(design), sigma=float(sigma), n=len(design))

    @classmethod
    def equidistant(cls, n, sigma):
        return cls.pointwise(np.arange(1, n + 1) / (n + 1.0), sigma)


@dataclass(frozen=True)
class Observation:
    """A data record produced by :func:`observe`."""

    model: ObservationModel
    values: np.ndarray = field(repr=False)

    @property
    def design(self):
        return np.asarray(self.model.design)


def sine_coefficients(g, trunc):
    """Coefficients of a grid function against ``sqrt(2) sin(k pi x)``, ``k = 1..trunc``.

    Trapezoid quadrature on the nodes (exact DST-I of the interior values).
    """
    g = _as_grid(g)
    if trunc > g.m - 1:
        raise ValueError(f"at most m - 1 = {g.m - 1} sine modes are resolved on this mesh")
    y = dst(g.values[1:-1], type=1)
    return g.h * y[:trunc] / math.sqrt(2.0)


def observe(p, model, rng):
    """Generate data from a pressure (or field) under an observation model."""
    if model.kind == "small_noise":
        trunc = model.trunc or model.scale.trunc
        if isinstance(p, SpectralField):
            base = p.coeffs[:trunc]
        else:
            base = sine_coefficients(p, trunc)
        noise = sample_noise(model.scale, trunc, rng).coeffs
        return Observation(model, base + noise / math.sqrt(model.n))
    p = _as_grid(p)
    pts = np.asarray(model.design)
    return Observation(model, p(pts) + model.sigma * rng.standard_normal(pts.size))


# -- design assumptions -----------------------------------------------------------


@dataclass(frozen=True)
class DesignReport:
    mode: str
    passed: bool
    worst: list
    detail: str


def design_check(points, K, mode="choi", levels=None):
    """Check a deterministic design against the covering assumptions.

    ``choi``: every open interval of length ``1/(K n)`` in ``(0, 1)`` must
    contain a design point. ``empirical``: ``F_n(b) - F_n(a) >= K (b - a)``
    for all dyadic pairs ``a < b`` up to level ``levels`` (default: the
    finest level whose cells hold about 4 points on average).
    """
    x = np.sort(np.asarray(points, dtype=float))
    n = x.size
    if n == 0:
        return DesignReport(mode, False, [], "empty design")
    if np.any(x <= 0) or np.any(x >= 1):
        raise ValueError("design points must lie in (0, 1)")
    if mode == "choi":
        width = 1.0 / (K * n)
        gaps = np.diff(x)
        bad = []
        if x[0] > width:
            bad.append((0.0, float(x[0]), float(x[0])))
        if 1.0 - x[-1] > width:
            bad.append((float(x[-1]), 1.0, float(1.0 - x[-1])))
        for i in np.flatnonzero(gaps >= width):
            bad.append((float(x[i]), float(x[i + 1]), float(gaps[i])))
        bad.sort(key=lambda r: -r[2])
        return DesignReport(mode, not bad, bad[:10],
                            f"max empty interval vs required width {width:.3g}")
    if mode == "empirical":
        if levels is None:
            levels = int(min(10, max(1, math.floor(math.log2(max(n / 4.0, 2.0))))))
        grid = np.arange(2**levels + 1) / 2**levels
        counts = np.searchsorted(x, grid, side="right") / n
        ia, ib = np.triu_indices(grid.size, k=1)
        deficit = K * (grid[ib] - grid[ia]) - (counts[ib] - counts[ia])
        order = np.argsort(-deficit)
        worst = [(float(grid[ia[i]]), float(grid[ib[i]]), float(deficit[i]))
                 for i in order[:10] if deficit[i] > 1e-12]
        return DesignReport(mode, not worst, worst, f"dyadic level {levels}")
    raise ValueError(f"unknown mode {mode!r}")
