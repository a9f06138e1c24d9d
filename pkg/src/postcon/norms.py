"""Discrete norms on uniform grids and ball-distance functions.

Grid norms act on the last axis, so a batch of grid functions of shape
``(B, m+1)`` yields ``B`` norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from postcon.spectral import ScaleSpec, norm_t

ALL_PAIRS_MAX_POINTS = 128
SUBSAMPLED_PAIRS = 10_000
_CHUNK_ELEMS = 4_000_000


@lru_cache(maxsize=32)
def _pair_index(npts):
    if npts <= ALL_PAIRS_MAX_POINTS:
        i, j = np.triu_indices(npts, k=1)
    else:
        # fixed stream: the subsampled pair set is a property of the grid, not of a run
        rng = np.random.default_rng(npts)
        i = rng.integers(0, npts, SUBSAMPLED_PAIRS)
        j = rng.integers(0, npts, SUBSAMPLED_PAIRS)
        keep = i != j
        i, j = np.minimum(i[keep], j[keep]), np.maximum(i[keep], j[keep])
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def holder_seminorm(values, h, beta):
    """Discrete ``beta``-Holder seminorm ``max |g_i - g_j| / |x_i - x_j|**beta``.

    All pairs are used up to 128 grid points; beyond that a fixed set of
    10**4 random pairs, which can only underestimate the true seminorm.
    """
    g = np.asarray(values, dtype=float)
    i, j = _pair_index(g.shape[-1])
    denom = (np.abs(j - i) * h) ** beta
    if g.ndim == 1:
        return float(np.max(np.abs(g[j] - g[i]) / denom))
    flat = g.reshape(-1, g.shape[-1])
    out = np.empty(flat.shape[0])
    step = max(1, _CHUNK_ELEMS // i.size)
    for start in range(0, flat.shape[0], step):
        block = flat[start:start + step]
        out[start:start + step] = np.max(np.abs(block[:, j] - block[:, i]) / denom, axis=1)
    return out.reshape(g.shape[:-1])


def derivative(values, h, order=1):
    """Finite-difference derivative: centered inside, second-order one-sided at the ends."""
    g = np.asarray(values, dtype=float)
    if order == 0:
        return g
    if order == 1:
        return np.gradient(g, h, axis=-1, edge_order=2)
    if order == 2:
        return second_difference(g, h)
    return derivative(second_difference(g, h), h, order - 2)


def second_difference(values, h):
    g = np.asarray(values, dtype=float)
    if g.shape[-1] < 4:
        raise ValueError("second differences need at least 4 grid points")
    out = np.empty_like(g)
    out[..., 1:-1] = (g[..., 2:] - 2.0 * g[..., 1:-1] + g[..., :-2]) / h**2
    out[..., 0] = (2.0 * g[..., 0] - 5.0 * g[..., 1] + 4.0 * g[..., 2] - g[..., 3]) / h**2
    out[..., -1] = (2.0 * g[..., -1] - 5.0 * g[..., -2] + 4.0 * g[..., -3] - g[..., -4]) / h**2
    return out


def sup_norm(values):
    return np.max(np.abs(np.asarray(values, dtype=float)), axis=-1)


def holder_norm(values, h, alpha):
    """Discrete ``C^alpha`` norm.

    With ``alpha = k + beta`` (``k`` integer, ``0 <= beta < 1``) this is
    ``sum_{j<=k} max|g^(j)|`` plus the ``beta``-seminorm of ``g^(k)`` when
    ``beta > 0``.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    k = int(math.floor(alpha))
    beta = alpha - k
    total = 0.0
    for j in range(k + 1):
        total = total + sup_norm(derivative(values, h, j))
    if beta > 1e-12:
        total = total + holder_seminorm(derivative(values, h, k), h, beta)
    return total


def c2_norm(values, h):
    """``max|g| + max|g'| + max|g''|`` with centered differences, one-sided at the ends."""
    return holder_norm(values, h, 2.0)


def c1_norm(values, h):
    return holder_norm(values, h, 1.0)


@dataclass(frozen=True)
class HilbertNorm:
    """Distance in ``||.||_t`` of a scale, on coefficient vectors."""

    t: float
    scale: ScaleSpec

    def __call__(self, x):
        return norm_t(x, self.t, self.scale)


@dataclass(frozen=True)
class GridNorm:
    """Distance on grid values: ``sup``, ``holder`` (index ``alpha``) or ``c2``."""

    kind: str = "sup"
    h: float = 1.0
    alpha: float = 0.0

    def __call__(self, values):
        if self.kind == "sup":
            return sup_norm(values)
        if self.kind == "holder":
            return holder_norm(values, self.h, self.alpha)
        if self.kind == "c2":
            return c2_norm(values, self.h)
        raise ValueError(f"unknown grid norm {self.kind!r}")
