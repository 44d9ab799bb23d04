"""Unit-rate Poisson processes on boxes and discrete inverse-CDF draws.

Every process is driven by one :class:`~exmeas.rng.RngKey`: the count comes
from the ``COUNT`` child stream and coordinate ``d`` of the ``m``-th point is
counter ``m`` of the ``COORD + d`` child stream.  The vectorised helpers take
arrays of key words so that many independent processes (one per latent
vertex, say) are drawn in a handful of numpy calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .rng import RngKey, derive, uniforms

COUNT = 0
COORD = 1

MAX_MEAN = 1e9
_INVERSION_LIMIT = 30.0

NO_ATOM = None


class ResourceLimitError(RuntimeError):
    """A simulation would exceed a configured resource cap."""


@dataclass(frozen=True)
class MarkedPoints:
    t: np.ndarray
    mark: np.ndarray

    def __len__(self):
        return len(self.t)


def _inversion_scalar(u: float, lam: float) -> int:
    p = math.exp(-lam)
    cum = p
    k = 0
    while u >= cum and k <= 1000:
        k += 1
        p *= lam / k
        cum += p
    return k


def _poisson_inversion(u: np.ndarray, lam: np.ndarray) -> np.ndarray:
    if u.size <= 4:
        return np.array([_inversion_scalar(a, b) for a, b in zip(u.tolist(), lam.tolist())], dtype=np.int64)
    k = np.zeros(u.shape, dtype=np.int64)
    p = np.exp(-lam)
    cum = p.copy()
    todo = u >= cum
    kk = 0
    while todo.any():
        kk += 1
        p = np.where(todo, p * lam / kk, p)
        cum = np.where(todo, cum + p, cum)
        k[todo] = kk
        todo &= u >= cum
        if kk > 1000:  # cumulative round-off near u ~ 1
            break
    return k


def _poisson_ptrs(words: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # Transformed rejection with squeeze (Hormann 1993); two uniforms per trial.
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2)
    out = np.zeros(lam.shape, dtype=np.int64)
    todo = np.ones(lam.shape, dtype=bool)
    trial = 0
    while todo.any():
        idx = np.flatnonzero(todo)
        U = uniforms(words[idx], np.full(idx.size, 2 * trial + 1, dtype=np.uint64)) - 0.5
        V = uniforms(words[idx], np.full(idx.size, 2 * trial + 2, dtype=np.uint64))
        us = 0.5 - np.abs(U)
        k = np.floor((2 * a[idx] / us + b[idx]) * U + lam[idx] + 0.43)
        accept = (us >= 0.07) & (V <= vr[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(V) + np.log(invalpha[idx]) - np.log(a[idx] / (us * us) + b[idx])
            rhs = -lam[idx] + k * loglam[idx] - gammaln(k + 1)
        ok = ~((k < 0) | ((us < 0.013) & (V > us)))
        accept |= ok & (lhs <= rhs)
        out[idx[accept]] = k[accept].astype(np.int64)
        todo[idx[accept]] = False
        trial += 1
    return out


def poisson_counts(words, means) -> np.ndarray:
    """One Poisson(mean) draw per stream, by inversion for means up to 30 and
    transformed rejection above."""
    words = np.atleast_1d(np.asarray(words, dtype=np.uint64))
    lam = np.broadcast_to(np.asarray(means, dtype=float), words.shape).copy()
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("Poisson means must be finite and nonnegative")
    out = np.zeros(words.shape, dtype=np.int64)
    small = (lam > 0) & (lam <= _INVERSION_LIMIT)
    if small.any():
        u = uniforms(words[small], np.zeros(int(small.sum()), dtype=np.uint64))
        out[small] = _poisson_inversion(u, lam[small])
    large = lam > _INVERSION_LIMIT
    if large.any():
        out[large] = _poisson_ptrs(words[large], lam[large])
    return out


def scatter(words, counts, extents: Sequence) -> tuple[np.ndarray, list[np.ndarray]]:
    """Uniform points for many streams at once.

    ``extents`` holds one entry per coordinate, either a scalar or an array
    with one side length per stream.  Returns the owning stream index of each
    point and the list of coordinate arrays.
    """
    words = np.atleast_1d(np.asarray(words, dtype=np.uint64))
    counts = np.asarray(counts, dtype=np.int64)
    owner = np.repeat(np.arange(words.size), counts)
    starts = np.cumsum(counts) - counts
    local = np.arange(owner.size, dtype=np.int64) - np.repeat(starts, counts)
    coords = []
    for d, ext in enumerate(extents):
        cw = derive(words, COORD + d, 0)
        u = uniforms(cw[owner], local.astype(np.uint64))
        ext = np.asarray(ext, dtype=float)
        coords.append(u * (ext[owner] if ext.ndim else ext))
    return owner, coords


def _check_mean(mean: float, cap: float = MAX_MEAN):
    if not np.isfinite(mean) or mean > cap:
        raise ResourceLimitError(f"expected point count {mean:.3g} exceeds the guard {cap:.3g}")


def sample_unit_pp(key: RngKey, s: float, T: float) -> MarkedPoints:
    """Unit-rate Poisson process on [0, s] x [0, T]."""
    if not (s > 0 and T > 0):
        raise ValueError("s and T must be positive")
    _check_mean(s * T)
    words = np.array([key.word], dtype=np.uint64)
    n = poisson_counts(derive(words, COUNT, 0), [s * T])
    _, (t, mark) = scatter(words, n, [s, T])
    return MarkedPoints(t, mark)


def sample_triple_pp(key: RngKey, s: float, T: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit-rate Poisson process on [0, s] x [0, s] x [0, T]."""
    if s <= 0 or T < 0:
        raise ValueError("s must be positive and T nonnegative")
    if T == 0:
        empty = np.empty(0)
        return empty, empty.copy(), empty.copy()
    _check_mean(s * s * T)
    words = np.array([key.word], dtype=np.uint64)
    n = poisson_counts(derive(words, COUNT, 0), [s * s * T])
    _, (a, b, c) = scatter(words, n, [s, s, T])
    return a, b, c


def inverse_cdf(weights: Sequence[float], u: float):
    """The unique ``r`` with ``cum(r-1) <= u < cum(r)``, or ``NO_ATOM`` when
    ``u`` is at or beyond the total weight.

    >>> inverse_cdf([0.5, 0.5], 0.25), inverse_cdf([0.3, 0.7], 1.5)
    (0, None)
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("negative weight")
    cum = np.cumsum(w)
    r = int(np.searchsorted(cum, u, side="right"))
    return NO_ATOM if r >= w.size else r


def inverse_cdf_rows(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise inverse CDF; ``cum`` is (n, K) cumulative weights. Returns -1
    for no atom."""
    r = (cum <= u[:, None]).sum(axis=1)
    return np.where(r >= cum.shape[1], -1, r)
