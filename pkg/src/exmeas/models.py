"""Model descriptions: the Kallenberg function tuple and multigraphexes.

A multigraphex ``(W, S, I)`` is held as three objects:

* an edge kernel giving the multiplicity law ``W(x, y, .)`` of a vertex pair
  (Poisson with a mean function, an explicit mass table, or level sets of an
  integer-valued ``f``);
* a star intensity ``S(v, k)`` stored as a finite prefix ``k <= kmax`` plus a
  declared bound on the integrated tail ``int sum_{k > kmax} S(v, k) dv``;
* a dust sequence ``I(0..K)`` plus a declared bound on ``sum_{k > K} I(k)``.

Tails are treated as "no atom"; their bounds feed the truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .dsl import ZeroFunction, as_function
from .poisson import _poisson_inversion

F_VARS = ("x", "y", "z")
G_VARS = ("x", "y")
H_VARS = ("x",)
W_VARS = ("x", "y", "k")
S_VARS = ("v", "k")

ROW_SUM_TOL = 1e-9
INTEGER_TOL = 1e-9
MAX_POISSON_MEAN = 700.0


def _is_zero(fn) -> bool:
    return bool(getattr(fn, "is_zero", False))


# ---------------------------------------------------------------------------
# Kallenberg representation


@dataclass(frozen=True)
class KallenbergRep:
    """The function tuple ``(f, g, g', h, h', l, l', beta, gamma)``.

    Slots accept DSL strings, parsed trees, numbers, callables or ``None``
    (the zero function).  ``f`` takes ``(x, y, z)``, ``g`` and ``gp`` take
    ``(x, y)``, and ``h``, ``hp``, ``l``, ``lp`` take ``x``.
    """

    f: object = None
    g: object = None
    gp: object = None
    h: object = None
    hp: object = None
    l: object = None
    lp: object = None
    beta: float = 0.0
    gamma: float = 0.0
    f_symmetric: bool = False

    def __post_init__(self):
        for name, variables in (("f", F_VARS), ("g", G_VARS), ("gp", G_VARS), ("h", H_VARS),
                                ("hp", H_VARS), ("l", H_VARS), ("lp", H_VARS)):
            object.__setattr__(self, name, as_function(getattr(self, name), variables))
        for name in ("beta", "gamma"):
            v = float(getattr(self, name))
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, v)

    def slots(self) -> dict:
        return {"f": self.f, "g": self.g, "gp": self.gp, "h": self.h, "hp": self.hp, "l": self.l, "lp": self.lp}

    @property
    def is_zero(self) -> bool:
        return all(_is_zero(fn) for fn in self.slots().values()) and self.beta == 0 and self.gamma == 0

    @property
    def is_atomic(self) -> bool:
        return _is_zero(self.h) and _is_zero(self.hp) and self.beta == 0 and self.gamma == 0


# ---------------------------------------------------------------------------
# level sets of integer-valued functions


def _as_integers(vals: np.ndarray, what: str) -> np.ndarray:
    vals = np.asarray(vals, dtype=float)
    r = np.rint(vals)
    if np.any(np.abs(vals - r) > INTEGER_TOL) or np.any(r < 0):
        bad = vals[(np.abs(vals - r) > INTEGER_TOL) | (r < 0)].ravel()[0]
        raise ValueError(f"{what} must take nonnegative integer values (got {bad!r})")
    return r.astype(np.int64)


def _cell_levels(fn: Callable[[np.ndarray, np.ndarray], np.ndarray], rows: np.ndarray, lo: float, hi: float,
                 cells: int, what: str, iterations: int = 48):
    """Piecewise-constant description of ``t -> fn(row, t)`` on ``[lo, hi]``.

    The interval is cut into ``cells`` equal cells; a cell whose end values
    differ is split at the transition found by bisection.  Returns values and
    lengths of the ``2*cells`` pieces for every row.
    """
    ts = lo + (hi - lo) * np.arange(cells + 1) / cells
    V = _as_integers(fn(rows[:, None], ts[None, :]), what)
    left, right = V[:, :-1], V[:, 1:]
    cut = np.broadcast_to(ts[1:], left.shape).copy()
    ri, ci = np.nonzero(left != right)
    if ri.size:
        a, b = ts[ci].copy(), ts[ci + 1].copy()
        va = left[ri, ci]
        for _ in range(iterations):
            mid = 0.5 * (a + b)
            same = _as_integers(fn(rows[ri], mid), what) == va
            a = np.where(same, mid, a)
            b = np.where(same, b, mid)
        cut[ri, ci] = 0.5 * (a + b)
    starts = np.broadcast_to(ts[:-1], left.shape)
    ends = np.broadcast_to(ts[1:], left.shape)
    values = np.concatenate([left, right], axis=1)
    lengths = np.concatenate([cut - starts, ends - cut], axis=1)
    return values, lengths


def _tabulate(values: np.ndarray, lengths: np.ndarray, kmin: int = 0) -> np.ndarray:
    kmax = int(values.max()) if values.size else 0
    table = np.zeros((values.shape[0], kmax + 1))
    for k in range(kmin, kmax + 1):
        table[:, k] = np.where(values == k, lengths, 0.0).sum(axis=1)
    return table


class LevelSetDivergence(ValueError):
    """A level-set measure on the half-line is infinite."""

    def __init__(self, rows: np.ndarray, message: str):
        super().__init__(message)
        self.rows = rows


def halfline_level_table(fn, rows: np.ndarray, what: str, *, cells: int = 32,
                         min_doublings: int = 8, max_doublings: int = 40) -> np.ndarray:
    """``table[i, k] = lambda{t >= 0: fn(rows[i], t) = k}`` for ``k >= 1``
    (column 0 is left at zero: the measure of the zero level is not needed
    and usually infinite).  Raises :class:`LevelSetDivergence` when some row
    still has nonzero values at ``2**max_doublings``."""
    rows = np.asarray(rows, dtype=float).ravel()
    pieces_v, pieces_l = [], []
    quiet = 0
    for m in range(max_doublings + 1):
        lo, hi = (0.0, 1.0) if m == 0 else (2.0 ** (m - 1), 2.0 ** m)
        v, ln = _cell_levels(fn, rows, lo, hi, cells, what)
        nonzero = (v != 0) & (ln > 0)
        if nonzero.any():
            keep = nonzero.any(axis=0)
            pieces_v.append(v[:, keep])
            pieces_l.append(ln[:, keep])
            quiet = 0
        else:
            quiet += 1
        if m >= min_doublings and quiet >= 3:
            break
    else:
        last = nonzero.any(axis=1)
        raise LevelSetDivergence(np.flatnonzero(last), f"level sets of {what} keep growing up to 2^{max_doublings}")
    if not pieces_v:
        return np.zeros((rows.size, 1))
    table = _tabulate(np.concatenate(pieces_v, axis=1), np.concatenate(pieces_l, axis=1), kmin=1)
    table[:, 0] = 0.0
    return table


# ---------------------------------------------------------------------------
# edge kernels W(x, y, k)


class EdgeKernel:
    """Multiplicity law of a vertex pair.  Subclasses provide ``table``
    (masses for ``k = 0..K`` per point) or override the methods directly."""

    is_zero = False
    description = "kernel"

    def table(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def pmf(self, x, y, k: int) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        t = self.table(x.ravel(), y.ravel())
        col = t[:, k] if k < t.shape[1] else np.zeros(t.shape[0])
        return col.reshape(x.shape)

    def edge_prob(self, x, y) -> np.ndarray:
        """``1 - W(x, y, 0)``."""
        return np.clip(1.0 - self.pmf(x, y, 0), 0.0, 1.0)

    def mean(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        t = self.table(x.ravel(), y.ravel())
        return (t @ np.arange(t.shape[1])).reshape(x.shape)

    def draw(self, x, y, u) -> np.ndarray:
        """Half-open inverse CDF of ``W(x, y, .)`` at ``u``; rounding excess
        beyond the last cumulative weight gives 0."""
        t = self.table(np.asarray(x, dtype=float).ravel(), np.asarray(y, dtype=float).ravel())
        cum = np.cumsum(t, axis=1)
        r = (cum <= np.asarray(u, dtype=float).ravel()[:, None]).sum(axis=1)
        return np.where(r >= t.shape[1], 0, r).astype(np.int64)

    def row_sum(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return self.table(x.ravel(), y.ravel()).sum(axis=1).reshape(x.shape)


class ZeroKernel(EdgeKernel):
    """``W(x, y, 0) = 1``: no edges."""

    is_zero = True
    description = "zero"

    def table(self, x, y):
        n = np.broadcast(np.asarray(x), np.asarray(y)).size
        return np.ones((n, 1))

    def edge_prob(self, x, y):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))

    def mean(self, x, y):
        return self.edge_prob(x, y)

    def draw(self, x, y, u):
        return np.zeros(np.size(u), dtype=np.int64)


class PoissonKernel(EdgeKernel):
    """``W(x, y, .)`` is Poisson with mean ``w(x, y)``."""

    def __init__(self, mean):
        self.w = as_function(mean, G_VARS)
        self.is_zero = _is_zero(self.w)
        self.description = f"poisson_pmf(mean={getattr(self.w, 'source', self.w)!s})"

    def _w(self, x, y):
        w = np.asarray(self.w(x, y), dtype=float)
        if np.any(w < 0) or np.any(w > MAX_POISSON_MEAN):
            raise ValueError(f"Poisson mean must lie in [0, {MAX_POISSON_MEAN:g}]")
        return w

    def pmf(self, x, y, k: int):
        w = self._w(x, y)
        with np.errstate(divide="ignore"):
            return np.where(w > 0, np.exp(-w + k * np.log(np.where(w > 0, w, 1.0)) - gammaln(k + 1)),
                            1.0 if k == 0 else 0.0)

    def edge_prob(self, x, y):
        return -np.expm1(-self._w(x, y))

    def mean(self, x, y):
        return self._w(x, y)

    def table(self, x, y):
        w = self._w(x, y).ravel()
        kmax = int(np.max(w + 12 * np.sqrt(w) + 30)) if w.size else 0
        k = np.arange(kmax + 1)
        with np.errstate(divide="ignore"):
            logw = np.log(np.where(w > 0, w, 1.0))
        t = np.exp(-w[:, None] + k[None, :] * logw[:, None] - gammaln(k + 1)[None, :])
        t[w == 0] = 0.0
        t[w == 0, 0] = 1.0
        return t

    def draw(self, x, y, u):
        w = self._w(x, y).ravel()
        return _poisson_inversion(np.asarray(u, dtype=float).ravel(), w)


class PmfKernel(EdgeKernel):
    """Explicit masses ``W(x, y, k)`` for ``1 <= k <= kmax`` from a function
    of ``(x, y, k)``; the zero slot is ``1 - sum`` and must stay nonnegative."""

    def __init__(self, masses, kmax: int):
        self.masses = as_function(masses, W_VARS)
        self.kmax = int(kmax)
        if self.kmax < 1:
            raise ValueError("kmax must be at least 1")
        self.is_zero = _is_zero(self.masses)
        self.description = f"pmf(masses={getattr(self.masses, 'source', self.masses)!s}, kmax={self.kmax})"

    def table(self, x, y):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        k = np.arange(1, self.kmax + 1, dtype=float)
        m = np.asarray(self.masses(x[:, None], y[:, None], k[None, :]), dtype=float)
        if np.any(m < 0):
            raise ValueError("W(x, y, k) must be nonnegative")
        w0 = 1.0 - m.sum(axis=1)
        if np.any(w0 < -ROW_SUM_TOL):
            raise ValueError(f"W(x, y, k) for k >= 1 sums to {1 - w0.min():.12g} > 1 at some (x, y)")
        return np.concatenate([np.clip(w0, 0.0, None)[:, None], m], axis=1)


def bernoulli_kernel(p) -> PmfKernel:
    """Simple-graph kernel: an edge with probability ``p(x, y)``."""
    p = as_function(p, G_VARS)
    kern = PmfKernel(lambda x, y, k: p(x, y) * (k == 1), 1)
    kern.is_zero = _is_zero(p)
    kern.description = f"bernoulli(p={getattr(p, 'source', p)!s})"
    return kern


class LevelSetKernel(EdgeKernel):
    """``W(x, y, k) = lambda{z in [0, 1]: f(x, y, z) = k}`` for an
    integer-valued ``f``."""

    def __init__(self, f, cells: int = 256):
        self.f = as_function(f, F_VARS)
        self.cells = cells
        self.is_zero = _is_zero(self.f)
        self.description = f"level_sets(f={getattr(self.f, 'source', self.f)!s})"

    def table(self, x, y):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        rows = np.arange(x.size)
        def fn(r, z):
            return self.f(x[np.asarray(r, dtype=np.int64)], y[np.asarray(r, dtype=np.int64)], z)
        v, ln = _cell_levels(fn, rows.astype(float), 0.0, 1.0, self.cells, "f")
        return _tabulate(v, ln)


# ---------------------------------------------------------------------------
# star intensity and dust sequence


class StarIntensity:
    """``S(v, k)`` for ``0 <= k <= kmax`` from a function of ``(v, k)``.

    ``S(v, 0)`` is the no-star slot: marks falling there produce no atom.
    ``tail_bound`` bounds the integrated tail beyond ``kmax``.
    """

    def __init__(self, fn=None, kmax: int = 16, tail_bound: float = 0.0):
        self.fn = as_function(fn, S_VARS)
        self.kmax = int(kmax)
        self.tail_bound = float(tail_bound)
        if self.tail_bound < 0:
            raise ValueError("tail bound must be nonnegative")
        self.is_zero = _is_zero(self.fn)
        self.description = (f"{getattr(self.fn, 'source', self.fn)!s} (k <= {self.kmax})"
                            if not self.is_zero else "zero")

    def table(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        if self.is_zero:
            return np.zeros((v.size, 1))
        k = np.arange(self.kmax + 1, dtype=float)
        t = np.asarray(self.fn(v[:, None], k[None, :]), dtype=float)
        t = np.broadcast_to(t, (v.size, k.size)).copy()
        if np.any(t < 0):
            raise ValueError("S(v, k) must be nonnegative")
        return t

    def atom_mass(self, v) -> np.ndarray:
        """``sum_{k >= 1} S(v, k)``."""
        return self.table(v)[:, 1:].sum(axis=1)

    def mean(self, v) -> np.ndarray:
        t = self.table(v)
        return t @ np.arange(t.shape[1])


class LevelSetStar(StarIntensity):
    """``S(x, k) = lambda{y >= 0: g(x, y) = k}`` for ``k >= 1`` and
    ``S(x, 0) = 0``."""

    def __init__(self, g):
        self.fn = as_function(g, G_VARS)
        self.g = self.fn
        self.kmax = 0
        self.tail_bound = 0.0
        self.is_zero = _is_zero(self.fn)
        self.description = f"level_sets(g={getattr(self.fn, 'source', self.fn)!s})"
        self._cache: dict[float, np.ndarray] = {}

    def table(self, v):
        v = np.asarray(v, dtype=float).ravel()
        if self.is_zero:
            return np.zeros((v.size, 1))
        missing = np.array(sorted({a for a in v.tolist() if a not in self._cache}))
        if missing.size:
            t = halfline_level_table(self.fn, missing, "g")
            for a, row in zip(missing.tolist(), t):
                self._cache[a] = row
        rows = [self._cache[a] for a in v.tolist()]
        width = max((r.size for r in rows), default=1)
        out = np.zeros((v.size, width))
        for i, r in enumerate(rows):
            out[i, :r.size] = r
        return out


@dataclass(frozen=True)
class DustSequence:
    """``I(0), ..., I(K)`` plus a bound on ``sum_{k > K} I(k)``."""

    values: tuple[float, ...] = ()
    tail_bound: float = 0.0

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise ValueError("I(k) must be finite and nonnegative")
        if self.tail_bound < 0:
            raise ValueError("tail bound must be nonnegative")
        object.__setattr__(self, "values", vals)

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values[1:])

    @property
    def total(self) -> float:
        return math.fsum(self.values)

    @property
    def atom_mass(self) -> float:
        return math.fsum(self.values[1:])

    @property
    def mean(self) -> float:
        return math.fsum(k * v for k, v in enumerate(self.values))


# ---------------------------------------------------------------------------
# multigraphex


@dataclass(frozen=True)
class Multigraphex:
    """The triple ``(W, S, I)``.

    ``W`` may be an :class:`EdgeKernel` or ``None``; ``S`` a
    :class:`StarIntensity`, a function of ``(v, k)`` or ``None``; ``I`` a
    :class:`DustSequence` or a list of values.  With ``validate`` the
    constructor probes symmetry and row sums of ``W`` at random points.
    """

    W: object = None
    S: object = None
    I: object = None
    validate: bool = True

    def __post_init__(self):
        W = ZeroKernel() if self.W is None else self.W
        if not isinstance(W, EdgeKernel):
            raise TypeError("W must be an EdgeKernel")
        S = self.S if isinstance(self.S, StarIntensity) else StarIntensity(self.S)
        I = self.I if isinstance(self.I, DustSequence) else DustSequence(tuple(self.I or ()))
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "I", I)
        if self.validate and not W.is_zero:
            check_kernel(W)

    @property
    def is_zero(self) -> bool:
        return self.W.is_zero and self.S.is_zero and self.I.is_zero


def _probe_points(n: int, seed: int = 20240607):
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.uniform(0, 2, n // 2), rng.exponential(5.0, n - n // 2)])
    y = np.concatenate([rng.uniform(0, 2, n // 2), rng.exponential(5.0, n - n // 2)])
    return x, y


def check_kernel(W: EdgeKernel, n: int = 200, tol: float = ROW_SUM_TOL):
    """Probe symmetry and unit row sums of ``W`` at ``n`` random points."""
    x, y = _probe_points(n)
    t1, t2 = W.table(x, y), W.table(y, x)
    width = max(t1.shape[1], t2.shape[1])
    t1 = np.pad(t1, ((0, 0), (0, width - t1.shape[1])))
    t2 = np.pad(t2, ((0, 0), (0, width - t2.shape[1])))
    if np.max(np.abs(t1 - t2)) > tol:
        i = int(np.argmax(np.abs(t1 - t2).max(axis=1)))
        raise ValueError(f"W is not symmetric: W({x[i]:.6g}, {y[i]:.6g}, .) differs from W({y[i]:.6g}, {x[i]:.6g}, .)")
    err = np.abs(t1.sum(axis=1) - 1.0)
    if err.max() > tol:
        raise ValueError(f"W(x, y, .) sums to {t1.sum(axis=1)[int(np.argmax(err))]:.12g} at some probe")


def kallenberg_to_multigraphex(f=None, g=None, l=None, *, probes: int = 200) -> Multigraphex:
    """Multigraphex of an integer-valued atomic representation with
    ``g' = g``, ``l' = l`` and symmetric ``f``, through level sets:
    ``W(x, y, k) = lambda{z: f(x, y, z) = k}``, ``S(x, k) = lambda{y: g(x, y) = k}``
    and ``I(k) = lambda{y: l(y) = k}``.

    >>> mg = kallenberg_to_multigraphex(f="2*ind(z,0,0.3)")
    >>> [round(float(mg.W.pmf(1.0, 2.0, k)), 9) for k in range(3)]
    [0.7, 0.0, 0.3]
    """
    f = as_function(f, F_VARS)
    g = as_function(g, G_VARS)
    l = as_function(l, H_VARS)
    rng = np.random.default_rng(7)
    pts = np.concatenate([rng.uniform(0, 3, probes), rng.exponential(10.0, probes)])
    if not _is_zero(f):
        _as_integers(f(pts[:probes], pts[probes:], rng.uniform(0, 1, probes)), "f")
    if not _is_zero(g):
        _as_integers(g(pts[:probes], pts[probes:]), "g")
    if not _is_zero(l):
        _as_integers(l(pts), "l")
    W = ZeroKernel() if _is_zero(f) else LevelSetKernel(f)
    S = StarIntensity(None) if _is_zero(g) else LevelSetStar(g)
    if _is_zero(l):
        I = DustSequence(())
    else:
        try:
            t = halfline_level_table(lambda r, y: l(y), np.zeros(1), "l")
        except LevelSetDivergence as exc:
            raise LevelSetDivergence(exc.rows, "I is not summable: the level sets of l have infinite measure") from exc
        I = DustSequence(tuple(t[0].tolist()))
    return Multigraphex(W, S, I, validate=False)
