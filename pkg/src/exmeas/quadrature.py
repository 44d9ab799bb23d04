"""Adaptive integration over half-lines and quadrants with divergence verdicts.

Finite intervals use a vectorised adaptive Gauss-Kronrod (7/15) scheme.  An
unbounded range ``[a, inf)`` is covered by the panel schedule
``[a, a+1], [a+1, a+2], [a+2, a+4], ...``; each panel is integrated
adaptively and the sequence of panel contributions decides the verdict:

* ``Converged`` once the domain reaches ``a + 2**8`` and the last two panel
  contributions are below ``tol/4`` and ``tol/2``; a geometric tail estimate
  is added to value and error.
* ``Diverging`` when the partial integral exceeds ``divergence_threshold``
  with the last three panels each above ``tol``, or when (from ``a + 2**12``
  on) six consecutive panel contributions above ``10*tol`` never decrease.
* ``Inconclusive`` otherwise (panel budget exhausted or unresolved panels).

The second divergence rule catches logarithmic growth, which never reaches
the threshold in floating point.  A function constant up to ``2**12`` and
zero beyond is indistinguishable from a divergent one under this schedule.

Everything is batched: a "row" is one integrand out of a family (for example
``y -> phi(x_i, y)`` for a vector of outer points ``x_i``), so nested
integrals cost one integrand call per adaptive round rather than per point.
An integrand may return ``+inf`` (treated as a diverging inner integral) or
``nan`` (inconclusive inner integral); these propagate to the row verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

DIVERGENCE_THRESHOLD = 1e6
TOL_1D = 1e-6
TOL_2D = 1e-4
MIN_DOUBLINGS = 8
DIVERGENCE_DOUBLINGS = 12
MAX_DOUBLINGS = 60

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
XK = np.concatenate([-_XGK[:7], _XGK[::-1]])
WK = np.concatenate([_WGK[:7], _WGK[::-1]])
WG = np.concatenate([_WG[:3], _WG[::-1]])  # on XK[1::2]


class Convergence(str, Enum):
    CONVERGED = "Converged"
    DIVERGING = "Diverging"
    INCONCLUSIVE = "Inconclusive"


class NegativeIntegrandError(ValueError):
    pass


@dataclass(frozen=True)
class IntegralEstimate:
    """``value`` is the integral (or, when diverging, the last partial
    integral); ``error`` is infinite unless converged."""

    value: float
    error: float
    verdict: Convergence
    evaluations: int = 0
    note: str = ""

    @property
    def converged(self) -> bool:
        return self.verdict is Convergence.CONVERGED

    @property
    def diverging(self) -> bool:
        return self.verdict is Convergence.DIVERGING

    def as_value(self) -> float:
        """``value`` if converged, ``inf`` if diverging, ``nan`` otherwise."""
        if self.converged:
            return self.value
        return math.inf if self.diverging else math.nan


_OK, _INF, _NAN = 0, 1, 2


def verdict_mask(verdicts: np.ndarray, v: Convergence) -> np.ndarray:
    return np.array([x is v for x in verdicts], dtype=bool)


def _set_verdict(verdicts: np.ndarray, where, v: Convergence):
    # element-wise, so numpy never coerces the enum to a fixed-width string
    idx = np.flatnonzero(where) if np.asarray(where).dtype == bool else np.atleast_1d(where)
    for i in idx:
        verdicts[i] = v


@dataclass
class _Rows:
    value: np.ndarray
    error: np.ndarray
    state: np.ndarray  # _OK / _INF / _NAN
    unresolved: np.ndarray
    evals: int = 0


def _fsum_rows(parts: list[np.ndarray], n: int) -> np.ndarray:
    if not parts:
        return np.zeros(n)
    stack = np.vstack(parts)
    return np.array([math.fsum(stack[:, i]) for i in range(n)])


def gk_rows(func: Callable, a: float, b: float, tol: float, nrows: int, *, rel: float = 1e-12,
            max_intervals: int = 1 << 15, max_rounds: int = 64, max_cells: int = 1 << 23) -> _Rows:
    """Adaptive 7/15 Gauss-Kronrod over [a, b] for ``nrows`` integrands at once.

    ``func(nodes)`` returns values of shape ``(nrows, len(nodes))`` or a pair
    ``(values, errors)`` where ``errors`` bound the error of each value (used
    when the integrand is itself an integral).  Intervals are bisected until
    the summed error estimate of every row is below ``max(tol, rel*|value|)``.
    Refinement stops (leaving rows unresolved) once a round would evaluate
    more than ``max_cells`` row-node pairs.
    """
    out = _Rows(np.zeros(nrows), np.zeros(nrows), np.zeros(nrows, dtype=np.int8), np.zeros(nrows, dtype=bool))
    length = b - a
    if length <= 0 or nrows == 0:
        return out
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    acc_val: list[np.ndarray] = []
    acc_err: list[np.ndarray] = []
    for rnd in range(max_rounds):
        m = lo.size
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        nodes = (c[:, None] + h[:, None] * XK[None, :]).ravel()
        res = func(nodes)
        inner_err = None
        if isinstance(res, tuple):
            res, inner_err = res
        vals = np.asarray(res, dtype=float).reshape(nrows, m, 15)
        out.evals += nodes.size * nrows
        if np.any(vals < 0):
            raise NegativeIntegrandError("integrand is negative at a probe point")
        finite = np.isfinite(vals)
        if not finite.all():
            bad_inf = np.isposinf(vals).any(axis=(1, 2))
            bad_nan = np.isnan(vals).any(axis=(1, 2))
            out.state[bad_inf & (out.state == _OK)] = _INF
            out.state[bad_nan & (out.state == _OK)] = _NAN
            vals = np.where(finite, vals, 0.0)
        K = (vals @ WK) * h
        G = (vals[..., 1::2] @ WG) * h
        err = np.abs(K - G)
        if inner_err is not None:
            ie = np.asarray(inner_err, dtype=float).reshape(nrows, m, 15)
            ie = np.where(np.isfinite(ie), ie, 0.0)
            err = err + (ie @ WK) * h
        err[out.state != _OK] = 0.0
        tot_val = _fsum_rows(acc_val + [K.sum(axis=1)], nrows)
        tot_err = _fsum_rows(acc_err + [err.sum(axis=1)], nrows)
        limit = np.maximum(tol, rel * np.abs(tot_val))
        if np.all(tot_err <= limit):
            acc_val.append(K.sum(axis=1))
            acc_err.append(err.sum(axis=1))
            break
        width = hi - lo
        split = err.max(axis=0) > limit.min() * width / length
        split &= width > 1e-13 * np.maximum(1.0, np.abs(c))
        nxt = 2 * int(split.sum())
        if not split.any() or nxt > max_intervals or nxt * 15 * nrows > max_cells or rnd == max_rounds - 1:
            acc_val.append(K.sum(axis=1))
            acc_err.append(err.sum(axis=1))
            out.unresolved |= tot_err > limit
            break
        keep = ~split
        acc_val.append(K[:, keep].sum(axis=1))
        acc_err.append(err[:, keep].sum(axis=1))
        lo, hi = np.concatenate([lo[split], c[split]]), np.concatenate([c[split], hi[split]])
    out.value = _fsum_rows(acc_val, nrows)
    out.error = _fsum_rows(acc_err, nrows)
    return out


@dataclass
class _HalfLine:
    value: np.ndarray
    error: np.ndarray
    verdict: np.ndarray  # object array of Convergence
    evals: int
    notes: list = field(default_factory=list)
    partials: list = field(default_factory=list)  # per row: partial integrals over [start, start + 2^m]


def halfline_rows(func: Callable, nrows: int, tol: float = TOL_1D, *, start: float = 0.0,
                  divergence_threshold: float = DIVERGENCE_THRESHOLD,
                  max_doublings: int = MAX_DOUBLINGS) -> _HalfLine:
    """Integrate ``nrows`` integrands over ``[start, inf)``.

    ``func(nodes, rows)`` evaluates the integrands listed in ``rows`` at
    ``nodes`` and returns an array of shape ``(len(rows), len(nodes))`` (or a
    ``(values, errors)`` pair).
    """
    partial = [[] for _ in range(nrows)]
    qerr = np.zeros(nrows)
    incs = np.zeros((max_doublings + 1, nrows))
    verdict = np.full(nrows, None, dtype=object)
    value = np.zeros(nrows)
    error = np.full(nrows, math.inf)
    notes = [""] * nrows
    rough = np.zeros(nrows, dtype=bool)
    evals = 0
    active = np.ones(nrows, dtype=bool)
    for m in range(max_doublings + 1):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        a, b = (0.0, 1.0) if m == 0 else (2.0 ** (m - 1), 2.0 ** m)
        res = gk_rows(lambda nodes: func(start + nodes, rows), a, b, tol * 2.0 ** -(m + 2), rows.size)
        evals += res.evals
        for j, r in enumerate(rows):
            partial[r].append(res.value[j])
        qerr[rows] += res.error
        incs[m, rows] = res.value
        rough[rows] |= res.unresolved
        inf_rows = rows[res.state == _INF]
        nan_rows = rows[res.state == _NAN]
        _set_verdict(verdict, inf_rows, Convergence.DIVERGING)
        value[inf_rows] = math.inf
        for r in inf_rows:
            notes[r] = "integrand infinite at a probe point"
        _set_verdict(verdict, nan_rows, Convergence.INCONCLUSIVE)
        value[nan_rows] = math.nan
        for r in nan_rows:
            notes[r] = "integrand undetermined at a probe point"
        active[inf_rows] = False
        active[nan_rows] = False
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        tot = np.array([math.fsum(partial[r]) for r in rows])
        # divergence: threshold rule
        if m >= 2:
            last3 = incs[m - 2:m + 1, rows]
            d1 = (tot > divergence_threshold) & np.all(last3 > tol, axis=0)
        else:
            d1 = np.zeros(rows.size, dtype=bool)
        # divergence: non-decaying panel contributions
        if m >= DIVERGENCE_DOUBLINGS:
            last6 = incs[m - 5:m + 1, rows]
            d2 = np.all(last6 > 10 * tol, axis=0) & np.all(last6[1:] >= 0.999 * last6[:-1], axis=0)
        else:
            d2 = np.zeros(rows.size, dtype=bool)
        div = d1 | d2
        for j in np.flatnonzero(div):
            r = rows[j]
            verdict[r] = Convergence.DIVERGING
            value[r] = tot[j]
            notes[r] = (f"partial integral {tot[j]:.6g} over [{start:g}, {start + 2.0 ** m:g}] exceeds the "
                        f"threshold" if d1[j] else
                        f"panel contributions stopped decaying by {start + 2.0 ** m:g} (partial {tot[j]:.6g})")
            active[r] = False
        if m >= MIN_DOUBLINGS:
            cur = incs[m, rows]
            prev = incs[m - 1, rows]
            conv = (~div) & (cur <= tol / 4) & (prev <= tol / 2)
            for j in np.flatnonzero(conv):
                r = rows[j]
                q = min(cur[j] / prev[j], 0.9) if prev[j] > 0 else 0.0
                tail = cur[j] * q / (1 - q)
                value[r] = tot[j] + tail
                error[r] = qerr[r] + max(tail, cur[j])
                if rough[r] or error[r] > tol:
                    verdict[r] = Convergence.INCONCLUSIVE
                    notes[r] = f"panel quadrature unresolved (error {error[r]:.3g})"
                else:
                    verdict[r] = Convergence.CONVERGED
                active[r] = False
    for r in np.flatnonzero(active):
        verdict[r] = Convergence.INCONCLUSIVE
        value[r] = math.fsum(partial[r])
        notes[r] = f"no verdict after {max_doublings} doublings"
    error[~verdict_mask(verdict, Convergence.CONVERGED)] = math.inf
    return _HalfLine(value, error, verdict, evals, notes, [np.cumsum(p) for p in partial])


def _range_rows(func: Callable, nrows: int, lo: float, hi: float, tol: float):
    """Rows over [lo, hi] (``hi`` may be infinite) as ``(value, error, verdict)``
    arrays, with ``inf``/``nan`` values for diverging/inconclusive rows."""
    if math.isinf(hi):
        res = halfline_rows(func, nrows, tol, start=lo)
        vals = np.where(verdict_mask(res.verdict, Convergence.CONVERGED), res.value,
                        np.where(verdict_mask(res.verdict, Convergence.DIVERGING), math.inf, math.nan))
        return vals.astype(float), res.error, res.verdict, res.evals, res.notes
    rows = np.arange(nrows)
    res = gk_rows(lambda nodes: func(nodes, rows), lo, hi, tol, nrows)
    verdict = np.full(nrows, None, dtype=object)
    _set_verdict(verdict, np.arange(nrows), Convergence.CONVERGED)
    vals = res.value.copy()
    _set_verdict(verdict, res.unresolved, Convergence.INCONCLUSIVE)
    vals[res.unresolved] = math.nan
    _set_verdict(verdict, res.state == _INF, Convergence.DIVERGING)
    vals[res.state == _INF] = math.inf
    _set_verdict(verdict, res.state == _NAN, Convergence.INCONCLUSIVE)
    vals[res.state == _NAN] = math.nan
    err = np.where(verdict_mask(verdict, Convergence.CONVERGED), res.error, math.inf)
    notes = ["adaptive subdivision did not reach the tolerance" if u else "" for u in res.unresolved]
    for i in np.flatnonzero(res.state == _INF):
        notes[i] = "integrand infinite at a probe point"
    return vals, err, verdict, res.evals, notes


def _estimate_from_rows(value, error, verdict, evals, notes) -> IntegralEstimate:
    v = verdict[0]
    val = float(value[0])
    if v is Convergence.DIVERGING and not math.isfinite(val):
        val = math.inf
    return IntegralEstimate(val, float(error[0]), v, int(evals), notes[0])


def integrate_range(phi: Callable, lo: float = 0.0, hi: float = math.inf, tol: float = TOL_1D) -> IntegralEstimate:
    """Integral of a nonnegative vectorised ``phi`` over ``[lo, hi]``."""
    def func(nodes, rows):
        return np.broadcast_to(np.asarray(phi(nodes), dtype=float), nodes.shape)[None, :]
    if math.isinf(hi):
        res = halfline_rows(func, 1, tol, start=lo)
        return _estimate_from_rows(res.value, res.error, res.verdict, res.evals, res.notes)
    vals, err, verdict, evals, notes = _range_rows(func, 1, lo, hi, tol)
    return _estimate_from_rows(vals, err, verdict, evals, notes)


def integrate_halfline(phi: Callable, tol: float = TOL_1D) -> IntegralEstimate:
    """Integral of a nonnegative vectorised ``phi`` over ``[0, inf)``.

    >>> integrate_halfline(lambda x: np.exp(-x)).value  # doctest: +ELLIPSIS
    1.0000000...
    """
    return integrate_range(phi, 0.0, math.inf, tol)


def inner_marginal(phi: Callable, xs: np.ndarray, lo: float = 0.0, hi: float = math.inf,
                   tol: float = TOL_1D):
    """``F(x) = integral of phi(x, y) dy over [lo, hi]`` at every ``x`` in ``xs``.

    Returns ``(values, errors, verdicts)``; diverging entries are ``inf``
    and inconclusive ones ``nan``.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    def func(nodes, rows):
        return phi(xs[rows][:, None], nodes[None, :])
    vals, err, verdict, _, _ = _range_rows(func, xs.size, lo, hi, tol)
    return vals, err, verdict


def integrate_region(phi: Callable, x_range=(0.0, math.inf), y_range=(0.0, math.inf),
                     tol: float = TOL_2D) -> IntegralEstimate:
    """Iterated integral of a nonnegative ``phi(x, y)`` over a product of
    ranges; the inner (``y``) integral runs at ``tol/10`` and its error
    estimates are propagated through the outer rule."""
    inner_tol = tol / 10
    witness = []

    def outer(nodes, rows):
        vals, err, verdict = inner_marginal(phi, nodes, y_range[0], y_range[1], inner_tol)
        if np.any(np.isposinf(vals)) and not witness:
            witness.append(float(nodes[np.isposinf(vals)][0]))
        return vals[None, :], err[None, :]

    if math.isinf(x_range[1]):
        res = halfline_rows(outer, 1, tol, start=x_range[0])
        est = _estimate_from_rows(res.value, res.error, res.verdict, res.evals, res.notes)
    else:
        est = _estimate_from_rows(*_range_rows(outer, 1, x_range[0], x_range[1], tol))
    if est.diverging and witness:
        est = IntegralEstimate(est.value, est.error, est.verdict, est.evaluations,
                               f"inner integral diverges at x = {witness[0]:.6g}")
    return est


def integrate_plane(phi: Callable, tol: float = TOL_2D) -> IntegralEstimate:
    """Integral of a nonnegative ``phi(x, y)`` over the quadrant."""
    return integrate_region(phi, tol=tol)


def z_average(f: Callable, x: np.ndarray, y: np.ndarray, tol: float = 1e-7, block: int = 64) -> np.ndarray:
    """``integral_0^1 f(x, y, z) dz`` for broadcast arrays ``x``, ``y``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    xf, yf = x.ravel(), y.ravel()
    out = np.empty(xf.size)
    # rows with jumps at different z would otherwise share one ever-growing panel set
    for a in range(0, xf.size, block):
        xb, yb = xf[a:a + block, None], yf[a:a + block, None]
        res = gk_rows(lambda nodes: f(xb, yb, nodes[None, :]), 0.0, 1.0, tol, xb.shape[0])
        v = res.value.copy()
        v[res.state == _INF] = math.inf
        v[(res.state == _NAN) | res.unresolved] = math.nan
        out[a:a + block] = v
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# superlevel sets


class Memo:
    """Caches a vectorised function of one variable by argument value."""

    def __init__(self, fn: Callable):
        self.fn = fn
        self.cache: dict[float, float] = {}

    def __call__(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        flat = xs.ravel()
        missing = np.array(sorted({v for v in flat.tolist() if v not in self.cache}), dtype=float)
        if missing.size:
            vals = np.asarray(self.fn(missing), dtype=float).ravel()
            self.cache.update(zip(missing.tolist(), vals.tolist()))
        return np.array([self.cache[v] for v in flat.tolist()]).reshape(xs.shape)

    @property
    def diverging_probes(self) -> int:
        return sum(1 for v in self.cache.values() if v == math.inf)


@dataclass(frozen=True)
class SuperlevelSet:
    """Located superlevel set ``{x >= 0: phi(x) > cutoff}``.

    ``lower`` counts only points certainly above the cutoff, ``upper`` adds
    points where ``phi`` could not be determined; ``intervals`` are the
    certainly-above pieces.
    """

    cutoff: float
    estimate: IntegralEstimate
    lower: float
    upper: float
    intervals: tuple[tuple[float, float], ...]
    probes: int
    diverging_probes: int

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.intervals:
            return np.zeros(x.shape, dtype=bool)
        starts = np.array([a for a, _ in self.intervals])
        ends = np.array([b for _, b in self.intervals])
        i = np.searchsorted(starts, x, side="right") - 1
        ok = i >= 0
        return ok & (x <= ends[np.clip(i, 0, None)])


_BELOW, _ABOVE, _UNKNOWN = 0, 1, 2


def _states(vals: np.ndarray, cutoff: float, margin: float) -> np.ndarray:
    s = np.where(vals > cutoff + margin, _ABOVE, _BELOW)
    return np.where(np.isnan(vals), _UNKNOWN, s)


def superlevel_set(phi: Callable, cutoff: float, tol: float = TOL_1D, *, value_tol: float = TOL_1D,
                   grid: int = 32, max_doublings: int = 40,
                   divergence_threshold: float = DIVERGENCE_THRESHOLD) -> SuperlevelSet:
    """Locate ``{x >= 0: phi(x) > cutoff}`` on the doubling panel schedule.

    Each panel is sampled on a uniform grid of ``grid`` cells; a cell whose
    end states differ holds one transition, found by bisection.  Cells with
    equal end states are taken as uniform, so features narrower than a cell
    can be missed.  ``phi`` may return ``inf`` (counts as above) or ``nan``
    (undetermined).  Values within ``value_tol*max(1, cutoff)`` of the cutoff
    count as not above.
    """
    memo = phi if isinstance(phi, Memo) else Memo(phi)
    margin = max(1e-9, value_tol) * max(1.0, abs(cutoff))
    above_total = []
    unknown_total = []
    bis_err = 0.0
    pieces: list[tuple[float, float]] = []
    panel_above = []
    verdict = None
    note = ""
    m = 0
    for m in range(max_doublings + 1):
        lo, hi = (0.0, 1.0) if m == 0 else (2.0 ** (m - 1), 2.0 ** m)
        pts = lo + (hi - lo) * np.arange(grid + 1) / grid
        st = _states(memo(pts), cutoff, margin)
        left, right = pts[:-1], pts[1:]
        sl, sr = st[:-1], st[1:]
        cut = right.copy()
        trans = np.flatnonzero(sl != sr)
        if trans.size:
            wtol = tol * 2.0 ** -(m + 4) / trans.size
            a, b = left[trans].copy(), right[trans].copy()
            sa = sl[trans]
            while np.any(b - a > wtol):
                mid = 0.5 * (a + b)
                smid = _states(memo(mid), cutoff, margin)
                same = smid == sa
                a = np.where(same, mid, a)
                b = np.where(same, b, mid)
                if np.all(b - a <= np.maximum(wtol, 1e-15 * b)):
                    break
            cut[trans] = 0.5 * (a + b)
            bis_err += float(np.sum(b - a))
        # [left, cut] carries sl, [cut, right] carries sr
        seg = [(left, cut, sl), (cut, right, sr)]
        above = 0.0
        unknown = 0.0
        for s0, s1, s in seg:
            length = s1 - s0
            above += float(np.sum(length[s == _ABOVE]))
            unknown += float(np.sum(length[s == _UNKNOWN]))
            for x0, x1 in zip(s0[s == _ABOVE].tolist(), s1[s == _ABOVE].tolist()):
                if x1 > x0:
                    pieces.append((x0, x1))
        above_total.append(above)
        unknown_total.append(unknown)
        panel_above.append(above / (hi - lo))
        if m >= MIN_DOUBLINGS and all(above_total[k] == 0 and unknown_total[k] == 0 for k in (m, m - 1, m - 2)):
            verdict = Convergence.CONVERGED
            break
        if math.fsum(above_total) > divergence_threshold or (
                m >= DIVERGENCE_DOUBLINGS and all(p >= 0.5 for p in panel_above[-4:])):
            verdict = Convergence.DIVERGING
            note = f"superlevel set keeps filling panels up to {hi:g}"
            break
    lower = math.fsum(above_total)
    upper = lower + math.fsum(unknown_total)
    if verdict is None:
        verdict = Convergence.INCONCLUSIVE
        note = f"no verdict after {max_doublings} doublings"
    err = (upper - lower) + bis_err
    if verdict is Convergence.CONVERGED and err > tol:
        verdict = Convergence.INCONCLUSIVE
        note = f"superlevel measure only bracketed in [{lower:.6g}, {upper:.6g}]"
    if verdict is not Convergence.CONVERGED:
        err = math.inf
    merged: list[list[float]] = []
    for x0, x1 in sorted(pieces):
        if merged and x0 <= merged[-1][1] + 1e-15:
            merged[-1][1] = max(merged[-1][1], x1)
        else:
            merged.append([x0, x1])
    est = IntegralEstimate(lower, err, verdict, len(memo.cache), note)
    return SuperlevelSet(cutoff, est, lower, upper, tuple((a, b) for a, b in merged),
                         len(memo.cache), memo.diverging_probes)


def measure_of_superlevel(phi: Callable, c: float, tol: float = TOL_1D) -> IntegralEstimate:
    """Lebesgue measure of ``{x >= 0: phi(x) > c}``.

    >>> measure_of_superlevel(lambda x: 2.0 * ((x >= 0) & (x <= 3)), 1.0).value  # doctest: +ELLIPSIS
    3.0000...
    """
    return superlevel_set(phi, c, tol).estimate


def escalating_superlevels(phi: Callable, cutoffs: Sequence[float] = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6),
                           tol: float = TOL_1D, value_tol: float = TOL_1D) -> list[SuperlevelSet]:
    """Superlevel sets at increasing cutoffs, sharing one evaluation cache;
    used to test whether ``{phi = inf}`` has positive measure."""
    memo = phi if isinstance(phi, Memo) else Memo(phi)
    return [superlevel_set(memo, c, tol, value_tol=value_tol) for c in cutoffs]
