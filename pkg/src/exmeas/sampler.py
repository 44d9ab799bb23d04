"""Window samplers for the Kallenberg representation and for multigraphexes.

Both samplers simulate the latent vertex process ``{(tau_j, theta_j)}`` on
``[0, s] x [0, T]`` where ``T`` is the mark cap.  Random streams are keyed by
structure, so a vertex pair's edge uniform depends only on the unordered
pair and a vertex's star process only on the vertex index:

====================  ==============================================
stream                key path
====================  ==============================================
vertex process        ``(VERTEX, 0)``
edge uniform {i, j}   ``(EDGE, 0)``, then ``(0, min)``, ``(1, max)``
star process of j     ``(STAR, 0)``, then ``(0, j)``
dust process          ``(DUST, 0)``
====================  ==============================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import SQRT2, AdjacencyMeasureWindow, LineMass
from .models import KallenbergRep, Multigraphex
from .parallel import pmap
from .poisson import COUNT, ResourceLimitError, poisson_counts, sample_triple_pp, sample_unit_pp, scatter
from .quadrature import Convergence, IntegralEstimate
from .rng import RngKey, derive, uniforms

VERTEX, EDGE, STAR, DUST = 1, 2, 3, 4

STAR_CHUNK = 512

_CONDITION_HINTS = {
    "vertex": "the mark cap alone is too large for the point budget",
    "edge": "conditions (iv)-(vi) (edge part) may fail; run the certifier",
    "star": "conditions (ii)/(iii) (star part) may fail; run the certifier",
    "dust": "condition (i) (dust part) may fail; run the certifier",
}


class CapExceeded(ResourceLimitError):
    """A sampling resource cap was hit; ``part`` names the offending
    component."""

    def __init__(self, part: str, amount: float, cap: int, what: str):
        self.part = part
        super().__init__(f"{part} part needs about {amount:.3g} {what}, above the cap {cap}; "
                         f"{_CONDITION_HINTS[part]}")


@dataclass(frozen=True)
class TruncationConfig:
    """Mark cap ``T`` and resource caps.  ``max_points`` bounds simulated
    latent points, ``max_atoms`` bounds emitted atoms (and vertex pairs)."""

    mark_cap: float
    max_points: int = 5_000_000
    max_atoms: int = 5_000_000

    def __post_init__(self):
        if not (self.mark_cap > 0 and math.isfinite(self.mark_cap)):
            raise ValueError("mark cap T must be finite and positive")
        if self.max_points < 1 or self.max_atoms < 1:
            raise ValueError("resource caps must be positive")


class _Budget:
    def __init__(self, tc: TruncationConfig):
        self.tc = tc
        self.points = 0

    def expect_points(self, part: str, mean: float):
        # a mean beyond the cap is refused before sampling
        if self.points + mean > self.tc.max_points:
            raise CapExceeded(part, self.points + mean, self.tc.max_points, "latent points")

    def add_points(self, part: str, n: int):
        self.points += int(n)
        if self.points > self.tc.max_points:
            raise CapExceeded(part, self.points, self.tc.max_points, "latent points")

    def check_atoms(self, part: str, n: int):
        if n > self.tc.max_atoms:
            raise CapExceeded(part, n, self.tc.max_atoms, "atoms or vertex pairs")


class _Collector:
    def __init__(self):
        self.xs, self.ys, self.ws = [], [], []
        self.parts: dict[str, list] = {}

    def add(self, part: str, x, y, w):
        w = np.asarray(w)
        keep = w > 0
        if not keep.any():
            self.parts.setdefault(part, [])
            return
        self.xs.append(np.asarray(x, dtype=float)[keep])
        self.ys.append(np.asarray(y, dtype=float)[keep])
        self.ws.append(w[keep])
        self.parts.setdefault(part, []).extend(w[keep].tolist())

    def arrays(self, dtype):
        if not self.xs:
            return np.empty(0), np.empty(0), np.empty(0, dtype=dtype)
        return np.concatenate(self.xs), np.concatenate(self.ys), np.concatenate(self.ws).astype(dtype)

    def part_masses(self) -> dict:
        return {k: math.fsum(v) for k, v in sorted(self.parts.items())}


def _vertices(key: RngKey, s: float, T: float, budget: _Budget):
    budget.expect_points("vertex", s * T)
    pts = sample_unit_pp(key.child(VERTEX), s, T)
    budget.add_points("vertex", len(pts))
    return pts.t, pts.mark


def pair_uniforms(key: RngKey, i, j) -> np.ndarray:
    """Uniform attached to the unordered pair ``{i, j}`` (so symmetric in
    its arguments)."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    w = derive(derive(np.uint64(key.child(EDGE).word), 0, lo), 1, hi)
    return uniforms(w, np.zeros(w.shape, dtype=np.uint64))


def _star_processes(key: RngKey, idx: np.ndarray, s: float, extents: np.ndarray):
    """Marked star processes of vertices ``idx`` on ``[0, s] x [0, extent_j]``.

    Returns the owner (position in ``idx``), sigma and chi of every point."""
    if idx.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0), np.empty(0)
    words = derive(np.uint64(key.child(STAR).word), 0, idx)
    counts = poisson_counts(derive(words, COUNT, 0), s * extents)
    owner, (sigma, chi) = scatter(words, counts, [s, extents])
    return owner, sigma, chi


def _chunked_stars(key: RngKey, n: int, s: float, extents: np.ndarray, budget: _Budget, workers=None):
    budget.expect_points("star", float(s * np.sum(extents)))
    chunks = [np.arange(a, min(a + STAR_CHUNK, n)) for a in range(0, n, STAR_CHUNK)]
    results = pmap(lambda c: _star_processes(key, c, s, extents[c]), chunks, workers)
    owner = np.concatenate([c[o] for c, (o, _, _) in zip(chunks, results)]) if results else np.empty(0, np.int64)
    sigma = np.concatenate([r[1] for r in results]) if results else np.empty(0)
    chi = np.concatenate([r[2] for r in results]) if results else np.empty(0)
    budget.add_points("star", owner.size)
    return owner, sigma, chi


def sample_kallenberg(rep: KallenbergRep, s: float, tc: TruncationConfig, key: RngKey,
                      workers: Optional[int] = None) -> AdjacencyMeasureWindow:
    """Sample the restriction to ``[0, s]^2`` of the measure generated by the
    function tuple, with all latent marks capped at ``T``.

    Edge atoms run over all ordered vertex pairs including ``i = j``; atoms
    carry real weights ``f``, ``g``, ``g'``, ``l``, ``l'``.
    """
    if not s > 0:
        raise ValueError("window size must be positive")
    T = tc.mark_cap
    budget = _Budget(tc)
    col = _Collector()
    lines: list[LineMass] = []
    need_vertices = not (rep.f.is_zero and rep.g.is_zero and rep.gp.is_zero and rep.h.is_zero and rep.hp.is_zero)
    if need_vertices:
        tau, theta = _vertices(key, s, T, budget)
        n = tau.size
        if not rep.f.is_zero and n:
            budget.check_atoms("edge", n * n)
            i, j = np.divmod(np.arange(n * n), n)
            u = pair_uniforms(key, i, j)
            w = np.asarray(rep.f(theta[i], theta[j], u), dtype=float)
            off = i != j
            col.add("edge", tau[i[off]], tau[j[off]], w[off])
            col.add("loop", tau[i[~off]], tau[j[~off]], w[~off])
        if not (rep.g.is_zero and rep.gp.is_zero) and n:
            owner, sigma, chi = _chunked_stars(key, n, s, np.full(n, T), budget, workers)
            budget.check_atoms("star", 2 * owner.size)
            if not rep.g.is_zero:
                col.add("star", tau[owner], sigma, rep.g(theta[owner], chi))
            if not rep.gp.is_zero:
                col.add("star_prime", sigma, tau[owner], rep.gp(theta[owner], chi))
        for fn, orient in ((rep.h, "row"), (rep.hp, "column")):
            if not fn.is_zero and n:
                mass = np.asarray(fn(theta), dtype=float) * s
                lines.extend(LineMass(float(c), orient, float(m)) for c, m in zip(tau, mass) if m > 0)
    if not (rep.l.is_zero and rep.lp.is_zero):
        budget.expect_points("dust", s * s * T)
        rho, rhop, eta = sample_triple_pp(key.child(DUST), s, T)
        budget.add_points("dust", rho.size)
        budget.check_atoms("dust", 2 * rho.size)
        if not rep.l.is_zero:
            col.add("dust", rho, rhop, rep.l(eta))
        if not rep.lp.is_zero:
            col.add("dust_prime", rhop, rho, rep.lp(eta))
    xs, ys, ws = col.arrays(float)
    budget.check_atoms("edge" if "edge" in col.parts else "star", xs.size)
    lines.sort(key=lambda l: (l.orientation, l.coordinate))
    return AdjacencyMeasureWindow(s, xs, ys, ws, diag_mass=rep.beta * s * SQRT2, plane_mass=rep.gamma * s * s,
                                  line_masses=tuple(lines), part_masses=col.part_masses())


def _row_inverse_cdf(table: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(table, axis=1)[rows]
    r = (cum <= u[:, None]).sum(axis=1)
    return np.where(r >= table.shape[1], 0, r)


def sample_multigraphex(mg: Multigraphex, s: float, tc: TruncationConfig, key: RngKey,
                        workers: Optional[int] = None) -> AdjacencyMeasureWindow:
    """Sample the adjacency measure generated by a multigraphex on ``[0, s]^2``.

    Vertex marks are capped at ``T``; star marks of vertex ``j`` are drawn on
    ``[0, sum_l S(v_j, l)]`` and dust marks on ``[0, sum_l I(l)]``, both read
    through the half-open inverse CDF.  Every off-diagonal atom is emitted in
    both orientations, so the output is exactly symmetric.
    """
    if not s > 0:
        raise ValueError("window size must be positive")
    T = tc.mark_cap
    budget = _Budget(tc)
    col = _Collector()
    if not (mg.W.is_zero and mg.S.is_zero):
        theta, v = _vertices(key, s, T, budget)
        n = theta.size
        if not mg.W.is_zero and n:
            budget.check_atoms("edge", n * (n + 1) // 2)
            i, j = np.triu_indices(n)
            zeta = mg.W.draw(v[i], v[j], pair_uniforms(key, i, j))
            off = i != j
            col.add("edge", np.concatenate([theta[i[off]], theta[j[off]]]),
                    np.concatenate([theta[j[off]], theta[i[off]]]), np.tile(zeta[off], 2))
            col.add("loop", theta[i[~off]], theta[j[~off]], zeta[~off])
        if not mg.S.is_zero and n:
            table = mg.S.table(v)
            totals = table.sum(axis=1)
            owner, sigma, chi = _chunked_stars(key, n, s, totals, budget, workers)
            r = _row_inverse_cdf(table, owner, chi)
            budget.check_atoms("star", 2 * int(np.count_nonzero(r)))
            col.add("star", np.concatenate([theta[owner], sigma]), np.concatenate([sigma, theta[owner]]),
                    np.tile(r, 2))
    if not mg.I.is_zero:
        total = mg.I.total
        budget.expect_points("dust", s * s * total)
        eta, etap, etapp = sample_triple_pp(key.child(DUST), s, total)
        budget.add_points("dust", eta.size)
        r = _row_inverse_cdf(np.array([mg.I.values]), np.zeros(eta.size, dtype=np.int64), etapp)
        budget.check_atoms("dust", 2 * int(np.count_nonzero(r)))
        col.add("dust", np.concatenate([eta, etap]), np.concatenate([etap, eta]), np.tile(r, 2))
    xs, ys, ws = col.arrays(np.int64)
    return AdjacencyMeasureWindow(s, xs, ys, ws, part_masses=col.part_masses(), symmetric=True)


def sample(model: Union[KallenbergRep, Multigraphex], s: float, tc: TruncationConfig, key: RngKey,
           workers: Optional[int] = None) -> AdjacencyMeasureWindow:
    if isinstance(model, Multigraphex):
        return sample_multigraphex(model, s, tc, key, workers)
    if isinstance(model, KallenbergRep):
        return sample_kallenberg(model, s, tc, key, workers)
    raise TypeError(f"cannot sample {type(model).__name__}")


# ---------------------------------------------------------------------------
# truncation error


@dataclass(frozen=True)
class TruncationError:
    """Expected number of atoms in ``[0, s]^2`` lost to the mark cap, per
    part.  Weights are capped at one (``phi ^ 1``) in the general mode so
    the figure stays finite exactly when the lost part is a.s. finite."""

    estimate: IntegralEstimate
    parts: dict

    @property
    def value(self) -> float:
        return self.estimate.value

    @property
    def error(self) -> float:
        return self.estimate.error

    @property
    def verdict(self) -> Convergence:
        return self.estimate.verdict


def _combine(parts: dict[str, IntegralEstimate]) -> IntegralEstimate:
    ests = list(parts.values())
    if not ests:
        return IntegralEstimate(0.0, 0.0, Convergence.CONVERGED)
    for verdict in (Convergence.DIVERGING, Convergence.INCONCLUSIVE):
        bad = [k for k, e in parts.items() if e.verdict is verdict]
        if bad:
            value = math.inf if verdict is Convergence.DIVERGING else math.nan
            return IntegralEstimate(value, math.inf, verdict, sum(e.evaluations for e in ests),
                                    f"{', '.join(bad)}: " + "; ".join(parts[k].note for k in bad if parts[k].note))
    return IntegralEstimate(math.fsum(e.value for e in ests), math.fsum(e.error for e in ests),
                            Convergence.CONVERGED, sum(e.evaluations for e in ests))


def _scaled(e: IntegralEstimate, c: float) -> IntegralEstimate:
    return IntegralEstimate(e.value * c, e.error * c, e.verdict, e.evaluations, e.note)


def _outside_square(phi, T: float, tol: float) -> IntegralEstimate:
    from .quadrature import integrate_region
    a = integrate_region(phi, (T, math.inf), (0.0, math.inf), tol)
    b = integrate_region(phi, (0.0, T), (T, math.inf), tol)
    return _combine({"x > T": a, "y > T": b})


def truncation_error(model: Union[KallenbergRep, Multigraphex], s: float, T: float,
                     tol: float = 1e-8) -> TruncationError:
    """Expected atoms in ``[0, s]^2`` lost by capping marks at ``T``.

    Multigraphex: graph part ``s^2 int int_{max(x, y) > T} (1 - W(x, y, 0))``
    plus loops, star part ``2 s^2 int_{v > T} sum_{k >= 1} S(v, k)`` and the
    declared tail bounds.  General mode: the same with capped weights.
    """
    from . import finiteness as fin
    from .quadrature import integrate_range

    parts: dict[str, IntegralEstimate] = {}
    s2 = s * s
    if isinstance(model, Multigraphex):
        W = model.W
        if not W.is_zero:
            parts["graph"] = _scaled(_outside_square(W.edge_prob, T, tol), s2)
            parts["loops"] = _scaled(integrate_range(lambda x: W.edge_prob(x, x), T, math.inf, tol), s)
        if not model.S.is_zero:
            star = integrate_range(lambda v: model.S.atom_mass(v), T, math.inf, tol)
            parts["star"] = _scaled(star, 2 * s2)
            if model.S.tail_bound:
                parts["star_tail"] = IntegralEstimate(2 * s2 * model.S.tail_bound, 0.0, Convergence.CONVERGED)
        if model.I.tail_bound:
            parts["dust"] = IntegralEstimate(2 * s2 * model.I.tail_bound, 0.0, Convergence.CONVERGED)
    elif isinstance(model, KallenbergRep):
        rep = model
        if not rep.f.is_zero:
            f3 = fin.f_hat3(rep.f)
            parts["graph"] = _scaled(_outside_square(f3, T, tol), s2)
            parts["loops"] = _scaled(integrate_range(lambda x: f3(x, x), T, math.inf, tol), s)
        for name, g in (("star", rep.g), ("star_prime", rep.gp)):
            if not g.is_zero:
                gh = fin.hat(g)
                parts[name] = _scaled(_outside_square(gh, T, tol), s2)
        for name, fn, c in (("lines", rep.h, s2), ("lines_prime", rep.hp, s2),
                            ("dust", rep.l, s2), ("dust_prime", rep.lp, s2)):
            if not fn.is_zero:
                parts[name] = _scaled(integrate_range(fin.hat(fn), T, math.inf, tol), c)
    else:
        raise TypeError(f"no truncation error for {type(model).__name__}")
    return TruncationError(_combine(parts), parts)
