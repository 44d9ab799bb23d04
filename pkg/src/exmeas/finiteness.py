"""Local-finiteness certification.

The six conditions for the general representation are checked numerically:

(i)   lambda(l^ + l'^ + h^ + h'^) < inf
(ii)  lambda{g1 = inf} = lambda{g1' = inf} = 0
(iii) lambda(g1^ + g1'^) < inf
(iv)  lambda{f_i = inf} = 0 and lambda{f_i > 1} < inf for i = 1, 2
(v)   int int f3^(x, y) 1{f1(x) v f2(y) <= 1} dy dx < inf
(vi)  int f3^(x, x) dx < inf

where ``phi^ = phi ^ 1``, ``f3^(x, y) = int_0^1 f^(x, y, z) dz``,
``f1(x) = int f3^(x, y) dy``, ``f2(y) = int f3^(x, y) dx`` and
``g1(x) = int g^(x, y) dy``.  Condition (ii) is the one whose absence lets
the counter-example ``g(x, y) = 1{x <= 1, floor(y) even}`` slip through:
its star part is a.s. infinite although (iii) holds almost everywhere.

"= inf" statements are decided on escalating cutoffs: the set
``{phi > c}`` is located for ``c = 10, ..., 1e6``; the condition holds when
the measure at the last cutoff is below ``tol``, fails when the measures stay
above ``tol``, agree across the last two cutoffs and some probe has a
certified divergent inner integral, and is inconclusive otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Check, Classification, ConditionRecord, Status, Verdict
from .dsl import BinOp, Call, DomainError, DSLFunction, Num, Var, evaluate, free_variables
from .models import KallenbergRep, LevelSetDivergence, Multigraphex
from .quadrature import (TOL_1D, TOL_2D, Convergence, IntegralEstimate, Memo, SuperlevelSet,
                         escalating_superlevels, inner_marginal, integrate_range, integrate_region,
                         superlevel_set, z_average, NegativeIntegrandError)
from .rng import RngKey, derive, uniforms

CUTOFFS = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6)
F3_TOL = 1e-7


def psi(x):
    """``1 - exp(-x)``, computed without cancellation.

    >>> float(psi(math.log(2)))
    0.5
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("psi is defined for nonnegative arguments")
    out = -np.expm1(-x)
    return float(out) if out.ndim == 0 else out


def _zero(fn) -> bool:
    return bool(getattr(fn, "is_zero", False))


def hat(fn: Callable) -> Callable:
    """``phi ^ 1`` as a vectorised function with the same arguments."""
    def capped(*args):
        return np.minimum(np.asarray(fn(*args), dtype=float), 1.0)
    capped.is_zero = _zero(fn)
    return capped


def _z_box(e):
    """Split ``e`` as ``w * ind(z, a, b)`` with ``w``, ``a``, ``b`` free of
    ``z``, or return None."""
    if isinstance(e, Call) and e.func == "ind" and e.args[0] == Var("z") \
            and "z" not in free_variables(e.args[1]) | free_variables(e.args[2]):
        return Num(1.0), e.args[1], e.args[2]
    if isinstance(e, BinOp) and e.op == "*":
        for u, v in ((e.left, e.right), (e.right, e.left)):
            if "z" not in free_variables(v):
                inner = _z_box(u)
                if inner is not None:
                    return BinOp("*", v, inner[0]), inner[1], inner[2]
    return None


def f_hat3(f: Callable, tol: float = F3_TOL) -> Callable:
    """``(x, y) -> int_0^1 (f ^ 1)(x, y, z) dz``.  The z-integral is skipped
    when ``f`` does not depend on ``z`` and done in closed form when ``f`` is
    ``w(x, y) * ind(z, a(x, y), b(x, y))``; otherwise it is adaptive."""
    depends = getattr(f, "depends_on", lambda name: True)
    box = _z_box(f.expr) if isinstance(f, DSLFunction) else None

    def f3(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if not depends("z"):
            return np.minimum(np.asarray(f(x, y, np.zeros_like(x)), dtype=float), 1.0)
        if box is not None:
            env = {"x": x, "y": y}
            w, a, b = (np.broadcast_to(np.asarray(evaluate(t, env), dtype=float), x.shape) for t in box)
            length = np.clip(np.minimum(b, 1.0) - np.maximum(a, 0.0), 0.0, None)
            return np.where(length > 0, np.minimum(w, 1.0) * length, 0.0)
        return z_average(lambda a, b, z: np.minimum(np.asarray(f(a, b, z), dtype=float), 1.0), x, y, tol)

    f3.is_zero = _zero(f)
    return f3


def row_marginal(h: Callable, tol: float = TOL_1D) -> Callable:
    """``x -> int_0^inf h(x, y) dy`` with ``inf`` for divergent and ``nan``
    for undecided integrals."""
    def marg(xs):
        return inner_marginal(h, np.asarray(xs, dtype=float), tol=tol)[0]
    return marg


def column_marginal(h: Callable, tol: float = TOL_1D) -> Callable:
    return row_marginal(lambda a, b: h(b, a), tol)


@dataclass(frozen=True)
class Marginals:
    """Marginal functionals of a model, each vectorised in its argument and
    valued in ``[0, inf]`` (``nan`` where quadrature cannot decide)."""

    f1: Callable
    f2: Callable
    g1: Callable
    g1p: Callable
    f_hat3: Callable
    mu_W: Optional[Callable] = None


def kallenberg_marginals(rep: KallenbergRep, tol: float = TOL_1D) -> Marginals:
    f3 = f_hat3(rep.f)
    return Marginals(f1=row_marginal(f3, tol), f2=column_marginal(f3, tol), g1=row_marginal(hat(rep.g), tol),
                     g1p=row_marginal(hat(rep.gp), tol), f_hat3=f3)


def mu_W(mg: Multigraphex, tol: float = TOL_1D) -> Callable:
    """``x -> int (1 - W(x, y, 0)) dy``."""
    return row_marginal(mg.W.edge_prob, tol)


# ---------------------------------------------------------------------------
# clause helpers


@dataclass
class _Clause:
    status: Check
    estimate: float
    error: float
    witness: str = ""
    details: list = field(default_factory=list)
    sets: Optional[SuperlevelSet] = None


def _inf_clause(memo: Memo, name: str, tol: float, cutoffs=CUTOFFS) -> _Clause:
    """Decide ``lambda{phi = inf} = 0`` from superlevel sets at escalating
    cutoffs."""
    sets = escalating_superlevels(memo, cutoffs, tol)
    details = [(f"lambda{{{name} > {c:g}}}", s.lower) for c, s in zip(cutoffs, sets)]
    last = sets[-1]
    lows = [s.lower for s in sets]
    if last.estimate.converged and last.upper <= tol:
        return _Clause(Check.SATISFIED, last.lower, last.estimate.error, details=details)
    stable = abs(lows[-1] - lows[-2]) <= max(tol, 0.01 * lows[-1])
    if min(lows) >= tol and stable and last.diverging_probes > 0:
        if last.estimate.diverging:
            return _Clause(Check.VIOLATED, math.inf, math.inf,
                           f"lambda{{{name}=inf}} = inf ({name} diverges on all of [0, {last.intervals[-1][1]:.4g}])",
                           details)
        where = ", ".join(f"[{a:.4g}, {b:.4g}]" for a, b in last.intervals[:3])
        return _Clause(Check.VIOLATED, last.lower, 0.0,
                       f"lambda{{{name}=inf}} ~ {last.lower:.4g} > 0 ({name} diverges on {where})", details)
    why = last.estimate.note or "superlevel measures did not settle"
    return _Clause(Check.INCONCLUSIVE, last.lower, math.inf, f"{name}: {why}", details)


def _gt1_clause(memo: Memo, name: str, tol: float) -> _Clause:
    """Decide ``lambda{phi > 1} < inf``."""
    s = superlevel_set(memo, 1.0, tol)
    detail = [(f"lambda{{{name} > 1}}", s.lower)]
    if s.estimate.converged:
        return _Clause(Check.SATISFIED, s.lower, s.estimate.error, details=detail, sets=s)
    if s.estimate.diverging:
        return _Clause(Check.VIOLATED, math.inf, math.inf,
                       f"lambda{{{name} > 1}} = inf ({s.estimate.note})", detail, s)
    return _Clause(Check.INCONCLUSIVE, s.lower, math.inf, f"{name}: {s.estimate.note}", detail, s)


def _integral_clause(est: IntegralEstimate, what: str) -> _Clause:
    if est.converged:
        return _Clause(Check.SATISFIED, est.value, est.error)
    if est.diverging:
        return _Clause(Check.VIOLATED, math.inf, math.inf, f"{what} diverges ({est.note})")
    return _Clause(Check.INCONCLUSIVE, est.value, math.inf, f"{what}: {est.note}")


def _merge(clauses: Sequence[_Clause], estimate: str = "max") -> _Clause:
    statuses = [c.status for c in clauses]
    details = [d for c in clauses for d in c.details]
    witness = "; ".join(c.witness for c in clauses if c.witness and c.status is not Check.SATISFIED)
    values = [c.estimate for c in clauses]
    est = max(values) if estimate == "max" else math.fsum(values)
    err = math.fsum(c.error for c in clauses)
    if Check.VIOLATED in statuses:
        witness = "; ".join(c.witness for c in clauses if c.status is Check.VIOLATED)
        return _Clause(Check.VIOLATED, est, err, witness, details)
    if all(s is Check.SATISFIED for s in statuses):
        return _Clause(Check.SATISFIED, est, err, "", details)
    return _Clause(Check.INCONCLUSIVE, est, err, witness, details)


def _record(cid: str, desc: str, c: _Clause) -> ConditionRecord:
    return ConditionRecord(cid, desc, float(c.estimate), float(c.error), c.status, c.witness, tuple(c.details))


def _guarded(fn: Callable[[], _Clause], what: str) -> _Clause:
    """Evaluation failures (domain errors, negative values) become
    inconclusive clauses with the reason attached."""
    try:
        return fn()
    except (DomainError, NegativeIntegrandError, LevelSetDivergence, ValueError) as exc:
        return _Clause(Check.INCONCLUSIVE, math.nan, math.inf, f"{what}: {type(exc).__name__}: {exc}")


def _satisfied_zero(details=()) -> _Clause:
    return _Clause(Check.SATISFIED, 0.0, 0.0, details=list(details))


def _skipped(reason: str) -> _Clause:
    return _Clause(Check.SKIPPED, math.nan, math.inf, reason)


@dataclass
class _Quadratic:
    infinity: _Clause
    above_one: _Clause
    plane: _Clause
    diagonal: _Clause


def _quadratic(h: Callable, names=("h1", "h2"), symmetric: bool = False, tol: float = TOL_1D,
               tol2: float = TOL_2D, cutoffs=CUTOFFS) -> _Quadratic:
    """Evaluate the four clauses for ``eta^2 h < inf`` on the capped ``h``."""
    if _zero(h):
        z = _satisfied_zero()
        return _Quadratic(z, _satisfied_zero(), _satisfied_zero(), _satisfied_zero())
    hh = hat(h)
    m1 = Memo(row_marginal(hh, tol))
    m2 = m1 if symmetric else Memo(column_marginal(hh, tol))
    inf1 = _guarded(lambda: _inf_clause(m1, names[0], tol, cutoffs), names[0])
    inf2 = inf1 if symmetric else _guarded(lambda: _inf_clause(m2, names[1], tol, cutoffs), names[1])
    gt1 = _guarded(lambda: _gt1_clause(m1, names[0], tol), names[0])
    gt2 = gt1 if symmetric else _guarded(lambda: _gt1_clause(m2, names[1], tol), names[1])
    infinity = _merge([inf1] if symmetric else [inf1, inf2])
    above_one = _merge([gt1] if symmetric else [gt1, gt2])
    if infinity.status is Check.VIOLATED or above_one.status is Check.VIOLATED:
        plane = _skipped(f"requires lambda{{{names[0]} > 1}} < inf")
    elif gt1.sets is None or gt2.sets is None:
        plane = _Clause(Check.INCONCLUSIVE, math.nan, math.inf, "superlevel sets at 1 unavailable")
    else:
        A1, A2 = gt1.sets, gt2.sets

        def restricted(x, y):
            keep = ~A1.contains(x) & ~A2.contains(y)
            return np.where(keep, hh(x, y), 0.0)
        plane = _guarded(lambda: _integral_clause(integrate_region(restricted, tol=tol2), "restricted plane integral"),
                         "restricted plane integral")
    diagonal = _guarded(lambda: _integral_clause(integrate_range(lambda x: hh(x, x), tol=tol), "diagonal integral"),
                        "diagonal integral")
    return _Quadratic(infinity, above_one, plane, diagonal)


# ---------------------------------------------------------------------------
# classifiers


@dataclass(frozen=True)
class ClassifierResult:
    classification: Classification
    evidence: tuple[ConditionRecord, ...]

    def record(self, condition: str) -> Optional[ConditionRecord]:
        return next((r for r in self.evidence if r.condition == condition), None)


def _classify(records: Sequence[ConditionRecord]) -> Classification:
    if any(r.status is Check.VIOLATED for r in records):
        return Classification.INFINITE_AS
    if all(r.status is Check.SATISFIED for r in records):
        return Classification.FINITE_AS
    return Classification.INCONCLUSIVE


def poisson_linear_classify(phi: Callable, tol: float = TOL_1D) -> ClassifierResult:
    """``eta phi < inf`` a.s. for a unit-rate Poisson process ``eta`` iff
    ``lambda (phi ^ 1) < inf``.

    >>> poisson_linear_classify(lambda x: np.exp(-x)).classification.value
    'FiniteAS'
    """
    c = _satisfied_zero() if _zero(phi) else _guarded(
        lambda: _integral_clause(integrate_range(hat(phi), tol=tol), "lambda(phi ^ 1)"), "lambda(phi ^ 1)")
    rec = _record("lambda(phi^1)", "integral of the capped function", c)
    return ClassifierResult(_classify([rec]), (rec,))


def poisson_quadratic_classify(h: Callable, tol: float = TOL_1D, tol2: float = TOL_2D,
                               symmetric: bool = False) -> ClassifierResult:
    """``eta^2 h = sum_{i,j} h(x_i, x_j) < inf`` a.s. iff four clauses hold on
    the capped ``h`` and its marginals ``h1``, ``h2``."""
    q = _quadratic(h, ("h1", "h2"), symmetric, tol, tol2)
    recs = (
        _record("(i)", "lambda{h1 = inf} = lambda{h2 = inf} = 0", q.infinity),
        _record("(ii)", "lambda{h1 > 1} < inf and lambda{h2 > 1} < inf", q.above_one),
        _record("(iii)", "int int h^ 1{h1(x) v h2(y) <= 1} < inf", q.plane),
        _record("(iv)", "int h^(x, x) dx < inf", q.diagonal),
    )
    return ClassifierResult(_classify(recs), recs)


# ---------------------------------------------------------------------------
# certifiers


@dataclass(frozen=True)
class CertifyConfig:
    tol: float = TOL_1D
    tol2: float = TOL_2D
    cutoffs: tuple[float, ...] = CUTOFFS

    def __post_init__(self):
        c = tuple(float(v) for v in self.cutoffs)
        # stability of the superlevel measures is judged on the last two cutoffs
        if len(c) < 2 or any(b <= a for a, b in zip(c, c[1:])) or c[0] <= 1:
            raise ValueError("cutoffs must be at least two increasing values above 1")
        if not (self.tol > 0 and self.tol2 > 0):
            raise ValueError("tolerances must be positive")
        object.__setattr__(self, "cutoffs", c)


def _same(a, b) -> bool:
    return a is b or (type(a) is type(b) and hasattr(a, "expr") and a == b)


def certify_kallenberg(rep: KallenbergRep, cfg: Optional[CertifyConfig] = None) -> Verdict:
    """Certify a.s. local finiteness of the measure generated by ``rep``."""
    cfg = cfg or CertifyConfig()
    tol = cfg.tol

    # (i) lines and dust
    ones = [fn for fn in (rep.l, rep.lp, rep.h, rep.hp) if not _zero(fn)]
    if ones:
        total = lambda x: sum(np.minimum(np.asarray(fn(x), dtype=float), 1.0) for fn in ones)
        c1 = _guarded(lambda: _integral_clause(integrate_range(total, tol=tol), "lambda(l^ + l'^ + h^ + h'^)"), "(i)")
    else:
        c1 = _satisfied_zero()

    # (ii) and (iii): star part
    memos: dict[str, Memo] = {}
    if not _zero(rep.g):
        memos["g1"] = Memo(row_marginal(hat(rep.g), tol))
    if not _zero(rep.gp):
        # g' = g (the symmetric case) shares the cached marginal
        memos["g1'"] = memos["g1"] if "g1" in memos and _same(rep.g, rep.gp) else Memo(row_marginal(hat(rep.gp), tol))
    inf_clauses = [_guarded(lambda m=m, n=n: _inf_clause(m, n, tol, cfg.cutoffs), n) for n, m in memos.items()]
    c2 = _merge(inf_clauses) if inf_clauses else _satisfied_zero()
    if not memos:
        c3 = _satisfied_zero()
    elif c2.status is Check.VIOLATED:
        c3 = _skipped("requires (ii): the capped marginal is only finite a.e. once (ii) holds")
    else:
        def star_total(x):
            return sum(np.minimum(m(x), 1.0) for m in memos.values())
        c3 = _guarded(lambda: _integral_clause(integrate_range(star_total, tol=tol), "lambda(g1^ + g1'^)"), "(iii)")

    # (iv)-(vi): edge part
    if _zero(rep.f):
        c4, c5, c6 = _satisfied_zero(), _satisfied_zero(), _satisfied_zero()
    else:
        q = _quadratic(f_hat3(rep.f), ("f1", "f2"), rep.f_symmetric, tol, cfg.tol2, cfg.cutoffs)
        c4 = _merge([q.infinity, q.above_one])
        if q.infinity.status is Check.VIOLATED:
            c4.witness = q.infinity.witness
        c5 = q.plane if c4.status is not Check.VIOLATED else _skipped("requires (iv)")
        c6 = q.diagonal

    recs = [
        _record("(i)", "lambda(l^ + l'^ + h^ + h'^) < inf", c1),
        _record("(ii)", "lambda{g1 = inf} = lambda{g1' = inf} = 0", c2),
        _record("(iii)", "lambda(g1^ + g1'^) < inf", c3),
        _record("(iv)", "lambda{f_i = inf} = 0 and lambda{f_i > 1} < inf, i = 1, 2", c4),
        _record("(v)", "int int int f^ 1{f1(x) v f2(y) <= 1} < inf", c5),
        _record("(vi)", "int int f^(x, x, z) dz dx < inf", c6),
    ]
    return Verdict.combine(recs)


def certify_multigraphex(mg: Multigraphex, cfg: Optional[CertifyConfig] = None) -> Verdict:
    """Check the integrability assumptions of a multigraphex: capped star
    mass, summable dust, and conditions (a)-(c) on ``mu_W``."""
    cfg = cfg or CertifyConfig()
    tol = cfg.tol
    if mg.S.is_zero:
        cs = _satisfied_zero()
    else:
        def capped_star(v):
            return np.minimum(mg.S.atom_mass(v), 1.0)
        cs = _guarded(lambda: _integral_clause(integrate_range(capped_star, tol=tol), "int min(sum_k S(., k), 1)"),
                      "star intensity")
        if mg.S.tail_bound:
            cs.error += mg.S.tail_bound
    ci = _Clause(Check.SATISFIED, mg.I.total + mg.I.tail_bound, mg.I.tail_bound)
    if mg.W.is_zero:
        ca, cb, cc = _satisfied_zero(), _satisfied_zero(), _satisfied_zero()
    else:
        q = _quadratic(mg.W.edge_prob, ("mu_W", "mu_W"), True, tol, cfg.tol2, cfg.cutoffs)
        ca = _merge([q.infinity, q.above_one])
        cb = q.plane if ca.status is not Check.VIOLATED else _skipped("requires (a)")
        cc = q.diagonal
    recs = [
        _record("(S)", "min{sum_{k>=1} S(., k), 1} integrable", cs),
        _record("(I)", "sum_k I(k) < inf", ci),
        _record("(a)", "lambda{mu_W = inf} = 0 and lambda{mu_W > 1} < inf", ca),
        _record("(b)", "int int (1 - W(x, y, 0)) 1{mu_W(x) <= 1} 1{mu_W(y) <= 1} < inf", cb),
        _record("(c)", "int (1 - W(x, x, 0)) dx < inf", cc),
    ]
    return Verdict.combine(recs)


def certify(model, cfg: Optional[CertifyConfig] = None) -> Verdict:
    if isinstance(model, Multigraphex):
        return certify_multigraphex(model, cfg)
    if isinstance(model, KallenbergRep):
        return certify_kallenberg(model, cfg)
    raise TypeError(f"cannot certify {type(model).__name__}")


# ---------------------------------------------------------------------------
# summability of independent series


@dataclass(frozen=True)
class DiscreteLaw:
    """Finitely supported law on the nonnegative reals."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(a) for a in self.values)
        p = tuple(float(a) for a in self.probs)
        if len(v) != len(p) or not v:
            raise ValueError("values and probabilities must be nonempty and of equal length")
        if any(a < 0 for a in v) or any(a < 0 for a in p) or abs(math.fsum(p) - 1.0) > 1e-9:
            raise ValueError("need nonnegative values and probabilities summing to one")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @classmethod
    def point(cls, value: float) -> "DiscreteLaw":
        return cls((value,), (1.0,))

    @classmethod
    def bernoulli(cls, p: float, scale: float = 1.0) -> "DiscreteLaw":
        return cls((0.0, scale), (1.0 - p, p))

    def expected_capped(self) -> float:
        """``E[1 ^ Z]``."""
        return math.fsum(min(v, 1.0) * p for v, p in zip(self.values, self.probs))


@dataclass(frozen=True)
class SummabilityResult:
    predicted: str
    block_sums: tuple[float, ...]
    sizes: tuple[int, ...]
    mean_partial_sums: tuple[float, ...]
    median_partial_sums: tuple[float, ...]


def summability_oracle(terms: Sequence[DiscreteLaw], n_samples: int, key: RngKey,
                       ratio_threshold: float = 0.99) -> SummabilityResult:
    """Predict whether ``sum_j Z_j`` converges from ``E[1 ^ Z_j]`` and compare
    with sampled partial sums.

    The expectations are summed over doubling blocks ``[2^m, 2^(m+1))``; the
    series is predicted to converge when the last block sums are zero or
    shrink geometrically (mean ratio of the last three below
    ``ratio_threshold``).  Sampled partial sums at the block ends are
    reported for cross-validation.
    """
    terms = list(terms)
    n = len(terms)
    caps = [t.expected_capped() for t in terms]
    sizes, blocks, complete = [], [], []
    lo = 0
    while lo < n:
        hi = min(n, 2 * lo + 1)
        blocks.append(math.fsum(caps[lo:hi]))
        sizes.append(hi)
        complete.append(hi == 2 * lo + 1)
        lo = hi
    # a truncated last block would fake a drop, so only full blocks vote
    tail = [b for b, c in zip(blocks, complete) if c][-4:]
    if not tail or max(tail) <= 1e-12:
        predicted = "Converges"
    else:
        ratios = [b / a for a, b in zip(tail[:-1], tail[1:]) if a > 0]
        r = math.exp(sum(math.log(max(x, 1e-300)) for x in ratios) / len(ratios)) if ratios else 0.0
        predicted = "Converges" if r < ratio_threshold else "Diverges"
    partial = np.zeros(n_samples)
    means, medians = [], []
    root = np.uint64(key.word)
    counters = np.arange(n_samples, dtype=np.uint64)
    j = 0
    for end in sizes:
        while j < end:
            law = terms[j]
            u = uniforms(derive(root, 0, j), counters)
            cum = np.cumsum(law.probs)
            idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
            partial += np.asarray(law.values)[idx]
            j += 1
        means.append(float(partial.mean()))
        medians.append(float(np.median(partial)))
    return SummabilityResult(predicted, tuple(blocks), tuple(sizes), tuple(means), tuple(medians))
