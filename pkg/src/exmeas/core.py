"""Shared vocabulary: atoms, sampled windows, verdicts and condition records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, order=True)
class Atom:
    """Point mass of weight ``mult`` at ``(x, y)``.  Counting measures use
    integer weights; real weights appear in the general sampler."""

    x: float
    y: float
    mult: float = 1

    def __post_init__(self):
        if not (self.x >= 0 and self.y >= 0):
            raise ValueError(f"atom coordinates must be nonnegative, got ({self.x}, {self.y})")
        if not self.mult > 0:
            raise ValueError(f"atom weight must be positive, got {self.mult}")


@dataclass(frozen=True)
class LineMass:
    """Lebesgue mass along the row ``{coordinate} x [0, s]`` or the column
    ``[0, s] x {coordinate}``."""

    coordinate: float
    orientation: str
    mass: float

    def __post_init__(self):
        if self.orientation not in ("row", "column"):
            raise ValueError("orientation must be 'row' or 'column'")
        if self.mass < 0:
            raise ValueError("line mass must be nonnegative")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype).ravel()
    arr.setflags(write=False)
    return arr


def merge_arrays(xs, ys, w) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sort atoms lexicographically by ``(x, y)`` and sum weights of atoms
    sharing a coordinate pair."""
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    w = np.asarray(w).ravel()
    if xs.size == 0:
        return xs, ys, w
    order = np.lexsort((ys, xs))
    xs, ys, w = xs[order], ys[order], w[order]
    new = np.ones(xs.size, dtype=bool)
    new[1:] = (xs[1:] != xs[:-1]) | (ys[1:] != ys[:-1])
    if new.all():
        return xs, ys, w
    groups = np.cumsum(new) - 1
    return xs[new], ys[new], np.bincount(groups, weights=w).astype(w.dtype)


def merge_atoms(atoms: Iterable[Atom]) -> list[Atom]:
    """Merge atoms with identical coordinates by summing multiplicities.

    >>> merge_atoms([Atom(1, 2, 1), Atom(1, 2, 2)])
    [Atom(x=1.0, y=2.0, mult=3)]
    """
    atoms = list(atoms)
    if not atoms:
        return []
    integral = all(float(a.mult).is_integer() for a in atoms)
    xs, ys, w = merge_arrays([a.x for a in atoms], [a.y for a in atoms],
                             np.array([a.mult for a in atoms], dtype=np.int64 if integral else float))
    return [Atom(float(x), float(y), int(m) if integral else float(m)) for x, y, m in zip(xs, ys, w)]


@dataclass(frozen=True)
class AdjacencyMeasureWindow:
    """Restriction of a sampled measure to ``[0, s]^2``.

    Atoms are stored column-wise (``xs``, ``ys``, ``weights``), sorted and
    merged.  ``part_masses`` splits the atomic mass by origin (``edge`` for
    off-diagonal pairs of latent vertices, ``loop`` for self-pairs, ``star``,
    ``star_prime``, ``dust``, ``dust_prime``) for diagnostics and moment
    checks.
    """

    window: float
    xs: np.ndarray = field(default_factory=lambda: _frozen([]))
    ys: np.ndarray = field(default_factory=lambda: _frozen([]))
    weights: np.ndarray = field(default_factory=lambda: _frozen([], np.int64))
    diag_mass: float = 0.0
    plane_mass: float = 0.0
    line_masses: tuple[LineMass, ...] = ()
    part_masses: Mapping[str, float] = field(default_factory=dict)
    symmetric: bool = False

    def __post_init__(self):
        if not self.window > 0:
            raise ValueError("window size must be positive")
        xs, ys, w = merge_arrays(self.xs, self.ys, self.weights)
        if w.size and np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if xs.size and (xs.min() < 0 or ys.min() < 0 or xs.max() > self.window or ys.max() > self.window):
            raise ValueError("atoms must lie inside the window")
        object.__setattr__(self, "xs", _frozen(xs))
        object.__setattr__(self, "ys", _frozen(ys))
        object.__setattr__(self, "weights", _frozen(w, w.dtype if w.size else np.int64))
        object.__setattr__(self, "line_masses", tuple(self.line_masses))
        object.__setattr__(self, "part_masses", dict(self.part_masses))

    @classmethod
    def from_atoms(cls, window: float, atoms: Iterable[Atom], **kw) -> "AdjacencyMeasureWindow":
        atoms = list(atoms)
        integral = all(float(a.mult).is_integer() for a in atoms)
        return cls(window, [a.x for a in atoms], [a.y for a in atoms],
                   np.array([a.mult for a in atoms], dtype=np.int64 if integral else float), **kw)

    @property
    def atoms(self) -> list[Atom]:
        integral = self.weights.dtype.kind in "iu"
        return [Atom(float(x), float(y), int(m) if integral else float(m))
                for x, y, m in zip(self.xs, self.ys, self.weights)]

    @property
    def n_atoms(self) -> int:
        return int(self.xs.size)

    @property
    def atomic_mass(self) -> float:
        return math.fsum(self.weights.tolist())

    def mass_in(self, a0: float, a1: float, b0: float, b1: float) -> float:
        """Atomic mass in ``[a0, a1) x [b0, b1)``."""
        sel = (self.xs >= a0) & (self.xs < a1) & (self.ys >= b0) & (self.ys < b1)
        return math.fsum(self.weights[sel].tolist())

    def swapped(self) -> "AdjacencyMeasureWindow":
        return AdjacencyMeasureWindow(self.window, self.ys, self.xs, self.weights, self.diag_mass,
                                      self.plane_mass, tuple(LineMass(l.coordinate, "column" if l.orientation == "row"
                                                                      else "row", l.mass) for l in self.line_masses),
                                      self.part_masses, self.symmetric)

    def without(self, index: int) -> "AdjacencyMeasureWindow":
        """Copy with one atom removed (used to build corrupted test inputs)."""
        keep = np.arange(self.n_atoms) != index
        return AdjacencyMeasureWindow(self.window, self.xs[keep], self.ys[keep], self.weights[keep],
                                      self.diag_mass, self.plane_mass, self.line_masses, self.part_masses, False)


def window_mass(w: AdjacencyMeasureWindow) -> float:
    """Total mass: atoms plus diagonal, planar and line contributions.

    >>> round(window_mass(AdjacencyMeasureWindow(1.0, diag_mass=SQRT2, plane_mass=1.0)), 5)
    2.41421
    """
    return math.fsum([*w.weights.tolist(), w.diag_mass, w.plane_mass, *(l.mass for l in w.line_masses)])


# ---------------------------------------------------------------------------
# verdicts


class Status(str, Enum):
    LOCALLY_FINITE = "LocallyFinite"
    NOT_LOCALLY_FINITE = "NotLocallyFinite"
    INCONCLUSIVE = "Inconclusive"


class Classification(str, Enum):
    FINITE_AS = "FiniteAS"
    INFINITE_AS = "InfiniteAS"
    INCONCLUSIVE = "Inconclusive"


class Check(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class ConditionRecord:
    """Evidence for one condition: a numeric estimate with error bound and
    the sub-status reached.  ``details`` holds auxiliary figures such as the
    superlevel measure at each cutoff."""

    condition: str
    description: str
    estimate: float
    error: float
    status: Check
    witness: str = ""
    details: tuple[tuple[str, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "description": self.description,
            "estimate": _json_float(self.estimate),
            "error": _json_float(self.error),
            "status": self.status.value,
            "witness": self.witness,
            "details": {k: _json_float(v) for k, v in self.details},
        }


def _json_float(v: float):
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass(frozen=True)
class Verdict:
    status: Status
    evidence: tuple[ConditionRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "evidence", tuple(self.evidence))
        if self.status is Status.NOT_LOCALLY_FINITE:
            if not any(r.status is Check.VIOLATED and r.witness for r in self.evidence):
                raise ValueError("NotLocallyFinite needs a violated condition with a witness")
        if self.status is Status.LOCALLY_FINITE:
            if not all(r.status is Check.SATISFIED and math.isfinite(r.estimate) for r in self.evidence):
                raise ValueError("LocallyFinite needs every condition satisfied with a finite estimate")

    @classmethod
    def combine(cls, records: Sequence[ConditionRecord]) -> "Verdict":
        if any(r.status is Check.VIOLATED for r in records):
            return cls(Status.NOT_LOCALLY_FINITE, records)
        if all(r.status is Check.SATISFIED for r in records):
            return cls(Status.LOCALLY_FINITE, records)
        return cls(Status.INCONCLUSIVE, records)

    def record(self, condition: str) -> Optional[ConditionRecord]:
        for r in self.evidence:
            if r.condition == condition:
                return r
        return None

    @property
    def violated(self) -> list[ConditionRecord]:
        return [r for r in self.evidence if r.status is Check.VIOLATED]

    def to_dict(self) -> dict:
        return {"status": self.status.value, "evidence": [r.to_dict() for r in self.evidence]}
