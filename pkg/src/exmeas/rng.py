"""Counter-based, hash-keyed random streams.

A stream is identified by a root seed and a path of ``(label, index)``
pairs.  Its 64-bit key word is obtained by folding the path through a
SplitMix64-style mixer, and the ``n``-th uniform of the stream is a hash of
``(key word, n)``.  Nothing is sequential, so any stream can be addressed
directly and in bulk: numpy arrays of key words and counters give arrays of
uniforms.  This is what lets the edge variable of a vertex pair be keyed by
the unordered pair itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_COUNTER_SALT = np.uint64(0xD1B54A32D192ED03)


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _mix_int(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


@lru_cache(maxsize=256)
def _tag(label: int) -> int:
    return _mix_int(((label & _MASK) + 0x9E3779B97F4A7C15) & _MASK)


def derive_int(word: int, label: int, index: int) -> int:
    """Scalar twin of :func:`derive` on Python ints."""
    step = _mix_int(((index & _MASK) * 0x9E3779B97F4A7C15 + _tag(label)) & _MASK)
    return _mix_int((_mix_int(word ^ step) + 0x9E3779B97F4A7C15) & _MASK)


def _as_u64(values) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values))
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype.kind in "iu":
        return arr.astype(np.int64).view(np.uint64) if arr.dtype.kind == "i" else arr.astype(np.uint64)
    return np.array([int(v) & _MASK for v in arr.ravel()], dtype=np.uint64).reshape(arr.shape)


def root_word(seed: int) -> int:
    return _mix_int(((int(seed) & _MASK) + 0x9E3779B97F4A7C15) & _MASK)


def derive(words, label: int, indices) -> np.ndarray:
    """Key words of the children ``(label, index)`` of each parent word.

    ``words`` and ``indices`` broadcast against each other.
    """
    with np.errstate(over="ignore"):
        w = _as_u64(words)
        idx = _as_u64(indices)
        tag = np.uint64(_tag(label))
        step = mix64(idx * _GOLDEN + tag)
        return mix64(mix64(w ^ step) + _GOLDEN)


def uniforms(words, counters) -> np.ndarray:
    """Uniforms on [0, 1) at ``counters`` of the streams keyed by ``words``."""
    with np.errstate(over="ignore"):
        w = _as_u64(words)
        c = _as_u64(counters)
        z = mix64(mix64(w ^ mix64(c * _COUNTER_SALT + _GOLDEN)) + c)
        return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class RngKey:
    """Root seed plus a structural path; the same pair always gives the same
    stream and distinct paths give independent streams."""

    seed: int
    path: tuple[tuple[int, int], ...] = field(default=())

    def child(self, label: int, index: int = 0) -> "RngKey":
        return RngKey(self.seed, self.path + ((int(label), int(index)),))

    @cached_property
    def word(self) -> int:
        w = root_word(self.seed)
        for label, index in self.path:
            w = derive_int(w, label, index)
        return w

    def uniforms(self, n: int, offset: int = 0) -> np.ndarray:
        return uniforms(self.word, np.arange(offset, offset + n, dtype=np.uint64))

    def split(self, n: int, label: int = 0) -> list["RngKey"]:
        return [self.child(label, i) for i in range(n)]
