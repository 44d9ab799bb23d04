"""Ordered thread-pool map, sized by the ``EXMEAS_THREADS`` variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional


def worker_count(requested: Optional[int] = None) -> int:
    """``requested`` if given, else ``EXMEAS_THREADS`` (0 or unset means one
    worker per CPU)."""
    if requested is None:
        raw = os.environ.get("EXMEAS_THREADS", "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            raise ValueError(f"EXMEAS_THREADS must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError("thread count must be nonnegative")
    return requested or (os.cpu_count() or 1)


def pmap(fn: Callable, items: Iterable, workers: Optional[int] = None) -> list:
    """``[fn(item) for item in items]``, possibly on several threads; the
    result order never depends on scheduling."""
    items = list(items)
    n = worker_count(workers)
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
