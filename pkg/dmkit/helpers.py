"""
dmkit - Helper / Utility Functions
Pure numeric utilities and the sweep mapper shared by the frequency-domain
modules.
"""
from __future__ import annotations
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from dmkit import config

T = TypeVar("T")
R = TypeVar("R")


def geometric_mid(lo: float, hi: float) -> float:
    """Midpoint of [lo, hi] on a log scale; arithmetic when lo is 0."""
    if lo <= 0:
        return 0.5 * (lo + hi)
    return math.sqrt(lo * hi)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def sweep_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T],
              workers: int | None = None) -> list[R]:
    """Apply *fn* to each item, in order. Threads are used when workers > 1."""
    items = list(items)
    workers = config.worker_count() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
