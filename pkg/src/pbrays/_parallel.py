"""Thread pool used for independent batches of integrations.

Work is always split into fixed-size chunks before it reaches the pool, so
results never depend on how many workers run them.  ``PBRAYS_MAX_WORKERS``
caps the pool (``1`` runs everything inline).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "PBRAYS_MAX_WORKERS"


def max_workers(requested: Optional[int] = None) -> int:
    cap = os.environ.get(ENV_VAR)
    n = requested if requested is not None else min(8, os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, int(n))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """``[fn(i) for i in items]`` in input order, possibly on a thread pool."""
    items = list(items)
    n = min(max_workers(workers), len(items))
    if n <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
