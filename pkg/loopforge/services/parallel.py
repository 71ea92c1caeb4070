"""Ordered parallel map.

Work items are independent; results always come back in input order so any
reduction over them is independent of the worker count.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from loopforge.config import settings

T = TypeVar("T")
R = TypeVar("R")


def worker_count(requested: Optional[int] = None) -> int:
    """Effective workers: the request capped by LOOPFORGE_THREADS."""
    cap = settings.threads
    return cap if requested is None else max(1, min(int(requested), cap))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item, returning results in input order."""
    items = list(items)
    n = worker_count(workers)
    if n == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
