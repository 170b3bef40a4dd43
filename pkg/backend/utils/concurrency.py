"""
Sample-level parallelism.

Work is distributed over processes at the granularity of independent samples
(patterns, trees, candidates). Results always come back in input order, so the
worker count never changes what callers assemble from them.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar('T')
R = TypeVar('R')

logger = logging.getLogger(__name__)


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Apply a picklable function to every item, preserving order.

    Args:
        func: Module-level function
        items: Inputs
        workers: Number of processes; 1 runs in the calling process

    Returns:
        list: func(item) for every item, in input order
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    workers = min(workers, len(items))
    logger.debug(f"Mapping {len(items)} items over {workers} processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
