"""Process-pool helper for sample sweeps whose results are merged by index."""

import concurrent.futures
import os

from .errors import ArgumentError


def worker_count(requested=None):
    """Worker processes to use, capped by the ``WARPCURV_THREADS`` environment variable."""
    cap = os.environ.get("WARPCURV_THREADS")
    count = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            raise ArgumentError(f"WARPCURV_THREADS must be an integer, got {cap!r}") from None
    return max(1, int(count))


def ordered_map(fn, tasks, workers=1):
    """``[fn(t) for t in tasks]``, optionally spread over processes; order is preserved."""
    tasks = list(tasks)
    workers = min(worker_count(workers), max(1, len(tasks)))
    if workers == 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))
