"""Order-normalized parallel map over picklable tasks.

Workers receive immutable arguments and return value objects; results are
returned in task order, so output never depends on the worker count or on
scheduling.  With threads <= 1 everything runs in-process.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_threads() -> int:
    env = os.environ.get("MEANDENSE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, tasks, threads: int = 1) -> list:
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
