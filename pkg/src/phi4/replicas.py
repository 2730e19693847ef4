"""Replica chunking and the worker pool

Replicas are cut into fixed index ranges. Every chunk is a pure function
of its range, and results come back in range order, so aggregates never
depend on the number of workers or on scheduling.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional
from tqdm import tqdm
from util.style import BAR_FORMAT

THREADS_ENV = "PHI4_THREADS"


def worker_count() -> int:
    """Worker count from PHI4_THREADS, else the number of CPUs."""
    value = os.environ.get(THREADS_ENV, "")

    if value.strip() == "":
        return max(1, os.cpu_count() or 1)

    try:
        workers = int(value)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} should be an integer, got {value!r}.")
    if workers < 1:
        raise ValueError(f"{THREADS_ENV} should be >= 1, got {workers}.")

    return workers


def chunk_bounds(total: int, chunk: int) -> list[tuple[int, int]]:
    """(start, count) pairs covering range(total)."""
    if total < 1 or chunk < 1:
        raise ValueError("Replica total and chunk size should be >= 1.")
    return [(start, min(chunk, total - start))
            for start in range(0, total, chunk)]


def run_chunked(task: Callable[[int, int], object], total: int, chunk: int,
                workers: Optional[int] = None, verbose: bool = False,
                desc: str = "") -> list:
    """
    Runs task(start, count) over all chunks and returns the results
    in chunk order.
    """
    bounds = chunk_bounds(total, chunk)
    workers = worker_count() if workers is None else workers

    def call(bound):
        return task(*bound)

    if workers == 1 or len(bounds) == 1:
        results = map(call, bounds)
        if verbose:
            results = tqdm(results, total=len(bounds), desc=desc,
                           ascii=True, bar_format=BAR_FORMAT)
        return list(results)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = pool.map(call, bounds)
        if verbose:
            results = tqdm(results, total=len(bounds), desc=desc,
                           ascii=True, bar_format=BAR_FORMAT)
        return list(results)
