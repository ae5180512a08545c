"""
Shared thread pool used by the series evaluator and the trace/scan commands
"""

from __future__ import annotations

import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "WELL_ECHO_THREADS"

T = TypeVar("T")
R = TypeVar("R")

_executor: Optional[ThreadPoolExecutor] = None
_executor_lock = threading.Lock()
_requested_workers: Optional[int] = None


def worker_count() -> int:
    """
    Number of worker threads the shared pool runs with

    Returns:
        int: cpu count, capped by WELL_ECHO_THREADS or an explicit request
    """
    workers = os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", THREADS_ENV_VAR, cap)
    elif _requested_workers is not None:
        workers = min(workers, _requested_workers)
    return workers


def configure_workers(count: Optional[int]):
    """
    Request a worker count (the env var still wins)

    Args:
        count: Desired number of threads, or None for the cpu count
    """
    global _requested_workers, _executor
    with _executor_lock:
        _requested_workers = None if count is None else max(1, int(count))
        if _executor is not None:
            _executor.shutdown(wait=True)
            _executor = None


def get_executor() -> ThreadPoolExecutor:
    """Return the lazily created process-wide executor"""
    global _executor
    with _executor_lock:
        if _executor is None:
            _executor = ThreadPoolExecutor(max_workers=worker_count(),
                                           thread_name_prefix="well-echo")
            logger.debug("Thread pool started with %d workers", worker_count())
        return _executor


def parallel_map(func: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """
    Map func over items on the shared pool, preserving order

    Falls back to a plain loop when only one worker is available so that
    nested calls from inside a worker never deadlock the pool.
    """
    items = list(items)
    if len(items) <= 1 or worker_count() == 1 or _in_worker():
        return [func(item) for item in items]
    return list(get_executor().map(func, items))


def _in_worker() -> bool:
    return threading.current_thread().name.startswith("well-echo")
