"""Bounded fan-out of blocking fits onto worker threads."""

import asyncio
import logging
import os
from typing import Callable, List, Optional, Sequence, TypeVar

from ..constants import ENV_THREADS

logger = logging.getLogger(__name__)

T = TypeVar("T")


def worker_count(threads: Optional[int] = None) -> int:
    """Explicit value, else RELUBOOT_THREADS, else 1."""
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.getenv(ENV_THREADS, "1")))
    except ValueError:
        logger.warning(f"Ignoring non-integer {ENV_THREADS}={os.getenv(ENV_THREADS)!r}")
        return 1


async def gather_bounded(
    jobs: Sequence[Callable[[], T]],
    threads: Optional[int] = None,
) -> List[T]:
    """
    Run blocking callables, at most `threads` at a time.

    Results come back in job order regardless of completion order, so
    aggregation never depends on scheduling. With one worker the jobs run
    inline on the event loop thread.
    """
    limit = worker_count(threads)
    if limit == 1:
        return [job() for job in jobs]

    semaphore = asyncio.Semaphore(limit)

    async def run(job: Callable[[], T]) -> T:
        async with semaphore:
            return await asyncio.to_thread(job)

    return list(await asyncio.gather(*(run(job) for job in jobs)))
