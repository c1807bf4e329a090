"""Bounded fork-join execution with worker-count independent results."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

# Fixed work granularity.  Chunk boundaries never depend on the number of
# workers, which is what keeps reductions bit-identical across thread counts.
CHUNK = 1 << 15


def chunk_slices(n: int, size: int = CHUNK) -> list[slice]:
    return [slice(lo, min(lo + size, n)) for lo in range(0, n, size)]


def tree_sum(values) -> float:
    """Pairwise sum with a topology fixed by ``len(values)`` alone."""
    vals = [float(v) for v in values]
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


class ParallelExecutor:
    """Thread pool used for data-parallel loops over plate elements.

    numpy releases the GIL inside its inner loops, so chunks evaluated on
    different threads overlap.  With ``workers == 1`` everything runs
    inline on the calling thread.
    """

    def __init__(self, workers: int | None = None):
        if workers is None:
            workers = os.cpu_count() or 1
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = workers
        self._pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def map(self, fn, items) -> list:
        items = list(items)
        if self._pool is None or len(items) < 2:
            return [fn(it) for it in items]
        return list(self._pool.map(fn, items))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


_SERIAL = None


def serial() -> ParallelExecutor:
    global _SERIAL
    if _SERIAL is None:
        _SERIAL = ParallelExecutor(1)
    return _SERIAL
