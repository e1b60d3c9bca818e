from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    return os.cpu_count() or 1


def blocks(n_items: int, size: int) -> list[range]:
    """Fixed-size index blocks; the partition never depends on the worker count."""
    return [range(i, min(i + size, n_items)) for i in range(0, n_items, size)]


def map_blocks(fn, parts, threads: int | None = None) -> list:
    """Apply fn to each part and return results in part order."""
    threads = threads or default_threads()
    if threads <= 1 or len(parts) <= 1:
        return [fn(p) for p in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, parts))
