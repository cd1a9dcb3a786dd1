"""Thread-pool helper honouring the ``BERGKERN_THREADS`` cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    cpus = os.cpu_count() or 1
    raw = os.environ.get("BERGKERN_THREADS", "").strip()
    if not raw:
        return cpus
    try:
        cap = int(raw)
    except ValueError:
        return 1
    return max(1, min(cap, cpus))


def parallel_map(fn, items):
    """Map ``fn`` over ``items`` preserving input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
