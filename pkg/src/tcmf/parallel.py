"""Worker-thread helpers honoring the TCMF_THREADS cap.

Per-source steps are independent, so they may run on a thread pool.  Results
are always collected in input order and reduced sequentially, which keeps
every computation bit-reproducible regardless of thread count.
"""

import os
import threading
from concurrent.futures import ThreadPoolExecutor

_lock = threading.Lock()
_pool = None
_pool_size = 0


def worker_count(n_items: int) -> int:
    """Effective worker count for n_items tasks under TCMF_THREADS (0 = auto)."""
    raw = os.environ.get("TCMF_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap <= 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_items))


def _shared_pool(workers: int) -> ThreadPoolExecutor:
    # one lazily built pool, grown if a wider request arrives
    global _pool, _pool_size
    with _lock:
        if _pool is None or _pool_size < workers:
            if _pool is not None:
                _pool.shutdown(wait=False)
            _pool = ThreadPoolExecutor(max_workers=workers)
            _pool_size = workers
        return _pool


def thread_map(fn, items):
    """Map fn over items, in parallel when allowed; output order == input order."""
    items = list(items)
    workers = worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    return list(_shared_pool(workers).map(fn, items))
