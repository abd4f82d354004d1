import os
from concurrent.futures import ProcessPoolExecutor


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("BUSEMANN_THREADS", "1")))
    except ValueError:
        return 1


def pmap(func, items):
    """Ordered map; fans out to worker processes when BUSEMANN_THREADS > 1."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
