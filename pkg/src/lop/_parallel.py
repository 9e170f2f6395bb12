import os
from concurrent.futures import ThreadPoolExecutor


def resolve_threads(n_jobs=None):
    """Number of worker threads: explicit value, else ``LOP_THREADS``, else 1."""
    if n_jobs is None:
        env = os.environ.get("LOP_THREADS")
        n_jobs = int(env) if env else 1
    n_jobs = int(n_jobs)
    if n_jobs == -1:
        n_jobs = os.cpu_count() or 1
    if n_jobs < 1:
        raise ValueError(f"thread count must be >= 1 or -1, got {n_jobs}")
    return n_jobs


def ordered_map(func, items, n_jobs=None):
    """Map ``func`` over ``items``; results keep input order for any thread count."""
    items = list(items)
    n_jobs = resolve_threads(n_jobs)
    if n_jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(func, items))
