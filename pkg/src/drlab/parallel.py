"""Deterministic map helper honouring the DRLAB_THREADS environment variable."""

from concurrent.futures import ThreadPoolExecutor
import os


def thread_count():
    raw = os.environ.get("DRLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"DRLAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"DRLAB_THREADS must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items):
    """Map ``fn`` over ``items`` keeping input order; sequential unless DRLAB_THREADS > 1."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
