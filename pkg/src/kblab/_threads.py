"""Worker-count control: KB_THREADS sets the compiled-kernel threads, BLAS stays single-threaded.

Compiled kernels parallelise over velocity rows with disjoint writes and a
fixed accumulation order inside each row, so their output does not depend on
the thread count.  BLAS reductions can change order with the thread count,
hence BLAS is pinned to one thread whatever KB_THREADS says.
"""
from __future__ import annotations

import contextlib
import os

ENV_VAR = "KB_THREADS"


def requested_threads(environ=None) -> int | None:
    """Thread count from KB_THREADS, or None when unset; invalid values raise ValueError."""
    raw = (os.environ if environ is None else environ).get(ENV_VAR)
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return n


@contextlib.contextmanager
def thread_scope(n: int | None = None):
    """Run the body with ``n`` compiled-kernel threads (capped at the pool size) and one BLAS thread."""
    import numba
    from threadpoolctl import threadpool_limits

    if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    previous = numba.get_num_threads()
    if n is not None:
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    try:
        with threadpool_limits(limits=1, user_api="blas"):
            yield numba.get_num_threads()
    finally:
        numba.set_num_threads(previous)
