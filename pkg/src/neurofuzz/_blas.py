"""BLAS thread-pool control.

numpy and scipy each ship their own OpenBLAS; letting both pools spin up
around the small matrices used here costs far more in synchronization than
the math itself.  Training loops therefore pin BLAS to one thread; outer
parallelism (NEUROFUZZ_THREADS evaluation workers) stays ours.
"""

from __future__ import annotations

from contextlib import contextmanager

from threadpoolctl import threadpool_limits


@contextmanager
def single_thread_blas():
    with threadpool_limits(limits=1, user_api="blas"):
        yield
