"""Seed derivation and worker-count resolution shared by every module."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
DEFAULT_SEED = 42


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 finalizer on a 64-bit integer."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, task_index: int) -> int:
    """Derive the seed of sub-task ``task_index`` from ``master_seed``.

    ``child = splitmix64(master ^ splitmix64(task_index))``. The result only
    depends on the pair, so serial and parallel schedules draw identical
    streams.
    """
    return splitmix64((master_seed & MASK64) ^ splitmix64(task_index & MASK64))


def to_kernel_seed(seed: int) -> int:
    """Fold an arbitrary Python int into the signed 64-bit range numba accepts."""
    s = seed & MASK64
    return s - (1 << 64) if s >= (1 << 63) else s


def resolve_workers(workers: int | None = None) -> int:
    if workers is not None and workers > 0:
        return workers
    env = os.environ.get("ENTROPY_BENCH_WORKERS")
    if env:
        try:
            value = int(env)
        except ValueError:
            value = 0
        if value > 0:
            return value
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Ordered map over ``items``; threads are enough because kernels drop the GIL."""
    items = list(items)
    n = min(resolve_workers(workers), max(len(items), 1))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
