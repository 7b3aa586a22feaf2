"""Deterministic block scheduling shared by the pair-sweep kernels.

Work is split into fixed center blocks whose boundaries depend only on the
problem size, never on the worker count.  Results are consumed in block
order and reduced with compensated summation, so a run with 1 worker and a
run with K workers produce bit-identical output; threads only change how the
blocks are interleaved in time.  numpy's sort and ufunc kernels release the
GIL, which is where the wall-clock speedup comes from.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = ["block_ranges", "map_blocks", "neumaier_sum", "merge_sorted_pairs", "tree_merge"]

DEFAULT_BLOCK = 256


def block_ranges(n: int, block_size: int = DEFAULT_BLOCK) -> list[tuple[int, int]]:
    """Fixed [lo, hi) center blocks covering range(n)."""
    block_size = max(1, int(block_size))
    return [(lo, min(lo + block_size, n)) for lo in range(0, n, block_size)]


def map_blocks(fn: Callable, blocks: Sequence, workers: int = 1) -> list:
    """Apply fn to each block, returning results in block order.

    With workers <= 1 this is a plain loop; otherwise a thread pool runs the
    blocks concurrently.  Either way the returned list follows the input
    order, so downstream reductions are order-stable.
    """
    if workers is None or workers <= 1 or len(blocks) <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, blocks))


def neumaier_sum(parts: Iterable[float]) -> float:
    """Compensated sum of the given partials, in iteration order."""
    total = 0.0
    comp = 0.0
    for x in parts:
        x = float(x)
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        total = t
    return total + comp


def merge_sorted_pairs(a: tuple[np.ndarray, np.ndarray],
                       b: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Stable merge of two ascending (values, payload) pairs.

    Elements of ``a`` precede equal-valued elements of ``b``, so merging
    block results in block order reproduces one global stable sort.
    """
    va, wa = a
    vb, wb = b
    if va.shape[0] == 0:
        return vb, wb
    if vb.shape[0] == 0:
        return va, wa
    pos_a = np.searchsorted(vb, va, side="left") + np.arange(va.shape[0])
    pos_b = np.searchsorted(va, vb, side="right") + np.arange(vb.shape[0])
    v = np.empty(va.shape[0] + vb.shape[0], dtype=va.dtype)
    w = np.empty_like(v)
    v[pos_a] = va
    w[pos_a] = wa
    v[pos_b] = vb
    w[pos_b] = wb
    return v, w


def tree_merge(parts: list[tuple[np.ndarray, np.ndarray]],
               workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Merge block-local sorted runs into one ascending run.

    The pairing tree is fixed by the list order (adjacent pairs per level),
    so the result is identical for any worker count.
    """
    if not parts:
        return np.empty(0), np.empty(0)
    level = list(parts)
    while len(level) > 1:
        pairs = [(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        merged = map_blocks(lambda ab: merge_sorted_pairs(ab[0], ab[1]), pairs, workers)
        if len(level) % 2 == 1:
            merged.append(level[-1])
        level = merged
    return level[0]
