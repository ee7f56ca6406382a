"""Sparse-table range-minimum index over a fixed float array.

Build is O(n log n); every query is O(1). Ties resolve to the smallest index,
which keeps downstream constructions deterministic.
"""

from __future__ import annotations

import numpy as np

__all__ = ["MinIndexTable"]


class MinIndexTable:
    """Answers argmin over inclusive index ranges of a frozen value array."""

    def __init__(self, values: np.ndarray):
        v = np.ascontiguousarray(values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-d array")
        self.values = v
        n = v.size
        table = [np.arange(n, dtype=np.int64)]
        width = 1
        while 2 * width <= n:
            prev = table[-1]
            m = n - 2 * width + 1
            left = prev[:m]
            right = prev[width:width + m]
            # strict < keeps the left (smaller-index) candidate on ties
            table.append(np.where(v[right] < v[left], right, left))
            width *= 2
        self._table = table

    def argmin(self, lo: int, hi: int) -> int:
        """Index of the minimum of values[lo:hi+1], smallest index on ties."""
        if lo > hi:
            raise ValueError(f"empty range [{lo}, {hi}]")
        if lo < 0 or hi >= self.values.size:
            raise ValueError(f"range [{lo}, {hi}] out of bounds")
        if lo == hi:
            return int(lo)
        k = (hi - lo + 1).bit_length() - 1
        t = self._table[k]
        a = int(t[lo])
        b = int(t[hi - (1 << k) + 1])
        # a comes from the left-aligned block, so on equal values a <= b
        return a if self.values[a] <= self.values[b] else b

    def argmin_batch(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Vectorized argmin over many inclusive ranges."""
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        if np.any(lo > hi):
            raise ValueError("empty range in batch query")
        if np.any(lo < 0) or np.any(hi >= self.values.size):
            raise ValueError("range out of bounds in batch query")
        span = hi - lo + 1
        # per-element bit_length - 1: frexp exponent is exact for spans < 2**53
        k = np.frexp(span.astype(np.float64))[1] - 1
        out = np.empty(lo.shape, dtype=np.int64)
        for level in np.unique(k):
            mask = k == level
            t = self._table[int(level)]
            a = t[lo[mask]]
            b = t[hi[mask] - (1 << int(level)) + 1]
            out[mask] = np.where(self.values[b] < self.values[a], b, a)
        return out

    def min(self, lo: int, hi: int) -> float:
        return float(self.values[self.argmin(lo, hi)])
