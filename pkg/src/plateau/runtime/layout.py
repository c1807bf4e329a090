"""Flat storage layout of plated (possibly ragged) arrays."""
from __future__ import annotations

import numpy as np

from ..errors import DataError


def expand_levels(levels, size_of, idx=None, n=1):
    """Enumerate index tuples of nested plates in row-major order.

    ``levels`` is a sequence of (name, upper); ``size_of(upper, idx, n)``
    returns the bound for each current row.  Returns ``(idx, n, parents)``
    where ``parents[k]`` maps rows after level ``k`` to rows before it.
    """
    idx = dict(idx or {})
    parents = []
    for name, upper in levels:
        sizes = np.broadcast_to(np.asarray(size_of(upper, idx, n), dtype=np.int64), (n,))
        if sizes.size and sizes.min() < 0:
            raise DataError(f"negative plate size for index {name}")
        parent = np.repeat(np.arange(n, dtype=np.int64), sizes)
        starts = np.cumsum(sizes) - sizes
        local = np.arange(parent.size, dtype=np.int64) - starts[parent]
        idx = {k: v[parent] for k, v in idx.items()}
        idx[name] = local
        n = int(parent.size)
        parents.append((sizes, starts))
    return idx, n, parents


class Layout:
    """Element positions of one variable in its flat array."""

    def __init__(self, names, idx, n, parents, event=None):
        self.names = tuple(names)
        self.idx = idx          # index arrays per dimension, one entry per element
        self.n = n
        self.sizes = [p[0] for p in parents]
        self.offsets = [p[1] for p in parents]
        self.event = event      # vector length for vector-valued variables

    @property
    def shape(self) -> tuple:
        return (self.n,) if self.event is None else (self.n, self.event)

    def positions(self, indices, n):
        """Flat element positions for index arrays, with bounds checks."""
        if len(indices) != len(self.names):
            raise DataError(f"expected {len(self.names)} indices, got {len(indices)}")
        pos = None
        for k, ix in enumerate(indices):
            ix = np.asarray(ix)
            if ix.ndim == 0:
                ix = np.full(n, ix)
            if ix.dtype.kind not in "iu":
                raise DataError("index expression is not integer valued")
            if pos is None:
                size = self.sizes[0][0] if self.sizes[0].size else 0
                if n and (ix.min() < 0 or ix.max() >= size):
                    bad = int(np.flatnonzero((ix < 0) | (ix >= size))[0])
                    raise DataError(f"index {int(ix[bad])} out of range {int(size)} "
                                    f"for dimension {self.names[0]}")
                pos = ix
                continue
            size = self.sizes[k][pos]
            if n and (ix.min() < 0 or np.any(ix >= size)):
                bad = int(np.flatnonzero((ix < 0) | (ix >= size))[0])
                raise DataError(f"index {int(ix[bad])} out of range {int(size[bad])} "
                                f"for dimension {self.names[k]}")
            pos = self.offsets[k][pos] + ix
        if pos is None:
            return np.zeros(n, dtype=np.int64)
        return pos

    def in_range(self, indices, n):
        """Mask of rows whose indices address an element."""
        ok = np.ones(n, dtype=bool)
        pos = np.zeros(n, dtype=np.int64)
        for k, ix in enumerate(indices):
            ix = np.broadcast_to(np.asarray(ix), (n,))
            size = self.sizes[k][pos]
            ok &= (ix >= 0) & (ix < size)
            pos = np.where(ok, self.offsets[k][pos] + ix, 0)
        return ok
