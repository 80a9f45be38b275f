"""Column-load analysis, sorting, blocking, hash sizing and hybrid dispatch.

The blocked kernels process several output columns per vector instruction,
so they want neighbouring columns to carry similar work.  This module
computes the per-column multiplication loads, the descending permutation
over them, the block boundaries, a shrinking hash-table size per block and
the split point at which a hybrid run switches from the one-column kernel
to the blocked one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .matrix import CscMatrix

__all__ = [
    "ColumnPlan",
    "compute_ops",
    "sort_columns",
    "plan_blocks",
    "hash_size_schedule",
    "hybrid_split",
    "build_plan",
    "permute_columns",
    "unpermute_columns",
]


@dataclass
class ColumnPlan:
    """Preprocessing output consumed by the blocked kernels.

    ``perm[i]`` is the original index of the column at sorted position ``i``
    (loads descending).  ``blocks`` are half-open ranges in sorted positions
    covering ``[hybrid_split, ncols)``; positions before ``hybrid_split`` are
    handled one column at a time.  ``hash_sizes[b]`` is the power-of-two
    table size for block ``b``.
    """

    ops: np.ndarray
    perm: np.ndarray
    blocks: list[tuple[int, int]]
    hash_sizes: list[int]
    hybrid_split: int
    b_min: int = 1
    b_max: int = 1
    threshold: float = math.inf
    scalar_ops: int = 0  # bookkeeping work spent building this plan, in scalar steps

    @property
    def sorted_ops(self) -> np.ndarray:
        return self.ops[self.perm]

    def to_json_dict(self) -> dict:
        return {
            "ops": self.ops.tolist(),
            "perm": self.perm.tolist(),
            "blocks": [list(b) for b in self.blocks],
            "hash_sizes": self.hash_sizes,
            "hybrid_split": self.hybrid_split,
            "b_min": self.b_min,
            "b_max": self.b_max,
            "threshold": "inf" if math.isinf(self.threshold) else self.threshold,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def compute_ops(A: CscMatrix, B: CscMatrix) -> np.ndarray:
    """Multiplications needed per output column: sum of nnz(A col k) over B's non-zeros."""
    if A.ncols != B.nrows:
        raise InputError("A.ncols must equal B.nrows")
    za = np.diff(A.column_pointers)
    contrib = np.concatenate(([0], np.cumsum(za[B.row_indices])))
    return (contrib[B.column_pointers[1:]] - contrib[B.column_pointers[:-1]]).astype(np.int64)


def sort_columns(ops: np.ndarray) -> np.ndarray:
    """Stable descending permutation: ties keep original column order."""
    return np.argsort(-np.asarray(ops, dtype=np.int64), kind="stable").astype(np.int64)


def plan_blocks(sorted_ops: np.ndarray, b_min: int, b_max: int,
                max_vl: int) -> list[tuple[int, int]]:
    """Greedy block boundaries over descending loads.

    Each block takes b_min columns (fewer only at the very end), then keeps
    extending while the next column's load equals the block's first column's
    load, stopping at b_max columns or the end of the matrix.
    """
    if not (1 <= b_min <= b_max <= max_vl):
        raise InputError(f"need 1 <= b_min <= b_max <= max_vl, got {b_min}, {b_max}, {max_vl}")
    sorted_ops = np.asarray(sorted_ops)
    n = len(sorted_ops)
    blocks = []
    start = 0
    while start < n:
        end = min(start + b_min, n)
        head = sorted_ops[start]
        while end < n and end - start < b_max and sorted_ops[end] == head:
            end += 1
        blocks.append((start, end))
        start = end
    return blocks


def hash_size_schedule(sorted_ops: np.ndarray, blocks: list[tuple[int, int]]) -> list[int]:
    """Power-of-two table size per block, never growing from block to block.

    The size is the smallest power of two strictly greater than the block's
    maximum load, clamped so it can only shrink as blocks get lighter.
    A block of empty columns gets size 1.
    """
    sorted_ops = np.asarray(sorted_ops)
    sizes = []
    prev = None
    for start, end in blocks:
        max_op = int(sorted_ops[start:end].max()) if end > start else 0
        h = 1 << max_op.bit_length()
        if prev is not None:
            h = min(h, prev)
        sizes.append(h)
        prev = h
    return sizes


def hybrid_split(sorted_ops: np.ndarray, t: float) -> int:
    """First sorted position whose load drops below t (length if none does)."""
    sorted_ops = np.asarray(sorted_ops)
    below = np.nonzero(sorted_ops < t)[0]
    return int(below[0]) if below.size else len(sorted_ops)


def build_plan(A: CscMatrix, B: CscMatrix, b_min: int, b_max: int,
               max_vl: int, t: float = math.inf) -> ColumnPlan:
    """Full preprocessing pass for one (A, B) pair.

    Blocks are planned only for the sorted positions past the hybrid split;
    ``t = inf`` blocks everything, ``t = 0`` blocks nothing.
    """
    ops = compute_ops(A, B)
    perm = sort_columns(ops)
    sorted_ops = ops[perm]
    split = hybrid_split(sorted_ops, t)
    blocks = [(s + split, e + split)
              for s, e in plan_blocks(sorted_ops[split:], b_min, b_max, max_vl)]
    sizes = hash_size_schedule(sorted_ops, blocks)
    # one scalar step per non-zero scanned for the loads, per comparison of
    # the O(n log n) sort, and per non-zero plus column moved while permuting
    n = B.ncols
    sort_steps = n * max(1, (n - 1).bit_length()) if n else 0
    scalar = 2 * B.nnz + n + sort_steps
    return ColumnPlan(ops=ops, perm=perm, blocks=blocks, hash_sizes=sizes,
                      hybrid_split=split, b_min=b_min, b_max=b_max, threshold=t,
                      scalar_ops=scalar)


def permute_columns(m: CscMatrix, perm: np.ndarray) -> CscMatrix:
    """New matrix whose column i is m's column perm[i]."""
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(m.ncols)):
        raise InputError("perm must be a permutation of the column indices")
    counts = m.column_nnz()[perm]
    pointers = np.zeros(m.ncols + 1, dtype=np.int64)
    np.cumsum(counts, out=pointers[1:])
    rows = np.empty(m.nnz, dtype=np.int64)
    vals = np.empty(m.nnz, dtype=np.float64)
    for i, j in enumerate(perm):
        lo, hi = m.column_pointers[j], m.column_pointers[j + 1]
        rows[pointers[i]:pointers[i + 1]] = m.row_indices[lo:hi]
        vals[pointers[i]:pointers[i + 1]] = m.values[lo:hi]
    return CscMatrix(m.nrows, m.ncols, pointers, rows, vals, canonical=m.canonical)


def unpermute_columns(m: CscMatrix, perm: np.ndarray) -> CscMatrix:
    """Undo permute_columns: column perm[i] of the result is m's column i."""
    perm = np.asarray(perm, dtype=np.int64)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(len(perm), dtype=np.int64)
    return permute_columns(m, inverse)
