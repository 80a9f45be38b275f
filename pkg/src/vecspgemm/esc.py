"""Expand-sort-compress SpGEMM: materialize products, radix-sort, merge runs.

This pipeline does not use the column-at-a-time accumulator at all.  Columns
are grouped until a group carries enough intermediate products (default
10000), then each group is expanded into (row, col, value) triplets, sorted
by column then row with a vectorized least-significant-digit radix sort, and
compressed by summing equal-key runs.

Counting: the main loop counters track element-walking steps (one trip per
B non-zero during expand, one per histogram and reorder step of each sort
round, one per chunk step of compress, plus the sequential boundary-merge
walk).  Bucket-array housekeeping and CSC pointer fixup are scalar
bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .machine import CostReport, VecEngine
from .matrix import CscMatrix
from .plan import compute_ops

__all__ = [
    "EscTriplets",
    "group_columns",
    "choose_radix",
    "radix_rounds",
    "esc_expand",
    "esc_radix_sort",
    "esc_compress",
    "esc_kernel",
]


@dataclass
class EscTriplets:
    """Parallel arrays of intermediate products with their matrix position."""

    nrows: int
    ncols: int
    id_row: np.ndarray
    id_col: np.ndarray
    esc_val: np.ndarray

    def __post_init__(self):
        if not (len(self.id_row) == len(self.id_col) == len(self.esc_val)):
            raise InputError("triplet arrays must have equal length")

    def __len__(self) -> int:
        return len(self.id_row)


def group_columns(ops: np.ndarray, threshold: int) -> list[tuple[int, int]]:
    """Split columns into consecutive runs carrying >= threshold products each.

    The last group takes whatever remains; empty columns ride along with the
    group that closes after them.
    """
    if threshold < 1:
        raise InputError("group threshold must be >= 1")
    groups = []
    start = 0
    running = 0
    for j, op in enumerate(ops):
        running += int(op)
        if running >= threshold:
            groups.append((start, j + 1))
            start = j + 1
            running = 0
    if start < len(ops):
        groups.append((start, len(ops)))
    return groups


def radix_rounds(N: int, r: int) -> int:
    """Sorting rounds needed for keys below N with an r-bit digit."""
    bits = (N - 1).bit_length() if N > 1 else 0
    return -(-bits // r)


def choose_radix(N: int) -> int:
    """Digit width policy: 5 bits, bumped to 6 only when that saves a round."""
    return 6 if radix_rounds(N, 6) < radix_rounds(N, 5) else 5


def esc_expand(A: CscMatrix, B: CscMatrix, columns,
               engine: VecEngine) -> EscTriplets:
    """Generate every intermediate product for the given B columns, in order."""
    za = np.diff(A.column_pointers)
    total = 0
    for j in columns:
        lo, hi = B.column_pointers[j], B.column_pointers[j + 1]
        total += int(za[B.row_indices[lo:hi]].sum())
    id_row = np.empty(total, dtype=np.int64)
    id_col = np.empty(total, dtype=np.int64)
    esc_val = np.empty(total)
    at = 0
    for j in columns:
        b_lo, b_hi = B.column_pointers[j], B.column_pointers[j + 1]
        for t in range(b_lo, b_hi):
            k = int(B.row_indices[t])
            bkj = float(B.values[t])
            lo, hi = int(A.column_pointers[k]), int(A.column_pointers[k + 1])
            engine.count_loop()
            pos = lo
            while pos < hi:
                vl = engine.set_vl(hi - pos)
                va = engine.load(A.values, pos)
                vrows = engine.load(A.row_indices, pos)
                vprod = engine.fma(None, va, bkj)
                engine.store(esc_val, at, vprod)
                engine.store(id_row, at, vrows)
                engine.store(id_col, at, engine.broadcast(j))
                pos += vl
                at += vl
    return EscTriplets(A.nrows, B.ncols, id_row, id_col, esc_val)


def _radix_pass(eng: VecEngine, keys, pay1, pay2, shift: int, r: int):
    """One stable counting-sort round on an r-bit digit of the keys.

    Each lane owns a contiguous chunk of the input and its own 2**r buckets
    (bucket cell = digit * VL + lane, so histogram updates never clash).
    Returns freshly allocated reordered arrays.
    """
    k = len(keys)
    vl = eng.set_vl(min(k, eng.max_vl))
    q = -(-k // vl)
    counts = np.zeros(vl << r, dtype=np.int64)
    lanes = eng.iota()
    for s in range(q):
        eng.count_loop()
        vpos = eng.index_fma(lanes, q, s)
        vm = eng.compare_make_mask(vpos, "<", k)
        vkey = eng.gather(keys, vpos, vm)
        vdig = eng.extract_bits(vkey, shift, r)
        vbkt = eng.index_fma(vdig, vl, lanes)
        vcnt = eng.gather(counts, vbkt, vm)
        vcnt = eng.add(vcnt, 1, vm)
        eng.scatter(counts, vbkt, vcnt, vm)
    carry = 0
    for c in range(0, vl << r, vl):
        vchunk = eng.load(counts, c)
        vexc, total = eng.scan_exclusive(vchunk)
        vexc = eng.add(vexc, carry)
        eng.store(counts, c, vexc)
        carry += total
    out_keys = np.empty_like(keys)
    out_pay1 = np.empty_like(pay1)
    out_pay2 = np.empty_like(pay2)
    for s in range(q):
        eng.count_loop()
        vpos = eng.index_fma(lanes, q, s)
        vm = eng.compare_make_mask(vpos, "<", k)
        vkey = eng.gather(keys, vpos, vm)
        vdig = eng.extract_bits(vkey, shift, r)
        vbkt = eng.index_fma(vdig, vl, lanes)
        vdst = eng.gather(counts, vbkt, vm)
        eng.scatter(out_keys, vdst, vkey, vm)
        v1 = eng.gather(pay1, vpos, vm)
        eng.scatter(out_pay1, vdst, v1, vm)
        v2 = eng.gather(pay2, vpos, vm)
        eng.scatter(out_pay2, vdst, v2, vm)
        vdst = eng.add(vdst, 1, vm)
        eng.scatter(counts, vbkt, vdst, vm)
    return out_keys, out_pay1, out_pay2


def esc_radix_sort(t: EscTriplets, engine: VecEngine,
                   r: int | None = None) -> EscTriplets:
    """Stable sort of the triplets by (id_col, id_row).

    Rows are sorted first, columns second; being stable, the second phase
    preserves row order inside each column.  ``r`` fixes the digit width for
    both phases; by default each phase picks its own via :func:`choose_radix`.
    """
    if len(t) == 0:
        return t
    rows, cols, vals = t.id_row, t.id_col, t.esc_val
    for keys_name, bound in (("row", t.nrows), ("col", t.ncols)):
        digit = choose_radix(bound) if r is None else r
        for rnd in range(radix_rounds(bound, digit)):
            if keys_name == "row":
                rows, cols, vals = _radix_pass(engine, rows, cols, vals,
                                               rnd * digit, digit)
            else:
                cols, rows, vals = _radix_pass(engine, cols, rows, vals,
                                               rnd * digit, digit)
    return EscTriplets(t.nrows, t.ncols, rows, cols, vals)


def esc_compress(t: EscTriplets, engine: VecEngine,
                 out: "CscAccumulator") -> int:
    """Sum equal-key runs of sorted triplets and append them to ``out``.

    Each lane walks its own contiguous chunk, emitting finished runs into a
    private output area; runs spanning two lanes' chunks are merged by one
    sequential walk at the end, and the survivors are copied out with
    contiguous vector loads and stores.
    """
    eng = engine
    k = len(t)
    if k == 0:
        return 0
    vl = eng.set_vl(min(k, eng.max_vl))
    q = -(-k // vl)
    lanes = eng.iota()
    prev_row = eng.broadcast(-1)
    prev_col = eng.broadcast(-1)
    acc = eng.broadcast(0.0)
    n_runs = eng.broadcast(0)
    seen = eng.compare_make_mask(lanes, "<", 0)       # all false
    run_rows = np.zeros(k, dtype=np.int64)
    run_cols = np.zeros(k, dtype=np.int64)
    run_vals = np.zeros(k)
    for s in range(q):
        eng.count_loop()
        vpos = eng.index_fma(lanes, q, s)
        vm = eng.compare_make_mask(vpos, "<", k)
        vrow = eng.gather(t.id_row, vpos, vm)
        vcol = eng.gather(t.id_col, vpos, vm)
        vval = eng.gather(t.esc_val, vpos, vm)
        vsame = eng.mask_and(eng.compare_make_mask(vrow, "==", prev_row, vm),
                             eng.compare_make_mask(vcol, "==", prev_col, vm))
        vnew = eng.mask_and(vm, eng.mask_not(vsame))
        vflush = eng.mask_and(vnew, seen)
        vw = eng.index_fma(lanes, q, n_runs, vflush)
        eng.scatter(run_rows, vw, prev_row, vflush)
        eng.scatter(run_cols, vw, prev_col, vflush)
        eng.scatter(run_vals, vw, acc, vflush)
        n_runs = eng.add(n_runs, 1, vflush)
        acc = eng.select(vnew, vval, eng.add(acc, vval, vsame))
        prev_row = eng.select(vnew, vrow, prev_row)
        prev_col = eng.select(vnew, vcol, prev_col)
        seen = eng.mask_or(seen, vm)
    vw = eng.index_fma(lanes, q, n_runs, seen)        # flush the open runs
    eng.scatter(run_rows, vw, prev_row, seen)
    eng.scatter(run_cols, vw, prev_col, seen)
    eng.scatter(run_vals, vw, acc, seen)
    n_runs = eng.add(n_runs, 1, seen)

    # sequential pass over lane boundaries: neighbouring lanes may have split
    # one run in two
    segments = [(p * q, int(n_runs[p])) for p in range(vl) if int(n_runs[p])]
    eng.count_loop(len(segments))
    rows = np.concatenate([run_rows[o:o + c] for o, c in segments])
    cols = np.concatenate([run_cols[o:o + c] for o, c in segments])
    vals = np.concatenate([run_vals[o:o + c] for o, c in segments])
    fresh = np.empty(len(rows), dtype=bool)
    fresh[0] = True
    fresh[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    starts = np.nonzero(fresh)[0]
    rows, cols = rows[starts], cols[starts]
    vals = np.add.reduceat(vals, starts)

    total = len(rows)
    dst_rows = np.empty(total, dtype=np.int64)
    dst_vals = np.empty(total)
    pos = 0
    while pos < total:                     # store survivors sequentially into C
        cvl = eng.set_vl(total - pos)
        eng.store(dst_rows, pos, eng.load(rows, pos))
        eng.store(dst_vals, pos, eng.load(vals, pos))
        pos += cvl
    out.extend(dst_rows, cols, dst_vals)
    return total


class CscAccumulator:
    """Append-only collector turning sorted (row, col, value) runs into CSC."""

    def __init__(self, nrows: int, ncols: int):
        self.nrows = nrows
        self.ncols = ncols
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []

    def extend(self, rows, cols, vals):
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(vals)

    def to_matrix(self) -> CscMatrix:
        rows = np.concatenate(self._rows) if self._rows else np.empty(0, dtype=np.int64)
        cols = np.concatenate(self._cols) if self._cols else np.empty(0, dtype=np.int64)
        vals = np.concatenate(self._vals) if self._vals else np.empty(0)
        pointers = np.zeros(self.ncols + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=self.ncols), out=pointers[1:])
        return CscMatrix(self.nrows, self.ncols, pointers, rows, vals, canonical=True)


def esc_kernel(A: CscMatrix, B: CscMatrix, group_threshold: int = 10000,
               engine: VecEngine | None = None,
               r: int | None = None) -> tuple[CscMatrix, CostReport]:
    """Full expand-sort-compress product over greedy column groups."""
    if A.ncols != B.nrows:
        raise InputError(f"shape mismatch: A is {A.nrows}x{A.ncols}, B is {B.nrows}x{B.ncols}")
    if engine is None:
        engine = VecEngine()
    ops = compute_ops(A, B)
    out = CscAccumulator(A.nrows, B.ncols)
    for start, end in group_columns(ops, group_threshold):
        triplets = esc_expand(A, B, range(start, end), engine)
        if len(triplets) == 0:
            continue
        esc_compress(esc_radix_sort(triplets, engine, r=r), engine, out)
    return out.to_matrix(), engine.report.copy()
