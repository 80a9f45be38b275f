"""Gustavson-family SpGEMM kernels expressed against the vector engine.

Four kernels live here:

* ``spa_kernel``        -- one output column at a time; the vector length of
  each step is the non-zero count of the A column being scaled.
* ``spars_kernel``      -- one output column per lane; columns are sorted by
  load and processed in blocks, with per-lane dense accumulators.
* ``hash_kernel``       -- like ``spars_kernel`` but accumulating into
  per-lane linear-probing hash tables whose size shrinks across blocks.
* ``hybrid_kernel``     -- heavy sorted columns go through the one-column
  routine, the light tail through the blocked one, on a single engine.

Every kernel returns ``(CscMatrix, CostReport)``.  Output columns list rows
in first-touch order (compare after ``canonicalize()``); entries whose sum
cancelled to exactly zero are kept, as the accumulator counts touched rows,
not surviving values.  Kernels expect a fresh engine per invocation.

Scalar bookkeeping (array allocation, reading per-lane counts at column
emission, permutation of the output) is not modelled as vector work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, InternalError
from .machine import CostReport, VecEngine
from .matrix import CscMatrix
from .plan import ColumnPlan, build_plan, permute_columns, unpermute_columns

__all__ = [
    "DEFAULT_HASH_C",
    "SpaAccumulator",
    "HashTable",
    "spa_kernel",
    "spars_kernel",
    "hash_kernel",
    "hybrid_kernel",
]

# Knuth-style odd multiplicative constant; the table size is a power of two,
# so the modulo reduction is a bitmask.
DEFAULT_HASH_C = 2654435761


def _check_dims(A: CscMatrix, B: CscMatrix):
    if A.ncols != B.nrows:
        raise InputError(f"shape mismatch: A is {A.nrows}x{A.ncols}, B is {B.nrows}x{B.ncols}")


def _check_plan(plan: ColumnPlan, B: CscMatrix):
    if len(plan.ops) != B.ncols:
        raise InputError(f"plan covers {len(plan.ops)} columns, matrix has {B.ncols}")


def _assemble(nrows: int, ncols: int, col_rows: list, col_vals: list) -> CscMatrix:
    pointers = np.zeros(ncols + 1, dtype=np.int64)
    np.cumsum([len(r) for r in col_rows], out=pointers[1:])
    rows = np.concatenate(col_rows) if col_rows else np.empty(0, dtype=np.int64)
    vals = np.concatenate(col_vals) if col_vals else np.empty(0, dtype=np.float64)
    return CscMatrix(nrows, ncols, pointers, rows, vals)


_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


def _live(mask) -> bool:
    return bool(np.count_nonzero(mask))


# ---------------------------------------------------------------------------
# SPA: one column at a time
# ---------------------------------------------------------------------------

@dataclass
class SpaAccumulator:
    """Dense accumulator for one output column.

    ``indices[:counter]`` lists the touched rows in first-touch order; a row
    is flagged the first time it receives a contribution.  Reset happens by
    walking that list, so the cost of a column stays proportional to its work.
    """

    nrows: int
    values: np.ndarray = field(init=False)
    flags: np.ndarray = field(init=False)
    indices: np.ndarray = field(init=False)
    counter: int = field(init=False, default=0)

    def __post_init__(self):
        self.values = np.zeros(self.nrows)
        self.flags = np.zeros(self.nrows, dtype=np.int64)
        self.indices = np.zeros(self.nrows, dtype=np.int64)


def _spa_column(eng: VecEngine, A: CscMatrix, B: CscMatrix, j: int,
                spa: SpaAccumulator) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate and emit output column j of A @ B. One loop trip per B non-zero."""
    b_lo, b_hi = B.column_pointers[j], B.column_pointers[j + 1]
    for t in range(b_lo, b_hi):
        k = int(B.row_indices[t])
        bkj = float(B.values[t])
        lo, hi = int(A.column_pointers[k]), int(A.column_pointers[k + 1])
        eng.count_loop()
        pos = lo
        while pos < hi:                       # columns wider than max_vl take several passes
            vl = eng.set_vl(hi - pos)
            va = eng.load(A.values, pos)
            vrows = eng.load(A.row_indices, pos)
            vacc = eng.gather(spa.values, vrows)
            vflags = eng.gather(spa.flags, vrows)
            vacc = eng.fma(vacc, va, bkj)
            eng.scatter(spa.values, vrows, vacc)
            fresh = eng.compare_make_mask(vflags, "==", 0)
            spa.counter += eng.compress_store(None, vrows, fresh,
                                              None, spa.indices, spa.counter)
            eng.scatter(spa.flags, vrows, eng.broadcast(1), fresh)
            pos += vl
    return _spa_emit(eng, spa)


def _spa_emit(eng: VecEngine, spa: SpaAccumulator) -> tuple[np.ndarray, np.ndarray]:
    """Store the touched rows and values contiguously, resetting as we go."""
    cnt = spa.counter
    if cnt == 0:
        return _EMPTY_I, _EMPTY_F
    out_rows = np.empty(cnt, dtype=np.int64)
    out_vals = np.empty(cnt)
    pos = 0
    while pos < cnt:
        vl = eng.set_vl(cnt - pos)
        vrows = eng.load(spa.indices, pos)
        vvals = eng.gather(spa.values, vrows)
        eng.store(out_rows, pos, vrows)
        eng.store(out_vals, pos, vvals)
        eng.scatter(spa.values, vrows, eng.broadcast(0.0))
        eng.scatter(spa.flags, vrows, eng.broadcast(0))
        pos += vl
    spa.counter = 0
    return out_rows, out_vals


def spa_kernel(A: CscMatrix, B: CscMatrix,
               engine: VecEngine) -> tuple[CscMatrix, CostReport]:
    """Column-by-column product; executes exactly nnz(B) main-loop trips."""
    _check_dims(A, B)
    spa = SpaAccumulator(A.nrows)
    col_rows, col_vals = [], []
    for j in range(B.ncols):
        rows, vals = _spa_column(engine, A, B, j, spa)
        col_rows.append(rows)
        col_vals.append(vals)
    return _assemble(A.nrows, B.ncols, col_rows, col_vals), engine.report.copy()


# ---------------------------------------------------------------------------
# Blocked kernels: SPARS and HASH
# ---------------------------------------------------------------------------

class HashTable:
    """Scalar reference of one lane's probe discipline, for tests and docs.

    Two parallel arrays of power-of-two size ``H`` hold values and row
    indices; empty cells carry ``sentinel`` (one past any valid row).  A row
    hashes to ``(row * c) & (H - 1)`` and walks forward, wrapping, until it
    finds itself (accumulate) or an empty cell (insert).
    """

    def __init__(self, H: int, sentinel: int, c: int = DEFAULT_HASH_C):
        if H & (H - 1):
            raise InputError("hash table size must be a power of two")
        self.H = H
        self.c = c
        self.sentinel = sentinel
        self.hvalues = np.zeros(H)
        self.hindices = np.full(H, sentinel, dtype=np.int64)
        self.fill = 0

    def probe(self, row: int) -> tuple[int, int]:
        """Cell for ``row`` plus the number of extra probe steps taken."""
        cell = (row * self.c) & (self.H - 1)
        steps = 0
        while self.hindices[cell] != self.sentinel and self.hindices[cell] != row:
            cell = (cell + 1) & (self.H - 1)
            steps += 1
            if steps > self.H:
                raise InternalError("hash table full")
        return cell, steps

    def accumulate(self, row: int, value: float) -> int:
        cell, steps = self.probe(row)
        if self.hindices[cell] == self.sentinel:
            if self.fill + 1 >= self.H:
                raise InternalError("hash table full")
            self.hindices[cell] = row
            self.fill += 1
        self.hvalues[cell] += value
        return steps


@dataclass
class _BlockState:
    """Per-invocation scratch shared by all blocks of a blocked run."""

    svals: np.ndarray | None = None     # dense values, lane-strided (SPARS)
    sflags: np.ndarray | None = None
    sidx: np.ndarray | None = None      # per-lane touched-row lists
    hvals: np.ndarray | None = None     # hash cells, lane-strided (HASH)
    hidx: np.ndarray | None = None
    hocc: np.ndarray | None = None      # per-lane occupied-cell lists


def _advance_past_barren(eng, Bp, za, vIdx, vEnd, vMask):
    """Step lane cursors over B entries whose A column is empty.

    Those entries produce no multiplications; skipping them keeps one loop
    trip equal to one product per enabled lane.  Returns the gathered source
    row of B and the A-column length for every still-enabled lane.
    """
    vBrow = eng.gather(Bp.row_indices, vIdx, vMask)
    vAcnt = eng.gather(za, vBrow, vMask)
    vBarren = eng.compare_make_mask(vAcnt, "==", 0, vMask)
    while _live(vBarren):
        vIdx = eng.add(vIdx, 1, vBarren)
        vMask = eng.compare_make_mask(vIdx, "<", vEnd, vMask)
        vBrow = eng.gather(Bp.row_indices, vIdx, vMask)
        vAcnt = eng.gather(za, vBrow, vMask)
        vBarren = eng.compare_make_mask(vAcnt, "==", 0, vMask)
    return vIdx, vMask, vBrow, vAcnt


def _emit_lane(eng, vlen, lane, cnt, list_arr, fetch, out_rows, out_vals):
    """Drain one lane's touched list into contiguous output, wiping as we go.

    ``fetch(vslot)`` maps stored list entries to (rows, values) registers and
    performs the wipe scatters for those entries.
    """
    rows = np.empty(cnt, dtype=np.int64)
    vals = np.empty(cnt)
    pos = 0
    while pos < cnt:
        vl = eng.set_vl(cnt - pos)
        vsrc = eng.index_fma(eng.iota(), vlen, pos * vlen + lane)
        vslot = eng.gather(list_arr, vsrc)
        vrows, vvals = fetch(vslot)
        eng.store(rows, pos, vrows)
        eng.store(vals, pos, vvals)
        pos += vl
    out_rows.append(rows)
    out_vals.append(vals)


def _blocked_run(eng: VecEngine, A: CscMatrix, Bp: CscMatrix, plan: ColumnPlan,
                 variant: str, hash_c: int, out_rows: list, out_vals: list):
    """Process every planned block over the column-permuted B, appending columns."""
    m = A.nrows
    za = np.diff(A.column_pointers)
    sorted_ops = plan.sorted_ops
    width = max((e - s for s, e in plan.blocks), default=0)
    st = _BlockState()
    if width:
        if variant == "spars":
            st.svals = np.zeros(m * width)
            st.sflags = np.zeros(m * width, dtype=np.int64)
            st.sidx = np.zeros(m * width, dtype=np.int64)
        else:
            h0 = plan.hash_sizes[0] if plan.hash_sizes else 1
            st.hvals = np.zeros(h0 * width)
            st.hidx = np.full(h0 * width, m, dtype=np.int64)
            st.hocc = np.zeros(h0 * width, dtype=np.int64)

    for bi, (c0, c1) in enumerate(plan.blocks):
        vlen = c1 - c0
        if sorted_ops[c0] == 0:           # nothing but empty work: no instructions
            for _ in range(vlen):
                out_rows.append(_EMPTY_I)
                out_vals.append(_EMPTY_F)
            continue
        if variant == "spars":
            _spars_block(eng, A, Bp, za, st, c0, vlen, out_rows, out_vals)
        else:
            _hash_block(eng, A, Bp, za, st, c0, vlen, plan.hash_sizes[bi],
                        hash_c, out_rows, out_vals)


def _block_prologue(eng, Bp, c0, vlen):
    eng.set_vl(vlen)
    vIdx = eng.load(Bp.column_pointers, c0)
    vEnd = eng.load(Bp.column_pointers, c0 + 1)
    vCnt = eng.broadcast(0)
    vLane = eng.iota()
    vOut = eng.broadcast(0)
    vMask = eng.compare_make_mask(vIdx, "<", vEnd)
    return vIdx, vEnd, vCnt, vLane, vOut, vMask


def _cursor_epilogue(eng, vIdx, vEnd, vCnt, vAcnt, vMask):
    """Advance each lane within its A column, or on to its next B non-zero."""
    vCnt = eng.add(vCnt, 1, vMask)
    vDoneCol = eng.compare_make_mask(vCnt, ">=", vAcnt, vMask)
    vCnt = eng.broadcast(0, vDoneCol, merge=vCnt)
    vIdx = eng.add(vIdx, 1, vDoneCol)
    vMask = eng.compare_make_mask(vIdx, "<", vEnd, vMask)
    return vIdx, vCnt, vMask


def _spars_block(eng, A, Bp, za, st, c0, vlen, out_rows, out_vals):
    vIdx, vEnd, vCnt, vLane, vOut, vMask = _block_prologue(eng, Bp, c0, vlen)
    vOne = eng.broadcast(1)
    while _live(vMask):
        vIdx, vMask, vBrow, vAcnt = _advance_past_barren(eng, Bp, za, vIdx, vEnd, vMask)
        if not _live(vMask):
            break
        eng.count_loop()
        vBval = eng.gather(Bp.values, vIdx, vMask)
        vAstart = eng.gather(A.column_pointers, vBrow, vMask)
        vAaddr = eng.add(vAstart, vCnt, vMask)
        vAval = eng.gather(A.values, vAaddr, vMask)
        vArow = eng.gather(A.row_indices, vAaddr, vMask)
        vSlot = eng.index_fma(vArow, vlen, vLane, vMask)
        vAcc = eng.gather(st.svals, vSlot, vMask)
        vFlg = eng.gather(st.sflags, vSlot, vMask)
        vAcc = eng.fma(vAcc, vAval, vBval, vMask)
        eng.scatter(st.svals, vSlot, vAcc, vMask)
        vNew = eng.compare_make_mask(vFlg, "==", 0, vMask)
        eng.scatter(st.sflags, vSlot, vOne, vNew)
        vWpos = eng.index_fma(vOut, vlen, vLane, vNew)
        eng.scatter(st.sidx, vWpos, vArow, vNew)
        vOut = eng.add(vOut, 1, vNew)
        vIdx, vCnt, vMask = _cursor_epilogue(eng, vIdx, vEnd, vCnt, vAcnt, vMask)

    for lane in range(vlen):
        def fetch(vrows):
            vslot = eng.index_fma(vrows, vlen, lane)
            vvals = eng.gather(st.svals, vslot)
            eng.scatter(st.svals, vslot, eng.broadcast(0.0))
            eng.scatter(st.sflags, vslot, eng.broadcast(0))
            return vrows, vvals
        _emit_lane(eng, vlen, lane, int(vOut[lane]), st.sidx, fetch,
                   out_rows, out_vals)


def _hash_block(eng, A, Bp, za, st, c0, vlen, H, hash_c, out_rows, out_vals):
    log2h = H.bit_length() - 1
    sentinel = A.nrows
    vIdx, vEnd, vCnt, vLane, vOut, vMask = _block_prologue(eng, Bp, c0, vlen)
    while _live(vMask):
        vIdx, vMask, vBrow, vAcnt = _advance_past_barren(eng, Bp, za, vIdx, vEnd, vMask)
        if not _live(vMask):
            break
        eng.count_loop()
        vBval = eng.gather(Bp.values, vIdx, vMask)
        vAstart = eng.gather(A.column_pointers, vBrow, vMask)
        vAaddr = eng.add(vAstart, vCnt, vMask)
        vAval = eng.gather(A.values, vAaddr, vMask)
        vArow = eng.gather(A.row_indices, vAaddr, vMask)
        vH = eng.index_fma(vArow, hash_c, 0, vMask)
        vH = eng.extract_bits(vH, 0, log2h)
        # probe until every lane has its own row or a free cell; one colliding
        # lane stalls the whole step, costing an extra loop trip per round
        vCell = eng.index_fma(vH, vlen, vLane, vMask)
        vStored = eng.gather(st.hidx, vCell, vMask)
        vHit = eng.compare_make_mask(vStored, "==", vArow, vMask)
        vFree = eng.compare_make_mask(vStored, "==", sentinel, vMask)
        vNew = vFree
        vOpen = eng.mask_and(vMask, eng.mask_not(eng.mask_or(vHit, vFree)))
        rounds = 0
        while _live(vOpen):
            rounds += 1
            if rounds > H:
                raise InternalError("hash table full: size schedule violated")
            eng.count_loop()
            vH = eng.add(vH, 1, vOpen)
            vH = eng.extract_bits(vH, 0, log2h)
            vProbe = eng.index_fma(vH, vlen, vLane, vOpen)
            vCell = eng.select(vOpen, vProbe, vCell)
            vStored = eng.gather(st.hidx, vCell, vOpen)
            vHit = eng.compare_make_mask(vStored, "==", vArow, vOpen)
            vFree = eng.compare_make_mask(vStored, "==", sentinel, vOpen)
            vNew = eng.mask_or(vNew, vFree)
            vOpen = eng.mask_and(vOpen, eng.mask_not(eng.mask_or(vHit, vFree)))
        eng.scatter(st.hidx, vCell, vArow, vNew)
        vWpos = eng.index_fma(vOut, vlen, vLane, vNew)
        eng.scatter(st.hocc, vWpos, vCell, vNew)
        vOut = eng.add(vOut, 1, vNew)
        vAcc = eng.gather(st.hvals, vCell, vMask)
        vAcc = eng.fma(vAcc, vAval, vBval, vMask)
        eng.scatter(st.hvals, vCell, vAcc, vMask)
        vIdx, vCnt, vMask = _cursor_epilogue(eng, vIdx, vEnd, vCnt, vAcnt, vMask)

    for lane in range(vlen):
        def fetch(vcell):
            vrows = eng.gather(st.hidx, vcell)
            vvals = eng.gather(st.hvals, vcell)
            eng.scatter(st.hvals, vcell, eng.broadcast(0.0))
            eng.scatter(st.hidx, vcell, eng.broadcast(sentinel))
            return vrows, vvals
        _emit_lane(eng, vlen, lane, int(vOut[lane]), st.hocc, fetch,
                   out_rows, out_vals)


def _run_sorted(A: CscMatrix, B: CscMatrix, plan: ColumnPlan, variant: str,
                hash_c: int, engine: VecEngine) -> tuple[CscMatrix, CostReport]:
    """Shared driver: sorted one-column prefix, blocked tail, permutation undone."""
    _check_dims(A, B)
    _check_plan(plan, B)
    Bp = permute_columns(B, plan.perm)
    col_rows: list = []
    col_vals: list = []
    if plan.hybrid_split > 0:
        spa = SpaAccumulator(A.nrows)
        for p in range(plan.hybrid_split):
            rows, vals = _spa_column(engine, A, Bp, p, spa)
            col_rows.append(rows)
            col_vals.append(vals)
    _blocked_run(engine, A, Bp, plan, variant, hash_c, col_rows, col_vals)
    C_perm = _assemble(A.nrows, B.ncols, col_rows, col_vals)
    return unpermute_columns(C_perm, plan.perm), engine.report.copy()


def spars_kernel(A: CscMatrix, B: CscMatrix, b_min: int, b_max: int,
                 engine: VecEngine,
                 plan: ColumnPlan | None = None) -> tuple[CscMatrix, CostReport]:
    """Blocked multi-column product with dense per-lane accumulators."""
    _check_dims(A, B)
    if plan is None:
        plan = build_plan(A, B, b_min, b_max, engine.max_vl, t=math.inf)
    if plan.hybrid_split != 0:
        raise InputError("plan reserves columns for the one-column path; use hybrid_kernel")
    return _run_sorted(A, B, plan, "spars", DEFAULT_HASH_C, engine)


def hash_kernel(A: CscMatrix, B: CscMatrix, b_min: int, b_max: int,
                c: int = DEFAULT_HASH_C, engine: VecEngine | None = None,
                plan: ColumnPlan | None = None) -> tuple[CscMatrix, CostReport]:
    """Blocked multi-column product accumulating into per-lane hash tables."""
    _check_dims(A, B)
    if engine is None:
        engine = VecEngine()
    if plan is None:
        plan = build_plan(A, B, b_min, b_max, engine.max_vl, t=math.inf)
    if plan.hybrid_split != 0:
        raise InputError("plan reserves columns for the one-column path; use hybrid_kernel")
    if len(plan.hash_sizes) != len(plan.blocks):
        raise InputError("plan lacks a hash size per block")
    return _run_sorted(A, B, plan, "hash", c, engine)


def hybrid_kernel(A: CscMatrix, B: CscMatrix, t: float, b_min: int, b_max: int,
                  variant: str, engine: VecEngine,
                  hash_c: int = DEFAULT_HASH_C,
                  plan: ColumnPlan | None = None) -> tuple[CscMatrix, CostReport]:
    """Sorted columns with load >= t go one at a time, the rest in blocks.

    ``t = 0`` degenerates to the one-column kernel on sorted columns;
    ``t = inf`` to the pure blocked kernel.
    """
    if variant not in ("spars", "hash"):
        raise InputError(f"variant must be 'spars' or 'hash', got {variant!r}")
    _check_dims(A, B)
    if plan is None:
        plan = build_plan(A, B, b_min, b_max, engine.max_vl, t=t)
    return _run_sorted(A, B, plan, variant, hash_c, engine)
