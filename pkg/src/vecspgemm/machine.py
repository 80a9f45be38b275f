"""Abstract long-vector execution engine with cost counters.

Kernels in this package never touch SIMD intrinsics; they issue instructions
against a :class:`VecEngine`, which models a vector unit with a configurable
maximum vector length (VL) and a number of physical lanes.  Registers and
masks are plain numpy arrays whose length must equal the VL in force when
they were produced.  Kernels treat registers as immutable: every update goes
through an engine op that returns a new register.

Counting rules
--------------
Every issued instruction at the current VL ``v`` adds 1 to
``vector_instructions``, ``v`` to ``lane_slots_total`` and the number of
enabled lanes to ``lane_slots_active``.  Indexed accesses additionally bump
``gather_scatter_ops`` and track the widest (max - min) index span seen in a
single instruction.  ``fma`` also adds ``v`` to ``elements_processed``: that
counter measures the per-step batch of matrix coefficients a kernel works
on, masked slots included.  ``compress_store`` counts as two instructions
(compress, then a contiguous store of the survivors).  Instructions issued
at VL=0 are no-ops and are not counted; ``set_vl`` itself is uncounted
scalar control, as is testing whether a mask has any enabled lane.
``loop_iterations`` is bumped explicitly by kernels, once per trip of their
main vectorized loop.

Faults
------
Out-of-bounds enabled indices, duplicate enabled scatter targets, and
register/VL length mismatches raise :class:`ModelFault`: they are kernel
bugs, not data errors.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
import json

import numpy as np

from .errors import ModelFault

__all__ = ["VecEngine", "CostReport", "VecReg", "VecMask"]

VecReg = np.ndarray   # float64 or int64, length == VL at creation
VecMask = np.ndarray  # bool, length == VL at creation

_PREDICATES = {
    "==": np.equal,
    "!=": np.not_equal,
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}


@dataclass
class CostReport:
    """Monotone counters accumulated over one engine's lifetime."""

    loop_iterations: int = 0
    vector_instructions: int = 0
    lane_slots_total: int = 0
    lane_slots_active: int = 0
    elements_processed: int = 0
    gather_scatter_ops: int = 0
    max_index_range: int = 0

    def utilization(self) -> float:
        if self.lane_slots_total == 0:
            return 1.0
        return self.lane_slots_active / self.lane_slots_total

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def copy(self) -> "CostReport":
        return CostReport(**asdict(self))


_EMPTY_F = np.empty(0)
_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_B = np.empty(0, dtype=bool)


class VecEngine:
    """One single-threaded vector context; create a fresh engine per kernel run."""

    def __init__(self, max_vl: int = 256, lanes: int = 8):
        if max_vl < 1 or lanes < 1:
            raise ValueError("max_vl and lanes must be positive")
        self.max_vl = max_vl
        self.lanes = lanes
        self._vl = 0
        self._loops = 0
        self._instr = 0
        self._total = 0
        self._active = 0
        self._elems = 0
        self._gs = 0
        self._range = 0
        self._cycles = 0
        self._memo_mask = None
        self._memo_pop = 0
        self._consts: dict = {}
        self._iotas: dict = {}

    # -- configuration and results ------------------------------------------

    @property
    def vl(self) -> int:
        return self._vl

    @property
    def report(self) -> CostReport:
        """Snapshot of the counters accumulated so far."""
        return CostReport(self._loops, self._instr, self._total, self._active,
                          self._elems, self._gs, self._range)

    @property
    def cycle_estimate(self) -> int:
        """Crude latency proxy: sum over instructions of ceil(VL / lanes)."""
        return self._cycles

    def set_vl(self, n: int) -> int:
        """Clamp the requested length to max_vl and make it current."""
        if n < 0:
            raise ModelFault(f"negative vector length {n}")
        self._vl = min(n, self.max_vl)
        return self._vl

    def count_loop(self, trips: int = 1):
        """Record trips of a kernel's main vectorized loop."""
        self._loops += trips

    # -- internals -----------------------------------------------------------

    def _popcount(self, mask) -> int:
        if mask is self._memo_mask:
            return self._memo_pop
        p = int(np.count_nonzero(mask))
        self._memo_mask = mask
        self._memo_pop = p
        return p

    def _mask(self, mask):
        """Drop masks with every lane enabled: semantics match the unmasked op."""
        if mask is None:
            return None
        if len(mask) != self._vl:
            raise ModelFault(f"mask length {len(mask)} != VL {self._vl}")
        return None if self._popcount(mask) == self._vl else mask

    def _issue(self, active: int | None = None):
        v = self._vl
        self._instr += 1
        self._total += v
        self._active += v if active is None else active
        self._cycles += -(-v // self.lanes)

    def _need(self, a):
        if len(a) != self._vl:
            raise ModelFault(f"register length {len(a)} != VL {self._vl}")

    def _indexed(self, idx_sub: np.ndarray, limit: int):
        """Bounds-check enabled indices and record their address span."""
        self._gs += 1
        if idx_sub.size == 0:
            return None
        s = idx_sub.copy()
        s.sort()
        lo, hi = s[0], s[-1]
        if lo < 0 or hi >= limit:
            raise ModelFault(f"index out of bounds: [{lo}, {hi}] vs base length {limit}")
        span = int(hi - lo)
        if span > self._range:
            self._range = span
        return s

    # -- register constructors ------------------------------------------------

    def broadcast(self, value, mask: VecMask | None = None,
                  merge: VecReg | None = None) -> VecReg:
        """Fill lanes with a scalar; disabled lanes take merge (or zero)."""
        v = self._vl
        if v == 0:
            return _EMPTY_I if isinstance(value, (int, np.integer)) else _EMPTY_F
        dtype = np.int64 if isinstance(value, (int, np.integer)) else np.float64
        mask = self._mask(mask)
        if mask is None:
            key = (value, v, dtype is np.int64)
            out = self._consts.get(key)
            if out is None:
                out = np.full(v, value, dtype=dtype)
                out.flags.writeable = False
                self._consts[key] = out
            self._issue()
        else:
            base = np.zeros(v, dtype=dtype) if merge is None else merge
            out = np.where(mask, np.asarray(value, dtype=dtype), base)
            self._issue(self._popcount(mask))
        return out

    def iota(self) -> VecReg:
        """Lane indices 0..VL-1."""
        v = self._vl
        if v == 0:
            return _EMPTY_I
        out = self._iotas.get(v)
        if out is None:
            out = np.arange(v, dtype=np.int64)
            out.flags.writeable = False
            self._iotas[v] = out
        self._issue()
        return out

    # -- memory ----------------------------------------------------------------

    def load(self, base: np.ndarray, start: int, mask: VecMask | None = None) -> VecReg:
        """Contiguous load of base[start : start + VL]."""
        v = self._vl
        if v == 0:
            return np.empty(0, dtype=base.dtype)
        if start < 0 or start + v > len(base):
            raise ModelFault(f"contiguous load [{start}, {start + v}) out of bounds")
        out = base[start:start + v]
        mask = self._mask(mask)
        if mask is None:
            self._issue()
            return out.copy()
        self._issue(self._popcount(mask))
        return np.where(mask, out, np.zeros(1, dtype=base.dtype))

    def store(self, base: np.ndarray, start: int, reg: VecReg,
              mask: VecMask | None = None):
        """Contiguous store of a register to base[start : start + VL]."""
        v = self._vl
        if v == 0:
            return
        self._need(reg)
        if start < 0 or start + v > len(base):
            raise ModelFault(f"contiguous store [{start}, {start + v}) out of bounds")
        mask = self._mask(mask)
        if mask is None:
            base[start:start + v] = reg
            self._issue()
        else:
            np.copyto(base[start:start + v], reg, where=mask)
            self._issue(self._popcount(mask))

    def gather(self, base: np.ndarray, indices: VecReg,
               mask: VecMask | None = None) -> VecReg:
        """Indexed load; disabled lanes yield 0."""
        v = self._vl
        if v == 0:
            return np.empty(0, dtype=base.dtype)
        self._need(indices)
        mask = self._mask(mask)
        if mask is None:
            self._indexed(indices, len(base))
            out = base[indices]
            self._issue()
        else:
            sub = indices[mask]
            self._indexed(sub, len(base))
            out = np.zeros(v, dtype=base.dtype)
            out[mask] = base[sub]
            self._issue(self._popcount(mask))
        return out

    def scatter(self, base: np.ndarray, indices: VecReg, values: VecReg,
                mask: VecMask | None = None):
        """Indexed store; duplicate enabled targets are a write clash."""
        v = self._vl
        if v == 0:
            return
        self._need(indices)
        self._need(values)
        mask = self._mask(mask)
        if mask is None:
            sub, val = indices, values
            active = v
        else:
            sub, val = indices[mask], values[mask]
            active = self._popcount(mask)
        s = self._indexed(sub, len(base))
        if s is not None and s.size > 1 and np.count_nonzero(s[1:] == s[:-1]):
            raise ModelFault("duplicate indices in one scatter")
        base[sub] = val
        self._issue(active)

    def compress_store(self, values: VecReg | None, indices: VecReg | None,
                       mask: VecMask, dest_values: np.ndarray | None,
                       dest_indices: np.ndarray | None, at: int) -> int:
        """Pack enabled (value, index) lanes and store them contiguously at ``at``.

        Either payload may be None.  Returns the number of lanes stored.
        Counted as two instructions: the in-register compress and the store.
        """
        v = self._vl
        if v == 0:
            return 0
        if len(mask) != v:
            raise ModelFault(f"mask length {len(mask)} != VL {v}")
        k = self._popcount(mask)
        for reg, dest in ((values, dest_values), (indices, dest_indices)):
            if reg is None:
                continue
            self._need(reg)
            if dest is None:
                raise ModelFault("compress_store payload without a destination")
            if at < 0 or at + k > len(dest):
                raise ModelFault("compress_store destination capacity exceeded")
        self._issue(k)                     # compress
        if k:
            full = k == v
            if values is not None:
                dest_values[at:at + k] = values if full else values[mask]
            if indices is not None:
                dest_indices[at:at + k] = indices if full else indices[mask]
            saved = self._vl
            self._vl = k
            self._issue()                  # contiguous store of the survivors
            self._vl = saved
        return k

    # -- arithmetic and logic ----------------------------------------------------

    def fma(self, acc: VecReg | None, a: VecReg, b, mask: VecMask | None = None) -> VecReg:
        """acc + a * b per lane (acc None means zero); disabled lanes keep acc."""
        v = self._vl
        if v == 0:
            return _EMPTY_F
        self._need(a)
        if isinstance(b, np.ndarray):
            self._need(b)
        prod = a * b
        out = prod if acc is None else acc + prod
        mask = self._mask(mask)
        if mask is None:
            self._issue()
        else:
            out = np.where(mask, out, 0.0 if acc is None else acc)
            self._issue(self._popcount(mask))
        self._elems += v
        return out

    def add(self, a: VecReg, b, mask: VecMask | None = None) -> VecReg:
        """a + b per lane (b register or scalar); disabled lanes keep a."""
        v = self._vl
        if v == 0:
            return np.empty(0, dtype=a.dtype)
        self._need(a)
        if isinstance(b, np.ndarray):
            self._need(b)
        out = a + b
        mask = self._mask(mask)
        if mask is None:
            self._issue()
        else:
            out = np.where(mask, out, a)
            self._issue(self._popcount(mask))
        return out

    def index_fma(self, a: VecReg, scale: int, b, mask: VecMask | None = None) -> VecReg:
        """Integer a * scale + b for address computation; disabled lanes keep a."""
        v = self._vl
        if v == 0:
            return _EMPTY_I
        self._need(a)
        if isinstance(b, np.ndarray):
            self._need(b)
        out = a * scale + b
        mask = self._mask(mask)
        if mask is None:
            self._issue()
        else:
            out = np.where(mask, out, a)
            self._issue(self._popcount(mask))
        return out

    def extract_bits(self, a: VecReg, shift: int, width: int) -> VecReg:
        """Bitfield extract (a >> shift) & (2**width - 1)."""
        if self._vl == 0:
            return _EMPTY_I
        self._need(a)
        self._issue()
        out = a >> shift if shift else a
        return out & ((1 << width) - 1)

    def compare_make_mask(self, a: VecReg, predicate: str, b,
                          mask: VecMask | None = None) -> VecMask:
        """Per-lane predicate producing a mask; lanes outside ``mask`` are False."""
        v = self._vl
        if v == 0:
            return _EMPTY_B
        self._need(a)
        if isinstance(b, np.ndarray):
            self._need(b)
        out = _PREDICATES[predicate](a, b)
        mask = self._mask(mask)
        if mask is None:
            self._issue()
        else:
            out &= mask
            self._issue(self._popcount(mask))
        return out

    def mask_and(self, m1: VecMask, m2: VecMask) -> VecMask:
        if self._vl == 0:
            return _EMPTY_B
        self._need(m1)
        self._need(m2)
        self._issue()
        return m1 & m2

    def mask_or(self, m1: VecMask, m2: VecMask) -> VecMask:
        if self._vl == 0:
            return _EMPTY_B
        self._need(m1)
        self._need(m2)
        self._issue()
        return m1 | m2

    def mask_not(self, m: VecMask) -> VecMask:
        if self._vl == 0:
            return _EMPTY_B
        self._need(m)
        self._issue()
        return ~m

    def select(self, mask: VecMask, a: VecReg, b: VecReg) -> VecReg:
        """Per-lane merge: a where mask else b."""
        if self._vl == 0:
            return _EMPTY_F
        self._need(mask)
        self._need(a)
        self._need(b)
        self._issue()
        return np.where(mask, a, b)

    def scan_exclusive(self, a: VecReg) -> tuple[VecReg, int]:
        """In-register exclusive prefix sum; also returns the register total."""
        if self._vl == 0:
            return _EMPTY_I, 0
        self._need(a)
        self._issue()
        out = np.empty_like(a)
        out[0] = 0
        np.cumsum(a[:-1], out=out[1:])
        return out, int(out[-1] + a[-1])
