"""Sparse and dense matrix containers, file I/O, generators and reference products.

Everything downstream (planning, kernels, benchmarking) works on the
compressed-sparse-column (CSC) matrices defined here.  The module also owns
the two reference multiplications every kernel is checked against: a scalar
column-by-column sparse accumulator product and a dense full-precision
product.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .errors import FormatError, InputError

__all__ = [
    "CscMatrix",
    "TripletList",
    "DenseMatrix",
    "from_triplets",
    "to_triplets",
    "read_matrix_market",
    "write_matrix_market",
    "generate_synthetic",
    "gustavson_reference",
    "gustavson_multiply_count",
    "dense_oracle",
    "matrices_match",
]


@dataclass
class CscMatrix:
    """Compressed-sparse-column matrix with double-precision values.

    ``column_pointers`` has length ``ncols + 1``; column ``j`` occupies the
    half-open slice ``[column_pointers[j], column_pointers[j + 1])`` of
    ``row_indices`` and ``values``.  Row indices within a column are always
    pairwise distinct; they are strictly ascending iff ``canonical`` is set.
    Instances are frozen after construction (arrays are made read-only).
    """

    nrows: int
    ncols: int
    column_pointers: np.ndarray
    row_indices: np.ndarray
    values: np.ndarray
    canonical: bool = False

    def __post_init__(self):
        self.column_pointers = np.ascontiguousarray(self.column_pointers, dtype=np.int64)
        self.row_indices = np.ascontiguousarray(self.row_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self._validate()
        for arr in (self.column_pointers, self.row_indices, self.values):
            arr.flags.writeable = False

    def _validate(self):
        if self.nrows < 0 or self.ncols < 0:
            raise InputError("negative matrix dimension")
        cp = self.column_pointers
        if cp.shape != (self.ncols + 1,):
            raise InputError("column_pointers must have length ncols + 1")
        if self.ncols >= 0 and (len(cp) == 0 or cp[0] != 0):
            raise InputError("column_pointers[0] must be 0")
        if np.any(np.diff(cp) < 0):
            raise InputError("column_pointers must be non-decreasing")
        nnz = int(cp[-1])
        if self.row_indices.shape != (nnz,) or self.values.shape != (nnz,):
            raise InputError("row_indices/values length must equal column_pointers[-1]")
        if nnz:
            if self.row_indices.min() < 0 or self.row_indices.max() >= self.nrows:
                raise InputError("row index out of bounds")
            col_of = np.repeat(np.arange(self.ncols), np.diff(cp))
            if self.canonical:
                same_col = col_of[1:] == col_of[:-1]
                if np.any(same_col & (np.diff(self.row_indices) <= 0)):
                    raise InputError("canonical matrix must have strictly ascending rows per column")
            else:
                order = np.lexsort((self.row_indices, col_of))
                rs, cs = self.row_indices[order], col_of[order]
                if np.any((cs[1:] == cs[:-1]) & (rs[1:] == rs[:-1])):
                    raise InputError("duplicate row index within a column")

    @property
    def nnz(self) -> int:
        return int(self.column_pointers[-1])

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and values of column j as views."""
        lo, hi = self.column_pointers[j], self.column_pointers[j + 1]
        return self.row_indices[lo:hi], self.values[lo:hi]

    def column_nnz(self) -> np.ndarray:
        """Non-zero count of every column."""
        return np.diff(self.column_pointers)

    def canonicalize(self) -> "CscMatrix":
        """Same matrix with rows sorted ascending inside each column."""
        if self.canonical:
            return self
        col_of = np.repeat(np.arange(self.ncols), self.column_nnz())
        order = np.lexsort((self.row_indices, col_of))
        return CscMatrix(self.nrows, self.ncols, self.column_pointers.copy(),
                         self.row_indices[order], self.values[order], canonical=True)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        col_of = np.repeat(np.arange(self.ncols), self.column_nnz())
        out[self.row_indices, col_of] = self.values
        return out

    def same_as(self, other: "CscMatrix") -> bool:
        """Exact structural and numerical equality (no tolerance)."""
        return (
            self.nrows == other.nrows
            and self.ncols == other.ncols
            and np.array_equal(self.column_pointers, other.column_pointers)
            and np.array_equal(self.row_indices, other.row_indices)
            and np.array_equal(self.values, other.values)
        )

    def to_json_dict(self) -> dict:
        return {
            "nrows": self.nrows,
            "ncols": self.ncols,
            "column_pointers": self.column_pointers.tolist(),
            "row_indices": self.row_indices.tolist(),
            "values": self.values.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "CscMatrix":
        return cls(int(d["nrows"]), int(d["ncols"]),
                   np.asarray(d["column_pointers"], dtype=np.int64),
                   np.asarray(d["row_indices"], dtype=np.int64),
                   np.asarray(d["values"], dtype=np.float64))

    @classmethod
    def from_json(cls, text: str) -> "CscMatrix":
        return cls.from_json_dict(json.loads(text))

    @classmethod
    def from_dense(cls, grid) -> "CscMatrix":
        """Convenience constructor for small literal matrices (row-major grid)."""
        a = np.asarray(grid, dtype=np.float64)
        cols, rows = np.nonzero(a.T)
        return from_triplets(TripletList(a.shape[0], a.shape[1], rows, cols, a[rows, cols]))


@dataclass
class TripletList:
    """Coordinate-form matrix: parallel (row, col, value) arrays.

    Duplicates are permitted and get summed when converting to CSC.
    """

    nrows: int
    ncols: int
    rows: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    cols: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    vals: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.float64))

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise InputError("triplet arrays must have equal length")

    @classmethod
    def from_entries(cls, nrows: int, ncols: int,
                     entries: Iterable[tuple[int, int, float]]) -> "TripletList":
        e = list(entries)
        rows = np.array([r for r, _, _ in e], dtype=np.int64)
        cols = np.array([c for _, c, _ in e], dtype=np.int64)
        vals = np.array([v for _, _, v in e], dtype=np.float64)
        return cls(nrows, ncols, rows, cols, vals)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class DenseMatrix:
    """Row-major dense matrix, used as the oracle result container."""

    nrows: int
    ncols: int
    values: np.ndarray  # flat, length nrows * ncols, row-major

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (self.nrows * self.ncols,):
            raise InputError("dense value array must have length nrows * ncols")

    @classmethod
    def from_2d(cls, a) -> "DenseMatrix":
        a = np.ascontiguousarray(a, dtype=np.float64)
        return cls(a.shape[0], a.shape[1], a.reshape(-1))

    def as_2d(self) -> np.ndarray:
        return self.values.reshape(self.nrows, self.ncols)

    def at(self, i: int, j: int) -> float:
        return float(self.values[i * self.ncols + j])


def from_triplets(t: TripletList) -> CscMatrix:
    """Build a canonical CSC matrix, summing duplicates and dropping exact zeros."""
    n = len(t)
    if n and (t.rows.min() < 0 or t.rows.max() >= t.nrows
              or t.cols.min() < 0 or t.cols.max() >= t.ncols):
        raise InputError("triplet index out of bounds")
    order = np.lexsort((t.rows, t.cols))
    rows, cols, vals = t.rows[order], t.cols[order], t.vals[order]
    if n:
        new_run = np.empty(n, dtype=bool)
        new_run[0] = True
        new_run[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.nonzero(new_run)[0]
        sums = np.add.reduceat(vals, starts)
        rows, cols, vals = rows[starts], cols[starts], sums
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    pointers = np.zeros(t.ncols + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=t.ncols), out=pointers[1:])
    return CscMatrix(t.nrows, t.ncols, pointers, rows, vals, canonical=True)


def to_triplets(m: CscMatrix) -> TripletList:
    """Column-major triplet expansion; inverse of from_triplets on canonical input."""
    cols = np.repeat(np.arange(m.ncols, dtype=np.int64), m.column_nnz())
    return TripletList(m.nrows, m.ncols, m.row_indices.copy(), cols, m.values.copy())


_MM_HEADER = "%%MatrixMarket"


def read_matrix_market(source: str | IO[str]) -> CscMatrix:
    """Parse a Matrix Market *coordinate* stream into a canonical CSC matrix.

    Accepts real/integer/pattern fields and general/symmetric symmetry.
    Symmetric storage is expanded to both triangles (diagonal entries are not
    duplicated); pattern entries get value 1.0.  1-based indices become 0-based.
    """
    text = source.read() if hasattr(source, "read") else source
    lines = iter(text.splitlines())
    try:
        header = next(lines)
    except StopIteration:
        raise FormatError("empty Matrix Market stream") from None
    parts = header.strip().split()
    if len(parts) != 5 or parts[0] != _MM_HEADER or parts[1].lower() != "matrix":
        raise FormatError(f"bad Matrix Market header: {header!r}")
    layout, fieldtype, symmetry = (p.lower() for p in parts[2:])
    if layout != "coordinate":
        raise FormatError(f"unsupported layout {layout!r} (only coordinate)")
    if fieldtype not in ("real", "integer", "pattern"):
        raise FormatError(f"unsupported field type {fieldtype!r}")
    if symmetry not in ("general", "symmetric"):
        raise FormatError(f"unsupported symmetry {symmetry!r}")

    size_line = None
    for line in lines:
        s = line.strip()
        if s and not s.startswith("%"):
            size_line = s
            break
    if size_line is None:
        raise FormatError("missing size line")
    try:
        nrows, ncols, count = (int(x) for x in size_line.split())
    except ValueError:
        raise FormatError(f"bad size line: {size_line!r}") from None

    pattern = fieldtype == "pattern"
    rows, cols, vals = [], [], []
    seen = 0
    for line in lines:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        fields = s.split()
        if pattern:
            if len(fields) != 2:
                raise FormatError(f"pattern entry needs 2 fields: {s!r}")
            i, j, v = int(fields[0]), int(fields[1]), 1.0
        else:
            if len(fields) != 3:
                raise FormatError(f"entry needs 3 fields: {s!r}")
            i, j, v = int(fields[0]), int(fields[1]), float(fields[2])
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if symmetry == "symmetric" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
        seen += 1
    if seen != count:
        raise FormatError(f"declared {count} entries, found {seen}")
    t = TripletList(nrows, ncols,
                    np.asarray(rows, dtype=np.int64),
                    np.asarray(cols, dtype=np.int64),
                    np.asarray(vals, dtype=np.float64))
    return from_triplets(t)


def write_matrix_market(m: CscMatrix, dest: IO[str] | None = None) -> str:
    """Serialize as coordinate/real/general with full-precision values."""
    out = [f"{_MM_HEADER} matrix coordinate real general",
           f"{m.nrows} {m.ncols} {m.nnz}"]
    cols = np.repeat(np.arange(m.ncols), m.column_nnz())
    for r, c, v in zip(m.row_indices, cols, m.values):
        out.append(f"{r + 1} {c + 1} {float(v)!r}")
    text = "\n".join(out) + "\n"
    if dest is not None:
        dest.write(text)
    return text


def generate_synthetic(n: int, Z: int, seed: int) -> CscMatrix:
    """n-by-n matrix with exactly Z non-zeros per column at uniform random rows.

    Each column is drawn from its own generator seeded by (seed, column), so
    the matrix is reproducible and individual columns are order-independent.
    Values are uniform in [1, 2) to keep products away from cancellation.
    """
    if Z <= 0 or Z > n:
        raise InputError(f"need 0 < Z <= n, got Z={Z}, n={n}")
    pointers = np.arange(0, (n + 1) * Z, Z, dtype=np.int64)
    rows = np.empty(n * Z, dtype=np.int64)
    vals = np.empty(n * Z, dtype=np.float64)
    for j in range(n):
        rng = np.random.default_rng((seed, j))
        picks = np.sort(rng.choice(n, size=Z, replace=False))
        rows[j * Z:(j + 1) * Z] = picks
        vals[j * Z:(j + 1) * Z] = rng.uniform(1.0, 2.0, size=Z)
    return CscMatrix(n, n, pointers, rows, vals, canonical=True)


def _check_product_shapes(A: CscMatrix, B: CscMatrix):
    if A.ncols != B.nrows:
        raise InputError(f"shape mismatch: A is {A.nrows}x{A.ncols}, B is {B.nrows}x{B.ncols}")


def gustavson_reference(A: CscMatrix, B: CscMatrix) -> CscMatrix:
    """Scalar sparse-accumulator product, column by column.

    For each output column, every non-zero B[k, j] scales column k of A into a
    dense accumulator; newly touched rows are recorded in first-touch order.
    The result is canonicalized before returning.  Touched rows are kept even
    if their accumulated value is exactly zero.
    """
    _check_product_shapes(A, B)
    acc = np.zeros(A.nrows)
    flags = np.zeros(A.nrows, dtype=bool)
    out_ptr = np.zeros(B.ncols + 1, dtype=np.int64)
    out_rows: list[np.ndarray] = []
    out_vals: list[np.ndarray] = []
    for j in range(B.ncols):
        touched: list[np.ndarray] = []
        b_rows, b_vals = B.column(j)
        for k, bkj in zip(b_rows, b_vals):
            a_rows, a_vals = A.column(int(k))
            acc[a_rows] += a_vals * bkj
            fresh = a_rows[~flags[a_rows]]
            flags[fresh] = True
            touched.append(fresh)
        rows_j = np.concatenate(touched) if touched else np.empty(0, dtype=np.int64)
        out_rows.append(rows_j)
        out_vals.append(acc[rows_j].copy())
        out_ptr[j + 1] = out_ptr[j] + len(rows_j)
        acc[rows_j] = 0.0
        flags[rows_j] = False
    rows = np.concatenate(out_rows) if out_rows else np.empty(0, dtype=np.int64)
    vals = np.concatenate(out_vals) if out_vals else np.empty(0, dtype=np.float64)
    return CscMatrix(A.nrows, B.ncols, out_ptr, rows, vals).canonicalize()


def gustavson_multiply_count(A: CscMatrix, B: CscMatrix) -> int:
    """Scalar multiplications the accumulator product performs, counted directly."""
    _check_product_shapes(A, B)
    count = 0
    for k in B.row_indices:
        lo, hi = A.column_pointers[k], A.column_pointers[k + 1]
        count += int(hi - lo)
    return count


def dense_oracle(A: CscMatrix, B: CscMatrix) -> DenseMatrix:
    """Full-precision dense product used as the independent check."""
    _check_product_shapes(A, B)
    return DenseMatrix.from_2d(A.to_dense() @ B.to_dense())


def matrices_match(C: CscMatrix, ref: DenseMatrix, rel_tol: float) -> bool:
    """True iff C agrees with the dense reference entry-wise.

    Every stored entry of C must be within ``rel_tol * max(1, |ref|)`` of the
    reference value, and every reference entry with no stored counterpart must
    itself be within that tolerance of zero.  Stored exact zeros are fine.
    """
    if C.nrows != ref.nrows or C.ncols != ref.ncols:
        return False
    Cc = C.canonicalize()
    ref2d = ref.as_2d()
    got = Cc.to_dense()
    tol = rel_tol * np.maximum(1.0, np.abs(ref2d))
    if np.any(np.abs(got - ref2d) > tol):
        return False
    # entries of ref never touched by C must be ~0; stored entries already checked
    present = np.zeros((C.nrows, C.ncols), dtype=bool)
    col_of = np.repeat(np.arange(C.ncols), Cc.column_nnz())
    present[Cc.row_indices, col_of] = True
    return not np.any(~present & (np.abs(ref2d) > tol))
