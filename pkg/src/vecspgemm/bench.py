"""Benchmark harness: configured runs, parameter sweeps and comparison tables.

A run multiplies a matrix by itself (C = A @ A) with one of the six
algorithms, optionally verifies the product against a reference, and packs
the cost counters plus recomputed matrix statistics into a report.  Sweeps
repeat a base run along one parameter axis; comparisons pit algorithm
rosters against the one-column baseline on a chosen cost metric.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError
from .esc import esc_kernel
from .kernels import DEFAULT_HASH_C, hash_kernel, hybrid_kernel, spa_kernel, spars_kernel
from .machine import CostReport, VecEngine
from .matrix import (
    CscMatrix,
    dense_oracle,
    generate_synthetic,
    gustavson_reference,
    matrices_match,
    read_matrix_market,
)
from .plan import ColumnPlan, build_plan, compute_ops

__all__ = [
    "ALGOS",
    "COMPARE_METRICS",
    "DEFAULT_ROSTER",
    "RunConfig",
    "RunReport",
    "load_matrix",
    "matrix_stats",
    "run_once",
    "sweep",
    "sweep_csv",
    "compare",
    "compare_csv",
    "parse_algo_spec",
]

ALGOS = ("spa", "spars", "hash", "hspa", "hhash", "esc")
COMPARE_METRICS = ("loop_iterations", "lane_slots_total", "vector_instructions")

# roster of named configurations for comparison tables; the -bmin/bmax suffix
# pins the block bounds, hybrids use the threshold from the base config
DEFAULT_ROSTER = (
    "spa",
    "spars-16/64",
    "spars-40/40",
    "hspa-16/64",
    "hspa-40/40",
    "hash-32/256",
    "hash-256/256",
    "hhash-32/256",
    "hhash-256/256",
    "esc",
)

# dense verification is O(n^2) memory; larger products fall back to the
# scalar accumulator reference
DENSE_VERIFY_LIMIT = 5000


@dataclass
class RunConfig:
    """One benchmark invocation, CLI-shaped."""

    algo: str = "spa"
    matrix_path: str | None = None
    synthetic: tuple[int, int, int] | None = None  # (n, Z, seed)
    t: float = 40.0
    b_min: int = 40
    b_max: int = 40
    max_vl: int = 256
    lanes: int = 8
    hash_c: int = DEFAULT_HASH_C
    esc_threshold: int = 10000
    radix_r: int | None = None  # None follows the round-count policy
    verify: bool = False
    dump_plan: bool = False
    output: str | None = None
    format: str = "json"

    def validate(self, require_source: bool = True):
        if self.algo not in ALGOS:
            raise InputError(f"unknown algorithm {self.algo!r}")
        if self.matrix_path is not None and self.synthetic is not None:
            raise InputError("give either matrix_path or synthetic, not both")
        if require_source and self.matrix_path is None and self.synthetic is None:
            raise InputError("a matrix_path or synthetic source is required")
        if self.format not in ("json", "csv"):
            raise InputError(f"format must be json or csv, got {self.format!r}")
        if self.radix_r not in (None, 5, 6):
            raise InputError("radix r must be 5, 6 or automatic")

    def to_json_dict(self) -> dict:
        return {
            "algo": self.algo,
            "matrix_path": self.matrix_path,
            "synthetic": list(self.synthetic) if self.synthetic else None,
            "t": "inf" if math.isinf(self.t) else self.t,
            "b_min": self.b_min,
            "b_max": self.b_max,
            "max_vl": self.max_vl,
            "lanes": self.lanes,
            "hash_c": self.hash_c,
            "esc_threshold": self.esc_threshold,
            "radix_r": "auto" if self.radix_r is None else self.radix_r,
            "verify": self.verify,
        }


@dataclass
class RunReport:
    """Everything one run produced; serializes to versioned JSON or a CSV row."""

    config: RunConfig
    stats: dict
    cost: CostReport
    latency_estimate: int
    preprocessing_share: float
    verification: str  # "pass" | "fail" | "skipped"
    timestamp: float = field(default_factory=time.time)
    plan: ColumnPlan | None = None

    def to_json_dict(self) -> dict:
        d = {
            "schema": 1,
            "timestamp": self.timestamp,
            "config": self.config.to_json_dict(),
            "matrix_stats": self.stats,
            "cost": self.cost.to_dict(),
            "latency_estimate": self.latency_estimate,
            "preprocessing_share": self.preprocessing_share,
            "verification": self.verification,
        }
        if self.plan is not None:
            d["plan"] = self.plan.to_json_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @staticmethod
    def csv_header() -> list[str]:
        return (["algo", "source", "nrows", "ncols", "nnz"]
                + list(CostReport().to_dict())
                + ["latency_estimate", "preprocessing_share", "verification"])

    def to_csv_row(self) -> list:
        src = self.config.matrix_path or "synthetic:%d,%d,%d" % self.config.synthetic
        return ([self.config.algo, src,
                 self.stats["nrows"], self.stats["ncols"], self.stats["nnz"]]
                + list(self.cost.to_dict().values())
                + [self.latency_estimate, self.preprocessing_share, self.verification])


def load_matrix(config: RunConfig) -> CscMatrix:
    if config.matrix_path is not None:
        with open(config.matrix_path, "r", encoding="ascii") as fh:
            return read_matrix_market(fh)
    n, z, seed = config.synthetic
    return generate_synthetic(n, z, seed)


def _column_stats(values: np.ndarray) -> dict:
    if len(values) == 0:
        return {"min": 0, "max": 0, "avg": 0.0, "var": 0.0}
    return {
        "min": int(values.min()),
        "max": int(values.max()),
        "avg": float(values.mean()),
        "var": float(values.var()),  # population variance
    }


def matrix_stats(A: CscMatrix, ops: np.ndarray) -> dict:
    """Size, nnz, and per-column distribution of non-zeros and multiplications."""
    return {
        "nrows": A.nrows,
        "ncols": A.ncols,
        "nnz": A.nnz,
        "nnz_per_column": _column_stats(A.column_nnz()),
        "mults_per_column": _column_stats(ops),
    }


def _dispatch(config: RunConfig, A: CscMatrix,
              engine: VecEngine) -> tuple[CscMatrix, CostReport, ColumnPlan | None]:
    algo = config.algo
    if algo == "spa":
        C, rep = spa_kernel(A, A, engine)
        return C, rep, None
    if algo == "esc":
        C, rep = esc_kernel(A, A, config.esc_threshold, engine, r=config.radix_r)
        return C, rep, None
    t = {"spars": math.inf, "hash": math.inf}.get(algo, config.t)
    plan = build_plan(A, A, config.b_min, config.b_max, engine.max_vl, t=t)
    if algo == "spars":
        C, rep = spars_kernel(A, A, config.b_min, config.b_max, engine, plan=plan)
    elif algo == "hash":
        C, rep = hash_kernel(A, A, config.b_min, config.b_max, config.hash_c,
                             engine, plan=plan)
    else:
        variant = "spars" if algo == "hspa" else "hash"
        C, rep = hybrid_kernel(A, A, config.t, config.b_min, config.b_max,
                               variant, engine, hash_c=config.hash_c, plan=plan)
    return C, rep, plan


def sparse_match(C: CscMatrix, ref: CscMatrix, rel_tol: float) -> bool:
    """Compare two products sparsely; both keep touched-but-cancelled entries."""
    a, b = C.canonicalize(), ref.canonicalize()
    if (a.nrows, a.ncols) != (b.nrows, b.ncols):
        return False
    if not (np.array_equal(a.column_pointers, b.column_pointers)
            and np.array_equal(a.row_indices, b.row_indices)):
        return False
    tol = rel_tol * np.maximum(1.0, np.abs(b.values))
    return bool(np.all(np.abs(a.values - b.values) <= tol))


def _verify(A: CscMatrix, C: CscMatrix) -> bool:
    if A.ncols <= DENSE_VERIFY_LIMIT:
        return matrices_match(C, dense_oracle(A, A), 1e-12)
    return sparse_match(C, gustavson_reference(A, A), 1e-12)


def run_once(config: RunConfig) -> RunReport:
    """Execute one configured run and assemble its report."""
    config.validate()
    A = load_matrix(config)
    ops = compute_ops(A, A)
    engine = VecEngine(max_vl=config.max_vl, lanes=config.lanes)
    C, cost, plan = _dispatch(config, A, engine)
    verdict = "skipped"
    if config.verify:
        verdict = "pass" if _verify(A, C) else "fail"
    if plan is not None:
        scalar = plan.scalar_ops
    elif config.algo == "esc":
        scalar = A.nnz + A.ncols  # load scan for the grouping pass
    else:
        scalar = 0
    share = scalar / (scalar + cost.loop_iterations) if scalar + cost.loop_iterations else 0.0
    return RunReport(
        config=config,
        stats=matrix_stats(A, ops),
        cost=cost,
        latency_estimate=engine.cycle_estimate,
        preprocessing_share=share,
        verification=verdict,
        plan=plan if config.dump_plan else None,
    )


_SWEEP_AXES = ("Z", "bmax", "t", "bmin")


def sweep(base: RunConfig, axis: str, values: list) -> list[RunReport]:
    """Re-run the base configuration once per axis value, in the given order."""
    if axis not in _SWEEP_AXES:
        raise InputError(f"axis must be one of {_SWEEP_AXES}, got {axis!r}")
    reports = []
    for v in values:
        if axis == "Z":
            if base.synthetic is None:
                raise InputError("sweeping Z requires a synthetic source")
            n, _, seed = base.synthetic
            cfg = replace(base, synthetic=(n, int(v), seed))
        elif axis == "bmax":
            cfg = replace(base, b_max=int(v), b_min=min(base.b_min, int(v)))
        elif axis == "bmin":
            cfg = replace(base, b_min=int(v), b_max=max(base.b_max, int(v)))
        else:
            cfg = replace(base, t=float(v))
        reports.append(run_once(cfg))
    return reports


def render_csv(rows: list[list]) -> str:
    """Comma-separated text with '.' decimals; fields with commas get quoted."""
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def sweep_csv(axis: str, values: list, reports: list[RunReport]) -> str:
    rows = [[axis] + RunReport.csv_header()]
    rows += [[v] + rep.to_csv_row() for v, rep in zip(values, reports)]
    return render_csv(rows)


def parse_algo_spec(spec: str) -> tuple[str, dict]:
    """Decode roster names like ``hash-32/256`` into (algo, config overrides)."""
    name = spec.strip()
    if "-" in name:
        algo, _, rest = name.partition("-")
        try:
            bmin, bmax = (int(x) for x in rest.split("/"))
        except ValueError:
            raise InputError(f"bad algorithm spec {spec!r}") from None
        overrides = {"b_min": bmin, "b_max": bmax}
    else:
        algo, overrides = name, {}
    if algo not in ALGOS:
        raise InputError(f"unknown algorithm in spec {spec!r}")
    return algo, overrides


def _load_source(token: str, base: RunConfig) -> RunConfig:
    if token.startswith("synthetic:"):
        parts = token[len("synthetic:"):].split(",")
        if len(parts) == 2:
            parts.append("1")
        n, z, seed = (int(p) for p in parts)
        return replace(base, matrix_path=None, synthetic=(n, z, seed))
    return replace(base, matrix_path=token, synthetic=None)


def compare(matrix_tokens: list[str], algo_specs: list[str], base: RunConfig,
            metric: str = "loop_iterations") -> dict:
    """Per-matrix cost ratios of each roster entry against the spa baseline.

    Ratios below 1 mean fewer units of the chosen metric than spa.  Returns
    rows (one per matrix), a geometric-mean summary over the successful
    rows, and a list of per-matrix errors (failures skip the row but do not
    abort the table).
    """
    if metric not in COMPARE_METRICS:
        raise InputError(f"metric must be one of {COMPARE_METRICS}, got {metric!r}")
    specs = [parse_algo_spec(s) for s in algo_specs]
    names = [s.strip() for s in algo_specs]
    rows = []
    errors = []
    for token in matrix_tokens:
        try:
            cfg0 = _load_source(token, base)
            baseline = run_once(replace(cfg0, algo="spa"))
            denom = baseline.cost.to_dict()[metric]
            ratios = []
            for algo, overrides in specs:
                rep = run_once(replace(cfg0, algo=algo, **overrides))
                num = rep.cost.to_dict()[metric]
                ratios.append(num / denom if denom else math.inf)
            best = names[min(range(len(ratios)), key=ratios.__getitem__)]
            rows.append({"matrix": token, "nnz": baseline.stats["nnz"],
                         "ratios": ratios, "best": best})
        except Exception as exc:  # keep going; report the failure
            errors.append({"matrix": token, "error": f"{type(exc).__name__}: {exc}"})
    summary = None
    if rows:
        geo = []
        for i in range(len(names)):
            logs = [math.log(r["ratios"][i]) for r in rows if r["ratios"][i] > 0]
            geo.append(math.exp(sum(logs) / len(logs)) if logs else math.inf)
        summary = geo
    return {"metric": metric, "algos": names, "rows": rows,
            "geomean": summary, "errors": errors}


def compare_csv(table: dict) -> str:
    rows = [["matrix", "nnz"] + [f"{a}_ratio" for a in table["algos"]] + ["best"]]
    for row in table["rows"]:
        rows.append([row["matrix"], row["nnz"]]
                    + [f"{x:.6g}" for x in row["ratios"]] + [row["best"]])
    if table["geomean"] is not None:
        rows.append(["geomean", ""] + [f"{x:.6g}" for x in table["geomean"]] + [""])
    return render_csv(rows)
