"""File round trip and the benchmark report, end to end.

Writes a small matrix in Matrix Market coordinate form, reads it back, runs
the hybrid hash kernel on it through the benchmark layer, and prints the
JSON report the command line would emit.  The same flow is available as

    spgemm-bench run --algo hhash --matrix demo.mtx --verify
"""

import json
import tempfile
from pathlib import Path

import vecspgemm as vg
from vecspgemm.bench import RunConfig, run_once

matrix = vg.generate_synthetic(64, 3, seed=5)
path = Path(tempfile.mkdtemp()) / "demo.mtx"
path.write_text(vg.write_matrix_market(matrix))
print(f"wrote {path} ({matrix.nnz} non-zeros)")

again = vg.read_matrix_market(path.read_text())
print("round trip identical:", again.same_as(matrix))

report = run_once(RunConfig(
    algo="hhash",
    matrix_path=str(path),
    t=40.0,
    b_min=16,
    b_max=64,
    verify=True,
    dump_plan=True,
))
doc = report.to_json_dict()
doc["plan"]["ops"] = doc["plan"]["ops"][:8] + ["..."]   # keep the demo short
doc["plan"]["perm"] = doc["plan"]["perm"][:8] + ["..."]
print(json.dumps(doc, indent=2, sort_keys=True))
