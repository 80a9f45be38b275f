"""Walk a 4x4 sparse product through every kernel.

The pair below is small enough to check by hand: column 1 of the result is
1 * (first A column) + 3 * (third A column) = (16, 0, 4, 6).  All six
algorithms compute the same matrix; what differs is how many main-loop trips
and vector instructions they spend.
"""

import numpy as np

import vecspgemm as vg
from vecspgemm import VecEngine

A = vg.CscMatrix.from_dense([
    [1, 0, 5, 0],
    [0, 3, 0, 0],
    [4, 0, 0, 1],
    [0, 0, 2, 0],
])
B = vg.CscMatrix.from_dense([
    [0, 1, 2, 3],
    [2, 0, 4, 5],
    [1, 3, 0, 1],
    [0, 0, 1, 2],
])

print("A =\n", A.to_dense())
print("B =\n", B.to_dense())
print("reference product =\n", vg.gustavson_reference(A, B).to_dense())

oracle = vg.dense_oracle(A, B)
runs = [
    ("spa", vg.spa_kernel(A, B, VecEngine())),
    ("spars 4/4", vg.spars_kernel(A, B, 4, 4, VecEngine())),
    ("hash 4/4", vg.hash_kernel(A, B, 4, 4, engine=VecEngine())),
    ("hspa t=4", vg.hybrid_kernel(A, B, 4.0, 4, 4, "spars", VecEngine())),
    ("hhash t=4", vg.hybrid_kernel(A, B, 4.0, 4, 4, "hash", VecEngine())),
    ("esc", vg.esc_kernel(A, B, 10000, VecEngine())),
]

print(f"\n{'algorithm':<10} {'ok':<3} {'loops':>5} {'instr':>6} {'lanes busy':>10}")
for name, (C, rep) in runs:
    ok = vg.matrices_match(C, oracle, 0.0)
    print(f"{name:<10} {str(ok):<3} {rep.loop_iterations:>5} "
          f"{rep.vector_instructions:>6} {rep.utilization():>10.2f}")

# the one-column kernel needs one trip per B non-zero (11 here) and touches
# 17 coefficients: the per-column multiplication loads 3 + 4 + 4 + 6
ops = vg.compute_ops(A, B)
print("\nper-column loads:", ops.tolist(), " total:", int(ops.sum()))
print("columns sorted by load:", vg.sort_columns(ops).tolist())
