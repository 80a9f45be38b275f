"""SpGEMM kernels on an abstract long-vector machine with cost counters.

The package multiplies sparse matrices (C = A @ B, CSC storage) with six
algorithms written against a modelled vector unit, so their cost can be
compared with deterministic instruction and lane counters instead of
wall-clock time:

* ``spa_kernel``    -- sparse accumulator, one output column at a time
* ``spars_kernel``  -- one column per lane, columns sorted by load, blocked
* ``hash_kernel``   -- like spars, with per-lane shrinking hash tables
* ``hybrid_kernel`` -- heavy columns via spa, light tail via spars or hash
* ``esc_kernel``    -- expand / radix-sort / compress over column groups

See ``bench`` for run reports and the ``spgemm-bench`` command line.
"""

from .errors import FormatError, InputError, InternalError, ModelFault
from .machine import CostReport, VecEngine, VecMask, VecReg
from .matrix import (
    CscMatrix,
    DenseMatrix,
    TripletList,
    dense_oracle,
    from_triplets,
    generate_synthetic,
    gustavson_multiply_count,
    gustavson_reference,
    matrices_match,
    read_matrix_market,
    to_triplets,
    write_matrix_market,
)
from .plan import (
    ColumnPlan,
    build_plan,
    compute_ops,
    hash_size_schedule,
    hybrid_split,
    permute_columns,
    plan_blocks,
    sort_columns,
    unpermute_columns,
)
from .kernels import (
    DEFAULT_HASH_C,
    HashTable,
    SpaAccumulator,
    hash_kernel,
    hybrid_kernel,
    spa_kernel,
    spars_kernel,
)
from .esc import (
    CscAccumulator,
    EscTriplets,
    choose_radix,
    esc_compress,
    esc_expand,
    esc_kernel,
    esc_radix_sort,
    group_columns,
    radix_rounds,
)

__version__ = "0.1.0"
