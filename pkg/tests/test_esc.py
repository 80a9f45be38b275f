import math

import numpy as np
import pytest

import vecspgemm as vg
from vecspgemm import VecEngine
from vecspgemm.esc import CscAccumulator

from conftest import random_pair


def lex_keys(t):
    return list(zip(t.id_col.tolist(), t.id_row.tolist()))


def test_group_columns_threshold_rule(fig_pair):
    A, B = fig_pair
    ops = vg.compute_ops(A, B)
    assert vg.group_columns(ops, 10000) == [(0, 4)]
    assert vg.group_columns(ops, 1) == [(0, 1), (1, 2), (2, 3), (3, 4)]
    assert vg.group_columns(ops, 7) == [(0, 2), (2, 4)]
    assert vg.group_columns(np.array([], dtype=np.int64), 5) == []


def test_group_columns_absorbs_empty_columns():
    ops = np.array([0, 0, 3, 0])
    assert vg.group_columns(ops, 1) == [(0, 3), (3, 4)]


def test_expand_fig_count(fig_pair):
    A, B = fig_pair
    t = vg.esc_expand(A, B, range(4), VecEngine())
    assert len(t) == 17
    t0 = vg.esc_expand(A, B, [], VecEngine())
    assert len(t0) == 0
    t3 = vg.esc_expand(A, B, [3], VecEngine())
    assert len(t3) == int(vg.compute_ops(A, B)[3])


def test_expand_products_are_complete(fig_pair):
    A, B = fig_pair
    t = vg.esc_expand(A, B, range(4), VecEngine())
    dense = np.zeros((4, 4))
    np.add.at(dense, (t.id_row, t.id_col), t.esc_val)
    assert np.array_equal(dense, vg.dense_oracle(A, B).as_2d())


def test_radix_rounds_and_choice():
    assert vg.radix_rounds(4, 5) == 1
    assert vg.radix_rounds(4096, 5) == 3
    assert vg.radix_rounds(4096, 6) == 2
    assert vg.choose_radix(4096) == 6
    assert vg.choose_radix(4) == 5
    assert vg.choose_radix(32) == 5          # one round either way
    for n in (1, 2, 3, 17, 31, 33, 1000, 1024, 4095, 4096, 1 << 20):
        want = 6 if vg.radix_rounds(n, 6) < vg.radix_rounds(n, 5) else 5
        assert vg.choose_radix(n) == want


def test_radix_sort_orders_by_col_then_row(fig_pair):
    A, B = fig_pair
    t = vg.esc_expand(A, B, range(4), VecEngine())
    ts = vg.esc_radix_sort(t, VecEngine())
    keys = lex_keys(ts)
    assert keys == sorted(keys)
    assert np.isclose(sum(ts.esc_val), sum(t.esc_val))


def test_radix_sort_is_stable():
    # equal keys keep their payload order
    t = vg.EscTriplets(4, 4,
                       np.array([1, 1, 0, 1]), np.array([2, 2, 1, 2]),
                       np.array([10.0, 20.0, 5.0, 30.0]))
    ts = vg.esc_radix_sort(t, VecEngine())
    assert ts.esc_val.tolist() == [5.0, 10.0, 20.0, 30.0]
    again = vg.esc_radix_sort(ts, VecEngine())
    assert again.esc_val.tolist() == ts.esc_val.tolist()


def test_radix_sort_fixed_radix_matches_auto():
    rng = np.random.default_rng(13)
    k = 500
    t = vg.EscTriplets(300, 200,
                       rng.integers(0, 300, k), rng.integers(0, 200, k),
                       rng.uniform(-1, 1, k))
    a = vg.esc_radix_sort(t, VecEngine(), r=5)
    b = vg.esc_radix_sort(t, VecEngine(), r=6)
    assert np.array_equal(a.id_row, b.id_row)
    assert np.array_equal(a.id_col, b.id_col)
    assert np.array_equal(a.esc_val, b.esc_val)


def test_compress_merges_runs(fig_pair):
    A, B = fig_pair
    ts = vg.esc_radix_sort(vg.esc_expand(A, B, range(4), VecEngine()), VecEngine())
    out = CscAccumulator(4, 4)
    n = vg.esc_compress(ts, VecEngine(), out)
    C = out.to_matrix()
    assert n == 13 and C.nnz == 13
    assert vg.matrices_match(C, vg.dense_oracle(A, B), 0.0)


def test_compress_single_key():
    k = 37
    t = vg.EscTriplets(5, 5, np.full(k, 2), np.full(k, 3), np.full(k, 1.5))
    out = CscAccumulator(5, 5)
    n = vg.esc_compress(t, VecEngine(max_vl=8), out)
    C = out.to_matrix()
    assert n == 1 and C.nnz == 1
    assert np.isclose(C.values[0], 1.5 * k)


def test_compress_no_duplicates_is_identity():
    rows = np.arange(10, dtype=np.int64)
    t = vg.EscTriplets(10, 1, rows, np.zeros(10, dtype=np.int64),
                       np.linspace(1, 2, 10))
    out = CscAccumulator(10, 1)
    assert vg.esc_compress(t, VecEngine(max_vl=4), out) == 10
    assert np.array_equal(out.to_matrix().values, np.linspace(1, 2, 10))


def test_esc_kernel_fig(fig_pair):
    A, B = fig_pair
    C, rep = vg.esc_kernel(A, B, 10000, VecEngine())
    assert C.nnz == 13
    assert vg.matrices_match(C, vg.dense_oracle(A, B), 0.0)
    assert C.canonical


def test_esc_group_threshold_invariance(fig_pair):
    A, B = fig_pair
    big, _ = vg.esc_kernel(A, B, 10000, VecEngine())
    small, _ = vg.esc_kernel(A, B, 1, VecEngine())
    assert small.same_as(big)


def test_esc_random_equivalence():
    rng = np.random.default_rng(41)
    for _ in range(8):
        A, B = random_pair(rng, max_dim=30)
        for threshold in (1, 64, 10000):
            C, _ = vg.esc_kernel(A, B, threshold, VecEngine())
            assert vg.matrices_match(C, vg.dense_oracle(A, B), 1e-12)


def test_esc_small_max_vl():
    A = vg.generate_synthetic(50, 6, seed=2)
    C, _ = vg.esc_kernel(A, A, 100, VecEngine(max_vl=8))
    assert vg.matrices_match(C, vg.dense_oracle(A, A), 1e-12)


def test_esc_rejects_bad_threshold(fig_pair):
    A, B = fig_pair
    with pytest.raises(vg.InputError):
        vg.esc_kernel(A, B, 0, VecEngine())
