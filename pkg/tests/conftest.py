import numpy as np
import pytest

import vecspgemm as vg

# 4x4 worked example used throughout: C = A @ B computed by hand.
A_GRID = [
    [1, 0, 5, 0],
    [0, 3, 0, 0],
    [4, 0, 0, 1],
    [0, 0, 2, 0],
]
B_GRID = [
    [0, 1, 2, 3],
    [2, 0, 4, 5],
    [1, 3, 0, 1],
    [0, 0, 1, 2],
]
C_GRID = [
    [5, 16, 2, 8],
    [6, 0, 12, 15],
    [0, 4, 9, 14],
    [2, 6, 0, 2],
]


@pytest.fixture(scope="session")
def fig_pair():
    return vg.CscMatrix.from_dense(A_GRID), vg.CscMatrix.from_dense(B_GRID)


@pytest.fixture(scope="session")
def fig_product():
    return np.array(C_GRID, dtype=float)


def random_csc(rng, nrows, ncols, density=0.3):
    """Random triplet-built matrix, possibly with duplicate coordinates."""
    n_entries = int(round(density * nrows * ncols))
    rows = rng.integers(0, nrows, size=n_entries)
    cols = rng.integers(0, ncols, size=n_entries)
    vals = rng.uniform(-2.0, 2.0, size=n_entries)
    return vg.from_triplets(vg.TripletList(nrows, ncols, rows, cols, vals))


def random_pair(rng, max_dim=40, density=0.25):
    """Random (A, B) with compatible inner dimension."""
    m = int(rng.integers(1, max_dim))
    k = int(rng.integers(1, max_dim))
    n = int(rng.integers(1, max_dim))
    return random_csc(rng, m, k, density), random_csc(rng, k, n, density)
