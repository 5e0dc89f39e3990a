import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from glcc.affinity import (
    AffinityGraph,
    build_affinity,
    laplacian,
    normalized_weights,
    sample_neighbor,
)
from glcc.errors import NormalizationError, ParameterError


def unit_rows(rng, n, m):
    x = rng.standard_normal((n, m))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def dense_oracle(h, k, tau):
    """Full similarity matrix, per-row top-k with self first, max-symmetrized."""
    n = len(h)
    S = h @ h.T
    A = np.zeros((n, n))
    for i in range(n):
        cands = sorted((j for j in range(n) if j != i), key=lambda j: (-S[i, j], j))
        A[i, i] = math.exp(1.0 / tau)
        for j in cands[: k - 1]:
            A[i, j] = math.exp(S[i, j] / tau)
    return np.maximum(A, A.T)


def test_identical_vectors_weight():
    h = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    ag = build_affinity(h, k=2, tau=0.1)
    A = ag.A.toarray()
    assert A[0, 1] == A[1, 0] == pytest.approx(22026.465794806718)
    # the orthogonal row ties at cosine 0 and picks index 0
    assert A[0, 2] == A[2, 0] == 1.0
    assert A[1, 2] == A[2, 1] == 0.0


def test_diagonal_is_exp_inverse_tau(rng):
    ag = build_affinity(unit_rows(rng, 20, 4), k=3, tau=0.1)
    np.testing.assert_array_equal(ag.A.diagonal(), np.full(20, math.exp(10.0)))


def test_six_points_match_brute_force(rng):
    h = unit_rows(rng, 6, 3)
    ag = build_affinity(h, k=2, tau=0.5)
    np.testing.assert_array_equal(ag.A.toarray(), dense_oracle(h, 2, 0.5))


def test_ties_broken_by_lower_index():
    h = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]])
    ag = build_affinity(h, k=2, tau=1.0)
    A = ag.A.toarray()
    # rows 1..3 are mutually tied; each picks the lowest other index
    assert A[1, 2] > 0 and A[2, 1] > 0 and A[3, 1] > 0
    assert A[2, 3] == 0


def test_parameter_errors(rng):
    h = unit_rows(rng, 4, 2)
    with pytest.raises(ParameterError):
        build_affinity(h, k=4)
    with pytest.raises(ParameterError):
        build_affinity(h, k=0)
    with pytest.raises(NormalizationError):
        build_affinity(h * 2.0, k=2)


@given(seed=st.integers(0, 10_000), n=st.integers(3, 40), k=st.integers(1, 8))
@settings(max_examples=60, deadline=None)
def test_structure_invariants(seed, n, k):
    k = min(k, n - 1)
    h = unit_rows(np.random.default_rng(seed), n, 3)
    ag = build_affinity(h, k=k, tau=0.2)
    A = ag.A.toarray()
    assert np.array_equal(A, A.T)
    off = (A > 0).sum(axis=1) - 1
    assert np.all(off >= k - 1)
    # positives are exactly the union of out- and in-neighborhoods
    S = h @ h.T
    np.fill_diagonal(S, -np.inf)
    out = np.zeros((n, n), dtype=bool)
    for i in range(n):
        out[i, sorted(range(n), key=lambda j: (-S[i, j], j))[: k - 1]] = True
    np.testing.assert_array_equal(A > 0, out | out.T | np.eye(n, dtype=bool))
    # rebuild is idempotent
    assert np.array_equal(build_affinity(h, k=k, tau=0.2).A.toarray(), A)


def test_chunked_build_matches(rng):
    h = unit_rows(rng, 37, 5)
    a = build_affinity(h, k=4, tau=0.1).A.toarray()
    b = build_affinity(h, k=4, tau=0.1, chunk=5).A.toarray()
    # row-chunked products round differently from the full Gram matrix
    np.testing.assert_array_equal(a > 0, b > 0)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=0)
    assert np.array_equal(b, b.T)


# ---------------------------------------------------------------- laplacian


def test_two_node_laplacian():
    for w in (0.3, 1.0, 17.0):
        L = laplacian(AffinityGraph.from_matrix([[0, w], [w, 0]])).toarray()
        np.testing.assert_allclose(L, [[1, -1], [-1, 1]], atol=1e-15)


def test_path_laplacian_dense():
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    L = laplacian(AffinityGraph.from_matrix(A)).toarray()
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(L, [[1, -s, 0], [-s, 1, -s], [0, -s, 1]], atol=1e-15)


def test_laplacian_off_diagonal_formula(rng):
    ag = build_affinity(unit_rows(rng, 15, 3), k=4, tau=0.3)
    A = ag.A.toarray()
    d = A.sum(axis=1)
    L = laplacian(ag).toarray()
    expected = np.eye(15) - A / np.sqrt(np.outer(d, d))
    np.testing.assert_allclose(L, expected, atol=1e-14)
    assert np.all(L[~np.eye(15, dtype=bool)] <= 0)


def test_laplacian_spectrum_small(rng):
    ag = build_affinity(unit_rows(rng, 12, 3), k=3, tau=0.1)
    L = laplacian(ag).toarray()
    assert np.array_equal(L, L.T)
    ev = np.linalg.eigvalsh(L)
    assert ev.min() >= -1e-8 and ev.max() <= 2 + 1e-8


# ---------------------------------------------------------------- sampling


def test_sample_single_neighbor(rng):
    ag = AffinityGraph.from_matrix([[1, 2, 0], [2, 1, 0], [0, 0, 1]])
    assert {sample_neighbor(ag, 0, rng) for _ in range(50)} == {1}


def test_sample_isolated_returns_self(rng):
    ag = AffinityGraph.from_matrix([[1, 2, 0], [2, 1, 0], [0, 0, 1]])
    assert sample_neighbor(ag, 2, rng) == 2


def test_sample_equal_weights_frequency():
    ag = AffinityGraph.from_matrix([[5, 3, 3], [3, 5, 0], [3, 0, 5]])
    rng = np.random.default_rng(0)
    draws = np.array([sample_neighbor(ag, 0, rng) for _ in range(10_000)])
    assert set(draws.tolist()) == {1, 2}
    assert abs((draws == 1).mean() - 0.5) < 0.05


def test_normalized_weights_cases(rng):
    ag = AffinityGraph.from_matrix([[9, 2, 2, 0], [2, 9, 0, 0], [2, 0, 9, 0], [0, 0, 0, 9]])
    assert normalized_weights(ag, 1) == {0: 1.0}
    assert normalized_weights(ag, 0) == {1: 0.5, 2: 0.5}
    assert normalized_weights(ag, 3) == {}
    big = build_affinity(unit_rows(rng, 30, 3), k=6, tau=0.1)
    for i in range(30):
        assert sum(normalized_weights(big, i).values()) == pytest.approx(1.0, abs=1e-9)


def test_export_coo(tmp_path, rng):
    ag = build_affinity(unit_rows(rng, 5, 2), k=2, tau=1.0)
    p = ag.export_coo(tmp_path / "a.csv")
    rows = p.read_text().strip().splitlines()
    assert rows[0] == "i,j,weight" and len(rows) == ag.A.nnz + 1
