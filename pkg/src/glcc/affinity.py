"""Adaptive kNN affinity graph over dataset instances and its Laplacian."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from glcc.errors import GLCCError, NormalizationError, ParameterError


@dataclass(eq=False)
class AffinityGraph:
    """Symmetric non-negative affinity matrix over N instances.

    Attributes:
        A: ``(N, N)`` CSR matrix.
        k: neighbor count used at build time (self included).
        tau: temperature used at build time.
        degree: row sums of ``A``.
        epoch_built: training epoch the graph was built in.
    """

    A: sp.csr_matrix
    k: int
    tau: float
    degree: np.ndarray
    epoch_built: int = 0

    @classmethod
    def from_matrix(cls, A, k: int = 0, tau: float = 1.0, epoch_built: int = 0) -> "AffinityGraph":
        A = sp.csr_matrix(A, dtype=np.float64)
        A.eliminate_zeros()
        A.sort_indices()
        return cls(A, k, tau, np.asarray(A.sum(axis=1)).ravel(), epoch_built)

    @classmethod
    def empty(cls, n: int) -> "AffinityGraph":
        """Graph with unit self-loops only; every node is isolated."""
        return cls.from_matrix(sp.identity(n, format="csr"))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def off_diagonal_row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.A.indptr[i], self.A.indptr[i + 1]
        cols = self.A.indices[lo:hi]
        vals = self.A.data[lo:hi]
        mask = cols != i
        return cols[mask], vals[mask]

    def export_coo(self, path) -> Path:
        """Write ``i j weight`` lines, one per stored entry."""
        coo = self.A.tocoo()
        path = Path(path)
        with open(path, "w") as fh:
            fh.write("i,j,weight\n")
            for i, j, w in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i},{j},{w!r}\n")
        return path


def _check_unit_rows(features: np.ndarray, atol: float = 1e-6) -> None:
    norms = np.linalg.norm(features, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > atol)
    if bad.size:
        raise NormalizationError(f"row {bad[0]} has norm {norms[bad[0]]:.8g}, expected 1")


def top_k_with_self(sim: np.ndarray, rows: np.ndarray, k: int) -> np.ndarray:
    """Neighbor indices for each row: itself first, then the k-1 most similar.

    Ties are broken by ascending column index.
    """
    n = sim.shape[1]
    s = np.array(sim, dtype=np.float64, copy=True)
    s[np.arange(len(rows)), rows] = -np.inf
    cols = np.broadcast_to(np.arange(n), s.shape)
    # lexsort keys: last is primary (descending similarity), then ascending index
    order = np.lexsort((cols, -s), axis=-1)
    return np.concatenate([np.asarray(rows).reshape(-1, 1), order[:, : k - 1]], axis=1)


def build_affinity(features, k: int = 5, tau: float = 0.1, epoch: int = 0, chunk: int = 1024) -> AffinityGraph:
    """Build the kNN affinity graph from unit-norm instance features.

    Each instance counts itself as one of its ``k`` neighbors. Edge weights
    are ``exp(h_i . h_j / tau)``; the directed kNN relation is symmetrized
    by elementwise maximum.

    When all rows fit in one chunk the full Gram matrix ``h @ h.T`` is used,
    which BLAS computes exactly symmetric; row-chunked products can differ
    from their transpose in the last ulp.
    """
    h = np.asarray(features, dtype=np.float64)
    n = h.shape[0]
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    if not 1 <= k < n:
        raise ParameterError(f"need 1 <= k < N, got k={k}, N={n}")
    _check_unit_rows(h)
    rows_i, cols_j, vals = [], [], []
    gram = h @ h.T if n <= chunk else None
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        sim = gram if gram is not None else h[idx] @ h.T
        nbrs = top_k_with_self(sim, idx, k)
        w = np.exp(np.take_along_axis(sim, nbrs, axis=1) / tau)
        w[:, 0] = np.exp(1.0 / tau)
        rows_i.append(np.repeat(idx, k))
        cols_j.append(nbrs.ravel())
        vals.append(w.ravel())
    directed = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows_i), np.concatenate(cols_j))), shape=(n, n)
    )
    A = directed.maximum(directed.T).tocsr()
    return AffinityGraph.from_matrix(A, k, tau, epoch)


def laplacian(ag: AffinityGraph) -> sp.csr_matrix:
    """Normalized symmetric Laplacian ``I - D^-1/2 A D^-1/2`` as CSR."""
    d = ag.degree
    if np.any(d <= 0):
        raise GLCCError(f"zero degree at node {int(np.flatnonzero(d <= 0)[0])}")
    inv = sp.diags(1.0 / np.sqrt(d))
    L = sp.identity(ag.n, format="csr") - inv @ ag.A @ inv
    L = sp.csr_matrix(L)
    # float rounding in the two-sided product can break exact symmetry
    L = (L + L.T) * 0.5
    L.sort_indices()
    return L.tocsr()


def sample_neighbor(ag: AffinityGraph, i: int, rng: np.random.Generator) -> int:
    """Draw an off-diagonal neighbor of ``i`` with probability proportional to weight.

    Returns ``i`` when it has no off-diagonal neighbor.
    """
    cols, vals = ag.off_diagonal_row(i)
    if cols.size == 0:
        return int(i)
    if cols.size == 1:
        return int(cols[0])
    return int(cols[rng.choice(cols.size, p=vals / vals.sum())])


def normalized_weights(ag: AffinityGraph, i: int) -> dict[int, float]:
    cols, vals = ag.off_diagonal_row(i)
    if cols.size == 0:
        return {}
    return dict(zip(cols.tolist(), (vals / vals.sum()).tolist()))


def neighbor_weight_matrix(ag: AffinityGraph) -> sp.csr_matrix:
    """Row-normalized off-diagonal weights; all-zero rows for isolated nodes."""
    W = ag.A.tolil()
    W.setdiag(0)
    W = W.tocsr()
    W.eliminate_zeros()
    s = np.asarray(W.sum(axis=1)).ravel()
    scale = np.divide(1.0, s, out=np.zeros_like(s), where=s > 0)
    return sp.diags(scale) @ W
