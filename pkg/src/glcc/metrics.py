"""Clustering metrics (NMI, ACC, ARI) and a k-means baseline."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from glcc.errors import ParameterError


def _check_pair(pred, truth, min_len: int = 1):
    p = np.asarray(pred).reshape(-1)
    t = np.asarray(truth).reshape(-1)
    if p.shape != t.shape:
        raise ParameterError(f"length mismatch: {p.size} predictions vs {t.size} labels")
    if p.size < min_len:
        raise ParameterError(f"need at least {min_len} samples, got {p.size}")
    return p, t


def contingency(pred, truth) -> np.ndarray:
    """Counts table with predicted clusters as rows and true classes as columns."""
    p, t = _check_pair(pred, truth, 0)
    _, pi = np.unique(p, return_inverse=True)
    _, ti = np.unique(t, return_inverse=True)
    C = np.zeros((pi.max(initial=-1) + 1, ti.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(C, (pi, ti), 1)
    return C


def _entropy(counts: np.ndarray) -> float:
    c = counts[counts > 0].astype(np.float64)
    q = c / c.sum()
    return float(-(q * np.log(q)).sum())


def nmi(pred, truth) -> float:
    """Mutual information normalized by the geometric mean of the two entropies."""
    p, t = _check_pair(pred, truth)
    C = contingency(p, t).astype(np.float64)
    n = C.sum()
    hp, ht = _entropy(C.sum(axis=1)), _entropy(C.sum(axis=0))
    if hp == 0.0 or ht == 0.0:
        # both single-cluster: the partitions coincide
        return 1.0 if hp == ht else 0.0
    outer = np.outer(C.sum(axis=1), C.sum(axis=0))
    nz = C > 0
    mi = float((C[nz] / n * np.log(C[nz] * n / outer[nz])).sum())
    return float(min(max(mi / math.sqrt(hp * ht), 0.0), 1.0))


def acc(pred, truth) -> float:
    """Fraction matched under the best one-to-one cluster-to-class map."""
    p, t = _check_pair(pred, truth)
    C = contingency(p, t)
    rows, cols = linear_sum_assignment(-C)
    return float(C[rows, cols].sum() / p.size)


def ari(pred, truth) -> float:
    p, t = _check_pair(pred, truth, 2)
    C = contingency(p, t).astype(np.float64)

    def pairs(x):
        return (x * (x - 1) / 2.0).sum()

    index = pairs(C)
    a, b = pairs(C.sum(axis=1)), pairs(C.sum(axis=0))
    total = p.size * (p.size - 1) / 2.0
    expected = a * b / total
    max_index = (a + b) / 2.0
    if max_index == expected:
        # both partitions trivial (all singletons or one block)
        return 1.0
    return float((index - expected) / (max_index - expected))


@dataclass
class MetricsReport:
    nmi: float
    acc: float
    ari: float
    n: int
    k_pred: int
    k_true: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    CSV_FIELDS = ("nmi", "acc", "ari", "n", "k_pred", "k_true")

    def csv_row(self) -> str:
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in (getattr(self, f) for f in self.CSV_FIELDS))


def evaluate_labels(pred, truth) -> MetricsReport:
    p, t = _check_pair(pred, truth)
    return MetricsReport(
        nmi=nmi(p, t),
        acc=acc(p, t),
        ari=ari(p, t) if p.size >= 2 else 1.0,
        n=int(p.size),
        k_pred=len(np.unique(p)),
        k_true=len(np.unique(t)),
    )


# ---------------------------------------------------------------- k-means


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def greedy_kmeanspp(X: np.ndarray, K: int, rng: np.random.Generator, n_trials: Optional[int] = None) -> np.ndarray:
    """Greedy k-means++ seeding: each step keeps the best of several D^2 draws."""
    n = X.shape[0]
    n_trials = n_trials or 2 + int(math.log(K))
    centers = [X[int(rng.integers(n))]]
    closest = _sq_dists(X, centers[0][None]).ravel()
    for _ in range(1, K):
        total = closest.sum()
        if total <= 0:
            cand = rng.integers(n, size=n_trials)
        else:
            cand = np.searchsorted(np.cumsum(closest), rng.random(n_trials) * total)
            cand = np.minimum(cand, n - 1)
        d = np.minimum(closest[None, :], _sq_dists(X, X[cand]).T)
        best = int(np.argmin(d.sum(axis=1)))
        centers.append(X[cand[best]])
        closest = d[best]
    return np.array(centers)


def kmeans(points, K: int, seed: int = 0, max_iter: int = 300, return_centers: bool = False):
    """Lloyd's k-means from greedy k-means++ seeds.

    Iterates until the assignment stops changing or ``max_iter`` rounds. An
    empty cluster is re-seeded at the point farthest from its centroid.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if K < 1 or n < K:
        raise ParameterError(f"need 1 <= K <= N, got K={K}, N={n}")
    rng = np.random.default_rng(seed)
    C = greedy_kmeanspp(X, K, rng)
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        D = _sq_dists(X, C)
        new = np.argmin(D, axis=1)
        for c in range(K):
            if not np.any(new == c):
                far = int(np.argmax(D[np.arange(n), new]))
                new[far] = c
                D[far] = 0.0
        C = np.array([X[new == c].mean(axis=0) for c in range(K)])
        if np.array_equal(new, labels):
            break
        labels = new
    return (labels, C) if return_centers else labels


def inertia(points, labels, centers) -> float:
    X = np.asarray(points, dtype=np.float64)
    return float(((X - centers[labels]) ** 2).sum())
