"""Neighbor-aware pseudo-labels and confident-subset selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from glcc.affinity import AffinityGraph, neighbor_weight_matrix, normalized_weights
from glcc.errors import ParameterError


def entropy_rows(P: np.ndarray) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(np.maximum(P, 1e-300)), 0.0)
    return -terms.sum(axis=-1)


def neighbor_average(i: int, Z_full: np.ndarray, ag: Optional[AffinityGraph]) -> np.ndarray:
    """Own assignment plus the weight-normalized mean of the neighbors', renormalized."""
    p = np.asarray(Z_full[i], dtype=np.float64)
    w = normalized_weights(ag, i) if ag is not None else {}
    if not w:
        return p / p.sum()
    raw = p.copy()
    for u, a in w.items():
        raw += a * np.asarray(Z_full[u], dtype=np.float64)
    return raw / raw.sum()


def neighbor_average_all(Z_full: np.ndarray, ag: Optional[AffinityGraph]) -> np.ndarray:
    Z = np.asarray(Z_full, dtype=np.float64)
    raw = Z if ag is None else Z + neighbor_weight_matrix(ag) @ Z
    return raw / raw.sum(axis=1, keepdims=True)


@dataclass
class PseudoLabelSet:
    indices: np.ndarray
    labels: np.ndarray
    p_ave: np.ndarray
    entropies: np.ndarray
    ratio: float
    all_entropies: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.indices)

    def __bool__(self) -> bool:
        return len(self.indices) > 0

    def dump(self, path) -> Path:
        """Write ``index,label,entropy`` rows."""
        path = Path(path)
        with open(path, "w") as fh:
            fh.write("index,label,entropy\n")
            for i, y, e in zip(self.indices, self.labels, self.entropies):
                fh.write(f"{i},{y},{e!r}\n")
        return path


def select_confident(Z_full: np.ndarray, ag: Optional[AffinityGraph], r: float) -> PseudoLabelSet:
    """Pick the ``floor(r N)`` samples whose neighbor-averaged assignment has least entropy.

    Ties in entropy go to the lower index; ties in the argmax go to the lower
    class. An empty set is returned when ``floor(r N) == 0``.
    """
    if not 0.0 < r <= 1.0:
        raise ParameterError(f"ratio must lie in (0, 1], got {r}")
    P = neighbor_average_all(Z_full, ag)
    n = P.shape[0]
    ent = entropy_rows(P)
    m = math.floor(r * n)
    order = np.argsort(ent, kind="stable")[:m]
    return PseudoLabelSet(
        indices=order.astype(np.int64),
        labels=np.argmax(P[order], axis=1).astype(np.int64),
        p_ave=P[order],
        entropies=ent[order],
        ratio=r,
        all_entropies=ent,
    )
