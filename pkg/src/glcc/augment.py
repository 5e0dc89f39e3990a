"""Stochastic graph augmentations used to build the second contrastive view."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from glcc.errors import ParameterError
from glcc.graph import Graph, canonical_edges

STRATEGIES = ("node_drop", "edge_perturb", "subgraph", "attr_mask")


@dataclass(frozen=True)
class AugmentationSpec:
    strategy: str = "random_choice"
    ratio: float = 0.1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES + ("random_choice",):
            raise ParameterError(f"unknown augmentation strategy {self.strategy!r}")
        if not 0.0 <= self.ratio < 1.0:
            raise ParameterError(f"ratio must lie in [0, 1), got {self.ratio}")

    def concrete(self, rng: np.random.Generator) -> "AugmentationSpec":
        """Resolve ``random_choice`` to one of the four strategies."""
        if self.strategy != "random_choice":
            return self
        return AugmentationSpec(STRATEGIES[int(rng.integers(len(STRATEGIES)))], self.ratio, self.seed)


def _induced(g: Graph, keep: np.ndarray) -> Graph:
    """Subgraph induced by the sorted node indices ``keep``, reindexed."""
    remap = np.full(g.node_count, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    e = g.edges
    if len(e):
        ok = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
        e = remap[e[ok]]
    return Graph(len(keep), e.reshape(-1, 2), g.node_features[keep], g.label)


def node_drop(g: Graph, ratio: float, rng: np.random.Generator) -> Graph:
    n_drop = math.floor(ratio * g.node_count)
    if n_drop == 0 or n_drop >= g.node_count:
        return g
    drop = rng.choice(g.node_count, size=n_drop, replace=False)
    keep = np.setdiff1d(np.arange(g.node_count), drop)
    return _induced(g, keep)


def _sample_non_edges(g: Graph, m: int, rng: np.random.Generator) -> np.ndarray:
    n = g.node_count
    existing = set(map(tuple, g.edges.tolist()))
    n_pairs = n * (n - 1) // 2
    m = min(m, n_pairs - len(existing))
    if m <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    if len(existing) > n_pairs // 2:
        iu, ju = np.triu_indices(n, k=1)
        cand = [(a, b) for a, b in zip(iu.tolist(), ju.tolist()) if (a, b) not in existing]
        pick = rng.choice(len(cand), size=m, replace=False)
        return np.array([cand[i] for i in np.sort(pick)], dtype=np.int64)
    added: list[tuple[int, int]] = []
    seen = set(existing)
    while len(added) < m:
        a, b = (int(t) for t in rng.integers(n, size=2))
        if a == b:
            continue
        pair = (min(a, b), max(a, b))
        if pair in seen:
            continue
        seen.add(pair)
        added.append(pair)
    return np.array(added, dtype=np.int64)


def edge_perturb(g: Graph, ratio: float, rng: np.random.Generator) -> Graph:
    """Remove ``floor(ratio * |E|)`` edges and add as many former non-edges."""
    m = math.floor(ratio * g.num_edges)
    if m == 0:
        return g
    added = _sample_non_edges(g, m, rng)
    m = len(added)
    if m == 0:
        return g
    removed = rng.choice(g.num_edges, size=m, replace=False)
    kept = np.delete(g.edges, removed, axis=0)
    return Graph(g.node_count, canonical_edges(np.concatenate([kept, added])), g.node_features, g.label)


def subgraph(g: Graph, ratio: float, rng: np.random.Generator) -> Graph:
    """Keep ``ceil((1 - ratio) * |V|)`` nodes grown by a random walk.

    The walk starts at a uniformly chosen seed node and repeatedly adds a
    uniformly chosen unvisited neighbor of the visited set; when the
    component is exhausted it restarts from a random unvisited node.
    """
    n = g.node_count
    target = math.ceil((1.0 - ratio) * n)
    if target >= n:
        return g
    target = max(target, 1)
    adj = g.adjacency_lists()
    start = int(rng.integers(n))
    visited = {start}
    frontier = set(adj[start]) - visited
    while len(visited) < target:
        if frontier:
            nxt = sorted(frontier)[int(rng.integers(len(frontier)))]
        else:
            rest = sorted(set(range(n)) - visited)
            nxt = rest[int(rng.integers(len(rest)))]
        visited.add(nxt)
        frontier.discard(nxt)
        frontier.update(u for u in adj[nxt] if u not in visited)
    return _induced(g, np.array(sorted(visited), dtype=np.int64))


def attr_mask(g: Graph, ratio: float, rng: np.random.Generator) -> Graph:
    m = math.floor(ratio * g.node_count)
    if m == 0:
        return g
    x = g.node_features.copy()
    x[rng.choice(g.node_count, size=m, replace=False)] = 0.0
    return Graph(g.node_count, g.edges, x, g.label)


_DISPATCH = {
    "node_drop": node_drop,
    "edge_perturb": edge_perturb,
    "subgraph": subgraph,
    "attr_mask": attr_mask,
}


def augment(g: Graph, spec: AugmentationSpec, rng: Optional[np.random.Generator] = None) -> Graph:
    """Apply one augmentation to ``g``.

    ``random_choice`` draws one of the four strategies per call. The result
    always has at least one node; a strategy that would empty the graph
    returns ``g`` unchanged.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    spec = spec.concrete(rng)
    if spec.ratio == 0.0:
        return g
    out = _DISPATCH[spec.strategy](g, spec.ratio, rng)
    return out if out.node_count >= 1 else g
