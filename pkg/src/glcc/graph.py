"""Graph data model, TU-format ingestion and synthetic graph mixtures."""

from __future__ import annotations

import hashlib
import logging
import os
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from glcc.errors import DataFormatError, DataIntegrityError, ParameterError

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1


def canonical_edges(edges, node_count: Optional[int] = None) -> np.ndarray:
    """Return undirected edges as a sorted, duplicate-free ``(E, 2)`` int64 array.

    Each pair is ordered ``(min, max)``. Self-loops are dropped.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    e = np.sort(e, axis=1)
    e = e[e[:, 0] != e[:, 1]]
    if e.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(e, axis=0)


@dataclass(frozen=True, eq=False)
class Graph:
    """An attributed undirected graph.

    Attributes:
        node_count: number of nodes.
        edges: ``(E, 2)`` int array of undirected 0-based node pairs.
        node_features: ``(node_count, d)`` float array.
        label: optional ground-truth class id.
    """

    node_count: int
    edges: np.ndarray
    node_features: np.ndarray
    label: Optional[int] = None

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.node_features.shape[1])

    def adjacency_lists(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(int(v))
            adj[v].append(int(u))
        return adj

    def same_as(self, other: "Graph") -> bool:
        return (
            self.node_count == other.node_count
            and self.label == other.label
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.node_features, other.node_features)
        )


def make_graph(node_count, edges, node_features, label=None) -> Graph:
    """Build a :class:`Graph`, canonicalizing edges and coercing arrays."""
    feats = np.asarray(node_features, dtype=np.float64)
    if feats.ndim == 1:
        feats = feats.reshape(-1, 1)
    e = canonical_edges(edges)
    return Graph(int(node_count), e, feats, None if label is None else int(label))


@dataclass(eq=False)
class GraphDataset:
    graphs: list[Graph]
    num_classes: int
    name: str = "dataset"

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]

    def __iter__(self):
        return iter(self.graphs)

    @property
    def feature_dim(self) -> int:
        return self.graphs[0].feature_dim

    @property
    def has_labels(self) -> bool:
        return len(self.graphs) > 0 and all(g.label is not None for g in self.graphs)

    def labels(self) -> np.ndarray:
        if not self.has_labels:
            raise DataFormatError(f"dataset {self.name!r} has no graph labels")
        return np.array([g.label for g in self.graphs], dtype=np.int64)

    def fingerprint(self) -> str:
        """SHA-256 content hash over structure, features and labels."""
        h = hashlib.sha256()
        h.update(self.name.encode())
        h.update(np.int64(self.num_classes).tobytes())
        for g in self.graphs:
            h.update(np.int64(g.node_count).tobytes())
            h.update(np.ascontiguousarray(g.edges, dtype=np.int64).tobytes())
            h.update(np.ascontiguousarray(g.node_features, dtype=np.float64).tobytes())
            h.update(np.int64(-1 if g.label is None else g.label).tobytes())
        return h.hexdigest()

    def stats(self) -> dict:
        nodes = np.array([g.node_count for g in self.graphs], dtype=float)
        edges = np.array([g.num_edges for g in self.graphs], dtype=float)
        return {
            "name": self.name,
            "graphs": len(self.graphs),
            "classes": self.num_classes,
            "mean_nodes": float(nodes.mean()) if len(nodes) else 0.0,
            "mean_edges": float(edges.mean()) if len(edges) else 0.0,
        }


def validate_dataset(ds: GraphDataset) -> list[str]:
    """Check every Graph and GraphDataset invariant; never raises.

    Returns a list of human-readable violations, each naming the graph index
    and the rule it breaks. An empty list means the dataset is valid.
    """
    out: list[str] = []
    dims = set()
    for i, g in enumerate(ds.graphs):
        n = g.node_count
        if n < 1:
            out.append(f"graph {i}: node_count must be positive, got {n}")
        e = np.asarray(g.edges)
        if e.size:
            if e.ndim != 2 or e.shape[1] != 2:
                out.append(f"graph {i}: edges must have shape (E, 2)")
                continue
            if e.min() < 0 or e.max() >= n:
                out.append(f"graph {i}: edge endpoint outside [0, {n})")
            if np.any(e[:, 0] == e[:, 1]):
                out.append(f"graph {i}: self-loop present")
            c = np.sort(e, axis=1)
            if len(np.unique(c, axis=0)) != len(c):
                out.append(f"graph {i}: duplicate undirected edge")
        x = np.asarray(g.node_features)
        if x.ndim != 2 or x.shape[0] != n:
            out.append(f"graph {i}: node_features must have {n} rows")
        elif x.shape[1] < 1:
            out.append(f"graph {i}: feature dimension must be >= 1")
        else:
            dims.add(x.shape[1])
        if g.label is not None and not 0 <= g.label < ds.num_classes:
            out.append(f"graph {i}: label {g.label} outside [0, {ds.num_classes})")
    if len(dims) > 1:
        out.append(f"dataset: mismatched feature dimensions {sorted(dims)}")
    if ds.num_classes < 1:
        out.append(f"dataset: num_classes must be positive, got {ds.num_classes}")
    return out


# ---------------------------------------------------------------- TU format


def _read_int_lines(path: Path) -> list[list[int]]:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([int(float(t)) for t in line.replace(",", " ").split()])
    return rows


def _read_float_lines(path: Path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(t) for t in line.replace(",", " ").split()])
    return np.asarray(rows, dtype=np.float64)


def load_tu_dataset(directory, name: Optional[str] = None) -> GraphDataset:
    """Load a dataset stored in the TU flat-file layout.

    Expects ``{name}_A.txt``, ``{name}_graph_indicator.txt`` and
    ``{name}_graph_labels.txt`` in ``directory``; node labels or node
    attributes are picked up when present. Without either, each node gets
    its degree divided by the maximum degree of the dataset as a single
    feature.
    """
    directory = Path(directory)
    name = name or directory.name
    paths = {k: directory / f"{name}_{k}.txt" for k in ("A", "graph_indicator", "graph_labels")}
    for p in paths.values():
        if not p.is_file():
            raise DataFormatError(f"missing mandatory file {p.name} in {directory}")

    indicator = np.array([r[0] for r in _read_int_lines(paths["graph_indicator"])], dtype=np.int64)
    graph_labels = np.array([r[0] for r in _read_int_lines(paths["graph_labels"])], dtype=np.int64)
    num_graphs = len(graph_labels)
    if indicator.size == 0:
        raise DataFormatError(f"{paths['graph_indicator'].name} is empty")
    if indicator.min() < 1 or indicator.max() > num_graphs:
        raise DataIntegrityError(
            f"{paths['graph_indicator'].name}: graph ids must lie in [1, {num_graphs}]"
        )

    # nodes are numbered consecutively across graphs
    gid = indicator - 1
    counts = np.bincount(gid, minlength=num_graphs)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    if np.any(np.diff(gid) < 0):
        raise DataIntegrityError(f"{paths['graph_indicator'].name}: graph ids must be non-decreasing")

    per_graph_edges: list[list[tuple[int, int]]] = [[] for _ in range(num_graphs)]
    self_loops = 0
    with open(paths["A"]) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                a, b = (int(t) for t in line.replace(",", " ").split())
            except ValueError:
                raise DataFormatError(f"{paths['A'].name}:{lineno}: expected two node ids") from None
            a -= 1
            b -= 1
            if not (0 <= a < len(gid) and 0 <= b < len(gid)) or gid[a] != gid[b]:
                raise DataIntegrityError(
                    f"{paths['A'].name}:{lineno}: edge ({a + 1}, {b + 1}) leaves its graph"
                )
            if a == b:
                self_loops += 1
                continue
            g = gid[a]
            per_graph_edges[g].append((a - starts[g], b - starts[g]))
    if self_loops:
        logger.warning("%s: dropped %d self-loops", name, self_loops)

    node_labels_path = directory / f"{name}_node_labels.txt"
    node_attr_path = directory / f"{name}_node_attributes.txt"
    if node_attr_path.is_file():
        feats = _read_float_lines(node_attr_path)
    elif node_labels_path.is_file():
        raw = np.array([r[0] for r in _read_int_lines(node_labels_path)], dtype=np.int64)
        values, codes = np.unique(raw, return_inverse=True)
        feats = np.eye(len(values))[codes]
    else:
        feats = None
    if feats is not None and len(feats) != len(gid):
        raise DataIntegrityError(
            f"node feature file has {len(feats)} rows for {len(gid)} nodes"
        )

    classes, remapped = np.unique(graph_labels, return_inverse=True)
    edges_c = [canonical_edges(e) for e in per_graph_edges]
    if feats is None:
        degrees = []
        for g in range(num_graphs):
            deg = np.zeros(counts[g])
            if len(edges_c[g]):
                np.add.at(deg, edges_c[g].ravel(), 1.0)
            degrees.append(deg)
        max_deg = max((d.max() for d in degrees if d.size), default=0.0) or 1.0
    graphs = []
    for g in range(num_graphs):
        if feats is None:
            x = (degrees[g] / max_deg).reshape(-1, 1)
        else:
            x = feats[starts[g] : starts[g] + counts[g]]
        graphs.append(Graph(int(counts[g]), edges_c[g], x, int(remapped[g])))
    return GraphDataset(graphs, num_classes=len(classes), name=name)


def write_tu_dataset(ds: GraphDataset, directory, name: Optional[str] = None) -> Path:
    """Write ``ds`` in the TU flat-file layout (node features as attributes)."""
    directory = Path(directory)
    name = name or ds.name
    directory.mkdir(parents=True, exist_ok=True)
    offset = 0
    with open(directory / f"{name}_A.txt", "w") as fa, open(
        directory / f"{name}_graph_indicator.txt", "w"
    ) as fi, open(directory / f"{name}_node_attributes.txt", "w") as fx:
        for gi, g in enumerate(ds.graphs):
            for u, v in g.edges:
                fa.write(f"{u + offset + 1}, {v + offset + 1}\n")
                fa.write(f"{v + offset + 1}, {u + offset + 1}\n")
            for row in g.node_features:
                fi.write(f"{gi + 1}\n")
                fx.write(", ".join(repr(float(t)) for t in row) + "\n")
            offset += g.node_count
    with open(directory / f"{name}_graph_labels.txt", "w") as fl:
        for g in ds.graphs:
            fl.write(f"{0 if g.label is None else g.label}\n")
    return directory


# ---------------------------------------------------------------- synthetic


@dataclass
class FamilySpec:
    """One family of random graphs in a synthetic mixture.

    Graphs are Erdős–Rényi with edge probability ``density`` on a node count
    drawn uniformly from ``nodes``; node features are Gaussian around
    ``feature_mean`` with standard deviation ``feature_std``.
    """

    count: int
    nodes: tuple[int, int]
    density: float
    feature_mean: Sequence[float]
    feature_std: float = 1.0

    def __post_init__(self):
        self.nodes = tuple(int(v) for v in self.nodes)
        self.feature_mean = [float(v) for v in self.feature_mean]
        if not 0.0 < self.density <= 1.0:
            raise ParameterError(f"density must lie in (0, 1], got {self.density}")
        if self.count < 1:
            raise ParameterError(f"count must be positive, got {self.count}")
        lo, hi = self.nodes
        if lo < 1 or hi < lo:
            raise ParameterError(f"invalid node-count range {self.nodes}")
        if len(self.feature_mean) < 1:
            raise ParameterError("feature_mean must have at least one entry")
        if self.feature_std < 0:
            raise ParameterError("feature_std must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "FamilySpec":
        try:
            return cls(
                count=int(d["count"]),
                nodes=tuple(d["nodes"]),
                density=float(d["density"]),
                feature_mean=list(d["feature_mean"]),
                feature_std=float(d.get("feature_std", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"bad family spec {d!r}: {exc}") from None


def generate_synthetic_mixture(families: Sequence[FamilySpec], seed: int = 0, name="synthetic") -> GraphDataset:
    """Sample a labeled mixture of random graph families.

    Every graph is labeled with the index of the family it came from.
    Identical ``families`` and ``seed`` always give identical datasets.
    """
    if not families:
        raise ParameterError("at least one family is required")
    families = [f if isinstance(f, FamilySpec) else FamilySpec.from_dict(f) for f in families]
    dims = {len(f.feature_mean) for f in families}
    if len(dims) != 1:
        raise ParameterError(f"families disagree on feature dimension: {sorted(dims)}")
    rng = np.random.default_rng(seed)
    graphs = []
    for label, fam in enumerate(families):
        mean = np.asarray(fam.feature_mean)
        for _ in range(fam.count):
            n = int(rng.integers(fam.nodes[0], fam.nodes[1] + 1))
            iu, ju = np.triu_indices(n, k=1)
            keep = rng.random(len(iu)) < fam.density
            edges = np.stack([iu[keep], ju[keep]], axis=1).astype(np.int64)
            x = mean + fam.feature_std * rng.standard_normal((n, len(mean)))
            graphs.append(Graph(n, edges, x, label))
    return GraphDataset(graphs, num_classes=len(families), name=name)


def mixture_from_config(cfg: dict) -> GraphDataset:
    """Build a mixture from a parsed key/value document.

    Recognised keys: ``families`` (list of family mappings), ``seed`` and
    ``name``.
    """
    if not isinstance(cfg, dict) or not cfg.get("families"):
        raise ParameterError("synthetic spec needs a non-empty 'families' list")
    fams = [FamilySpec.from_dict(f) for f in cfg["families"]]
    return generate_synthetic_mixture(fams, seed=int(cfg.get("seed", 0)), name=str(cfg.get("name", "synthetic")))


def three_family_mixture(count: int = 100, seed: int = 0, feature_std: float = 1.5) -> GraphDataset:
    """The 3-family benchmark: densities 0.1/0.3/0.6, orthogonal feature means."""
    fams = [
        FamilySpec(count, (12, 30), dens, mean, feature_std)
        for dens, mean in zip((0.1, 0.3, 0.6), np.eye(3).tolist())
    ]
    return generate_synthetic_mixture(fams, seed=seed, name="mixture3")


# ---------------------------------------------------------------- snapshots


def save_snapshot(ds: GraphDataset, path) -> Path:
    """Write ``ds`` to a single ``.npz`` file.

    The output is byte-identical for identical datasets.
    """
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    node_counts = np.array([g.node_count for g in ds.graphs], dtype=np.int64)
    edge_counts = np.array([g.num_edges for g in ds.graphs], dtype=np.int64)
    edges = (
        np.concatenate([g.edges for g in ds.graphs]).astype(np.int64)
        if ds.graphs
        else np.zeros((0, 2), np.int64)
    )
    feats = np.concatenate([g.node_features for g in ds.graphs]).astype(np.float64)
    labels = np.array([-1 if g.label is None else g.label for g in ds.graphs], dtype=np.int64)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format=np.array("glcc-dataset"),
            version=np.int64(SNAPSHOT_VERSION),
            name=np.array(ds.name),
            num_classes=np.int64(ds.num_classes),
            node_counts=node_counts,
            edge_counts=edge_counts,
            edges=edges.reshape(-1, 2),
            features=feats,
            labels=labels,
        )
    return path


def load_snapshot(path) -> GraphDataset:
    try:
        with np.load(path, allow_pickle=False) as z:
            if str(z["format"]) != "glcc-dataset":
                raise DataFormatError(f"{path}: not a dataset snapshot")
            if int(z["version"]) != SNAPSHOT_VERSION:
                raise DataFormatError(f"{path}: unsupported snapshot version {int(z['version'])}")
            node_counts = z["node_counts"]
            edge_counts = z["edge_counts"]
            edges, feats, labels = z["edges"], z["features"], z["labels"]
            name, k = str(z["name"]), int(z["num_classes"])
    except (OSError, KeyError, ValueError, EOFError, zipfile.BadZipFile) as exc:
        raise DataFormatError(f"{path}: unreadable snapshot ({exc})") from None
    n_off = np.concatenate([[0], np.cumsum(node_counts)])
    e_off = np.concatenate([[0], np.cumsum(edge_counts)])
    graphs = []
    for i in range(len(node_counts)):
        lab = int(labels[i])
        graphs.append(
            Graph(
                int(node_counts[i]),
                edges[e_off[i] : e_off[i + 1]].copy(),
                feats[n_off[i] : n_off[i + 1]].copy(),
                None if lab < 0 else lab,
            )
        )
    return GraphDataset(graphs, num_classes=k, name=name)


def load_dataset(path, name: Optional[str] = None) -> GraphDataset:
    """Load a snapshot file or a TU-format directory."""
    path = Path(path)
    if path.is_dir():
        return load_tu_dataset(path, name)
    if path.is_file():
        return load_snapshot(path)
    raise DataFormatError(f"no dataset at {os.fspath(path)}")
