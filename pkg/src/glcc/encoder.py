"""GIN encoder with an instance head and a cluster head."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from glcc.errors import NumericalError, ParameterError, ShapeError
from glcc.graph import Graph


@dataclass
class EncoderConfig:
    feature_dim: int
    num_clusters: int
    num_layers: int = 3
    hidden_dim: int = 64
    instance_dim: int = 64
    readout: str = "sum"

    def __post_init__(self):
        if self.num_layers < 1:
            raise ParameterError("num_layers must be >= 1")
        if self.hidden_dim < 1 or self.instance_dim < 1 or self.feature_dim < 1:
            raise ParameterError("dimensions must be >= 1")
        if self.num_clusters < 1:
            raise ParameterError("num_clusters must be >= 1")
        if self.readout != "sum":
            raise ParameterError(f"unsupported readout {self.readout!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GraphBatch:
    """Disjoint union of graphs. Carries no labels by construction."""

    x: torch.Tensor
    edge_index: torch.Tensor  # (2, 2E), both directions
    batch: torch.Tensor  # graph id per node
    num_graphs: int


def collate(graphs: Sequence[Graph], feature_dim: int | None = None, dtype=torch.float32) -> GraphBatch:
    xs, srcs, dsts, owner = [], [], [], []
    offset = 0
    for i, g in enumerate(graphs):
        if feature_dim is not None and g.feature_dim != feature_dim:
            raise ShapeError(
                f"graph {i} has feature dimension {g.feature_dim}, encoder expects {feature_dim}"
            )
        xs.append(g.node_features)
        if g.num_edges:
            srcs.append(g.edges[:, 0] + offset)
            dsts.append(g.edges[:, 1] + offset)
        owner.append(np.full(g.node_count, i, dtype=np.int64))
        offset += g.node_count
    x = torch.from_numpy(np.concatenate(xs).astype(np.float64)).to(dtype)
    if srcs:
        s = np.concatenate(srcs)
        d = np.concatenate(dsts)
        ei = torch.from_numpy(np.stack([np.concatenate([s, d]), np.concatenate([d, s])]))
    else:
        ei = torch.zeros((2, 0), dtype=torch.int64)
    return GraphBatch(x, ei, torch.from_numpy(np.concatenate(owner)), len(graphs))


@dataclass
class EmbeddingSet:
    h: torch.Tensor  # graph embeddings
    instance_features: torch.Tensor  # unit-norm rows
    assignments: torch.Tensor  # row-stochastic, N x K

    def numpy(self) -> dict[str, np.ndarray]:
        return {k: v.detach().cpu().numpy() for k, v in vars(self).items()}


def _mlp(d_in: int, d_hidden: int, d_out: int) -> nn.Sequential:
    return nn.Sequential(nn.Linear(d_in, d_hidden), nn.LayerNorm(d_hidden), nn.ReLU(), nn.Linear(d_hidden, d_out))


class GINLayer(nn.Module):
    """``h_v <- ReLU(MLP(h_v + sum_{u in N(v)} h_u))``; epsilon is fixed at 0."""

    def __init__(self, d_in: int, d_out: int):
        super().__init__()
        self.mlp = _mlp(d_in, d_out, d_out)

    def forward(self, x: torch.Tensor, edge_index: torch.Tensor) -> torch.Tensor:
        agg = x.clone()
        if edge_index.shape[1]:
            agg = agg.index_add(0, edge_index[1], x[edge_index[0]])
        return F.relu(self.mlp(agg))


class GLCCEncoder(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        dims = [cfg.feature_dim] + [cfg.hidden_dim] * cfg.num_layers
        self.layers = nn.ModuleList(GINLayer(a, b) for a, b in zip(dims[:-1], dims[1:]))
        self.project = nn.Linear(cfg.hidden_dim * cfg.num_layers, cfg.hidden_dim)
        self.instance_head = _mlp(cfg.hidden_dim, cfg.hidden_dim, cfg.instance_dim)
        self.cluster_head = _mlp(cfg.hidden_dim, cfg.hidden_dim, cfg.num_clusters)

    def embed(self, gb: GraphBatch) -> torch.Tensor:
        x = gb.x
        pooled = []
        for layer in self.layers:
            x = layer(x, gb.edge_index)
            pooled.append(x.new_zeros((gb.num_graphs, x.shape[1])).index_add(0, gb.batch, x))
        return self.project(torch.cat(pooled, dim=1))

    def forward(self, gb: GraphBatch) -> EmbeddingSet:
        h = self.embed(gb)
        inst = F.normalize(self.instance_head(h), dim=1, eps=1e-12)
        assign = torch.softmax(self.cluster_head(h), dim=1)
        return EmbeddingSet(h, inst, assign)

    @property
    def dtype(self) -> torch.dtype:
        return self.project.weight.dtype


def build_encoder(cfg: EncoderConfig, seed: int = 0, dtype=torch.float32) -> GLCCEncoder:
    """Create an encoder with fan-in scaled uniform initialization from ``seed``."""
    gen = torch.Generator().manual_seed(int(seed))
    model = GLCCEncoder(cfg)
    with torch.no_grad():
        for mod in model.modules():
            if isinstance(mod, nn.Linear):
                bound = 1.0 / np.sqrt(mod.in_features)
                mod.weight.copy_(torch.rand(mod.weight.shape, generator=gen) * 2 * bound - bound)
                mod.bias.copy_(torch.rand(mod.bias.shape, generator=gen) * 2 * bound - bound)
    return model.to(dtype)


def encode(graphs: Sequence[Graph], model: GLCCEncoder) -> EmbeddingSet:
    """Forward ``graphs`` through ``model`` as one batch."""
    return model(collate(graphs, model.cfg.feature_dim, model.dtype))


@torch.no_grad()
def encode_all(graphs: Sequence[Graph], model: GLCCEncoder, batch_size: int = 256) -> dict[str, np.ndarray]:
    """Evaluation-mode forward pass over a full dataset, returned as numpy."""
    parts = [encode(graphs[i : i + batch_size], model).numpy() for i in range(0, len(graphs), batch_size)]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def check_finite(name: str, value: torch.Tensor) -> torch.Tensor:
    if not torch.isfinite(value).all():
        raise NumericalError(name)
    return value


def gradients(loss_fn: Callable[[], torch.Tensor], params: Iterable[torch.Tensor]) -> list[torch.Tensor]:
    """Reverse-mode gradients of the scalar ``loss_fn()`` w.r.t. ``params``.

    Parameters the loss does not depend on get zero gradients.
    """
    params = list(params)
    loss = check_finite("loss", loss_fn())
    if not loss.requires_grad:
        return [torch.zeros_like(p) for p in params]
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]
