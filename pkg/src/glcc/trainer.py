"""Alternating GLCC training: contrastive step, pseudo-label step, affinity refresh."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import torch

from glcc.affinity import AffinityGraph, build_affinity, laplacian, sample_neighbor
from glcc.augment import AugmentationSpec, augment
from glcc.encoder import EncoderConfig, GLCCEncoder, build_encoder, check_finite, collate, encode_all
from glcc.errors import (
    CheckpointError,
    DegenerateBatchError,
    EvaluationError,
    GLCCError,
    NumericalError,
    ParameterError,
)
from glcc.graph import GraphDataset
from glcc.losses import cgc_loss, igc_loss, supcon_loss
from glcc.metrics import MetricsReport, evaluate_labels, kmeans
from glcc.pseudo import PseudoLabelSet, select_confident

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
HISTORY_FIELDS = ("epoch", "step", "igc", "cgc", "entropy", "sup", "total")

# (use_igc, use_cgc, use_affinity, use_pseudo)
VARIANTS = {
    "M1": (True, False, False, False),
    "M2": (False, True, False, False),
    "M3": (True, True, False, False),
    "M4": (True, True, True, False),
    "M5": (True, True, True, True),
}

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass
class TrainConfig:
    num_clusters: int = 2
    epochs: int = 100
    batch_size: int = 64
    k_neighbors: int = 5
    tau_inst: float = 0.1
    tau_clu: float = 1.0
    r: float = 0.1
    aug_strategy: str = "random_choice"
    aug_ratio: float = 0.1
    learning_rate: float = 1e-3
    warmup_epochs: int = 20
    use_igc: bool = True
    use_cgc: bool = True
    use_affinity: bool = True
    use_pseudo: bool = True
    seed: int = 0
    num_layers: int = 3
    hidden_dim: int = 64
    instance_dim: int = 64
    dtype: str = "float32"

    def __post_init__(self):
        if self.num_clusters < 2:
            raise ParameterError("num_clusters must be >= 2")
        if self.epochs < 0 or self.batch_size < 1 or self.warmup_epochs < 0:
            raise ParameterError("epochs, batch_size and warmup_epochs must be non-negative")
        if self.k_neighbors < 1:
            raise ParameterError("k_neighbors must be >= 1")
        if self.tau_inst <= 0 or self.tau_clu <= 0:
            raise ParameterError("temperatures must be positive")
        if not 0 < self.r <= 1:
            raise ParameterError("r must lie in (0, 1]")
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be positive")
        if self.dtype not in _DTYPES:
            raise ParameterError(f"dtype must be one of {sorted(_DTYPES)}")
        if not (self.use_igc or self.use_cgc):
            raise ParameterError("at least one of use_igc, use_cgc must be enabled")
        self.augmentation  # validates strategy and ratio

    @property
    def augmentation(self) -> AugmentationSpec:
        return AugmentationSpec(self.aug_strategy, self.aug_ratio)

    @property
    def variant(self) -> Optional[str]:
        flags = (self.use_igc, self.use_cgc, self.use_affinity, self.use_pseudo)
        return next((k for k, v in VARIANTS.items() if v == flags), None)

    def with_variant(self, name: str) -> "TrainConfig":
        try:
            igc, cgc, aff, pl = VARIANTS[name]
        except KeyError:
            raise ParameterError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}") from None
        return replace(self, use_igc=igc, use_cgc=cgc, use_affinity=aff, use_pseudo=pl)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d or {})
        variant = d.pop("variant", None)
        if "K" in d:
            d["num_clusters"] = d.pop("K")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ParameterError(f"unknown config keys: {unknown}")
        cfg = cls(**d)
        return cfg.with_variant(variant) if variant else cfg


@dataclass(eq=False)
class TrainState:
    cfg: TrainConfig
    model: GLCCEncoder
    optimizer: torch.optim.Optimizer
    rng: np.random.Generator
    affinity: Optional[AffinityGraph] = None
    epoch: int = 0
    history: list = field(default_factory=list)
    affinity_builds: int = 0

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HISTORY_FIELDS)
        for row in self.history:
            w.writerow([row[k] if isinstance(row[k], int) else repr(float(row[k])) for k in HISTORY_FIELDS])
        return buf.getvalue()

    def epoch_entropy(self) -> np.ndarray:
        """Mean batch entropy ``H(Z)`` of the contrastive step, per epoch."""
        out = np.full(self.epoch, np.nan)
        for e in range(self.epoch):
            vals = [r["entropy"] for r in self.history if r["epoch"] == e and r["phase"] == "gc"]
            if vals:
                out[e] = float(np.mean(vals))
        return out


class TrainingAborted(GLCCError):
    """Training hit a non-finite loss; ``checkpoint`` is the last file written, if any."""

    def __init__(self, message: str, state: TrainState, checkpoint: Optional[Path] = None):
        super().__init__(message)
        self.state = state
        self.checkpoint = checkpoint


def init_state(ds: GraphDataset, cfg: TrainConfig) -> TrainState:
    if len(ds) == 0:
        raise ParameterError("dataset is empty")
    enc_cfg = EncoderConfig(
        feature_dim=ds.feature_dim,
        num_clusters=cfg.num_clusters,
        num_layers=cfg.num_layers,
        hidden_dim=cfg.hidden_dim,
        instance_dim=cfg.instance_dim,
    )
    model = build_encoder(enc_cfg, seed=cfg.seed, dtype=_DTYPES[cfg.dtype])
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    state = TrainState(cfg, model, opt, rng)
    if cfg.use_affinity:
        _check_k(cfg, len(ds))
        state.affinity = refresh_affinity(state, ds)
        state.affinity_builds = 0
    return state


def _check_k(cfg: TrainConfig, n: int) -> None:
    if cfg.k_neighbors >= n:
        raise ParameterError(f"k_neighbors={cfg.k_neighbors} must be smaller than the dataset size {n}")


def instance_features(model: GLCCEncoder, ds: GraphDataset) -> np.ndarray:
    h = encode_all(ds.graphs, model)["instance_features"].astype(np.float64)
    return h / np.linalg.norm(h, axis=1, keepdims=True)


def refresh_affinity(state: TrainState, ds: GraphDataset) -> AffinityGraph:
    cfg = state.cfg
    ag = build_affinity(instance_features(state.model, ds), cfg.k_neighbors, cfg.tau_inst, epoch=state.epoch)
    state.affinity_builds += 1
    return ag


def _step(state: TrainState, loss: torch.Tensor) -> None:
    state.optimizer.zero_grad()
    loss.backward()
    state.optimizer.step()


def contrastive_step(state: TrainState, ds: GraphDataset, idx: np.ndarray, L: Optional[sp.csr_matrix]) -> dict:
    """One mini-batch of the instance/cluster contrastive objective."""
    cfg, rng, model = state.cfg, state.rng, state.model
    spec = cfg.augmentation.concrete(rng)
    B = len(idx)
    graphs = [ds.graphs[i] for i in idx]
    views = [augment(g, spec, rng) for g in graphs]
    batch = graphs + views
    use_nbrs = cfg.use_cgc and cfg.use_affinity
    if use_nbrs:
        nbrs = [sample_neighbor(state.affinity, int(i), rng) for i in idx]
        batch += [augment(ds.graphs[j], spec, rng) for j in nbrs]
    emb = model(collate(batch, model.cfg.feature_dim, model.dtype))
    inst, Z = emb.instance_features, emb.assignments

    row = {"igc": 0.0, "cgc": 0.0, "entropy": 0.0, "sup": 0.0}
    total = inst.new_zeros(())
    if cfg.use_igc:
        if cfg.use_affinity:
            L_rows = torch.from_numpy(L[idx][:, idx].toarray()).to(inst.dtype)
        else:
            L_rows = inst.new_zeros((B, B))
        igc = check_finite("igc", igc_loss(inst[:B], inst[B : 2 * B], L_rows, cfg.tau_inst))
        total = total + igc
        row["igc"] = igc.item()
    if cfg.use_cgc:
        Zp = Z[2 * B :] if use_nbrs else Z[B : 2 * B]
        contrast, ent = cgc_loss(Z[:B], Zp, cfg.tau_clu)
        check_finite("cgc", contrast)
        check_finite("entropy", ent)
        total = total + contrast - ent
        row["cgc"], row["entropy"] = contrast.item(), ent.item()
    check_finite("total", total)
    _step(state, total)
    row["total"] = total.item()
    return row


def pseudo_label_step(state: TrainState, ds: GraphDataset, pls: PseudoLabelSet) -> list[dict]:
    """One pass of supervised contrast over the confident subset."""
    cfg, rng, model = state.cfg, state.rng, state.model
    order = pls.indices[rng.permutation(len(pls))]
    label_of = dict(zip(pls.indices.tolist(), pls.labels.tolist()))
    rows = []
    for idx in np.array_split(order, math.ceil(len(order) / cfg.batch_size)):
        spec = cfg.augmentation.concrete(rng)
        graphs = [ds.graphs[i] for i in idx]
        views = [augment(g, spec, rng) for g in graphs]
        y = np.array([label_of[int(i)] for i in idx] * 2)
        emb = model(collate(graphs + views, model.cfg.feature_dim, model.dtype))
        sup = check_finite("sup", supcon_loss(emb.instance_features, y, cfg.tau_inst))
        _step(state, sup)
        rows.append({"igc": 0.0, "cgc": 0.0, "entropy": 0.0, "sup": sup.item(), "total": sup.item()})
    return rows


def run_epoch(state: TrainState, ds: GraphDataset) -> None:
    cfg, rng = state.cfg, state.rng
    e = state.epoch
    n = len(ds)
    L = laplacian(state.affinity) if cfg.use_affinity else None
    step = 0
    for idx in np.array_split(rng.permutation(n), math.ceil(n / cfg.batch_size)):
        try:
            row = contrastive_step(state, ds, idx, L)
        except DegenerateBatchError as exc:
            logger.warning("epoch %d step %d skipped: %s", e, step, exc)
            step += 1
            continue
        state.history.append({"epoch": e, "step": step, "phase": "gc", **row})
        step += 1

    if cfg.use_pseudo and e >= cfg.warmup_epochs:
        Z = encode_all(ds.graphs, state.model)["assignments"]
        pls = select_confident(Z, state.affinity if cfg.use_affinity else None, cfg.r)
        if pls:
            for row in pseudo_label_step(state, ds, pls):
                state.history.append({"epoch": e, "step": step, "phase": "sup", **row})
                step += 1
        else:
            logger.info("epoch %d: no confident samples, step 2 skipped", e)

    state.epoch += 1
    if cfg.use_affinity:
        state.affinity = refresh_affinity(state, ds)


def train(
    ds: GraphDataset,
    cfg: TrainConfig,
    state: Optional[TrainState] = None,
    checkpoint_path=None,
    until_epoch: Optional[int] = None,
    on_epoch: Optional[Callable[[TrainState], None]] = None,
) -> tuple[TrainState, np.ndarray]:
    """Train on ``ds`` and return the final state and cluster assignments.

    ``state`` resumes a restored run. ``until_epoch`` stops early (the run
    can be resumed later). When ``checkpoint_path`` is given a checkpoint is
    written after every epoch.
    """
    if state is None:
        state = init_state(ds, cfg)
    elif cfg.use_affinity:
        _check_k(cfg, len(ds))
    stop = cfg.epochs if until_epoch is None else min(until_epoch, cfg.epochs)
    written = None
    while state.epoch < stop:
        try:
            run_epoch(state, ds)
        except NumericalError as exc:
            raise TrainingAborted(f"epoch {state.epoch}: {exc}", state, written) from exc
        if checkpoint_path is not None:
            written = checkpoint(state, checkpoint_path)
        if on_epoch is not None:
            on_epoch(state)
    return state, predict(state, ds)


def predict(state: TrainState, ds: GraphDataset) -> np.ndarray:
    """Cluster of every graph from un-augmented inputs.

    With the cluster head disabled the graph embeddings are clustered by
    k-means instead.
    """
    out = encode_all(ds.graphs, state.model)
    if state.cfg.use_cgc:
        return np.argmax(out["assignments"], axis=1).astype(np.int64)
    return kmeans(out["h"], state.cfg.num_clusters, seed=state.cfg.seed)


def evaluate(state: TrainState, ds: GraphDataset, assignments: Optional[np.ndarray] = None) -> MetricsReport:
    if not ds.has_labels:
        raise EvaluationError(f"dataset {ds.name!r} has no labels to evaluate against")
    pred = predict(state, ds) if assignments is None else assignments
    return evaluate_labels(pred, ds.labels())


# ---------------------------------------------------------------- checkpoints


def _affinity_payload(ag: Optional[AffinityGraph]):
    if ag is None:
        return None
    return {
        "indptr": torch.from_numpy(ag.A.indptr.astype(np.int64)),
        "indices": torch.from_numpy(ag.A.indices.astype(np.int64)),
        "data": torch.from_numpy(ag.A.data.astype(np.float64)),
        "n": ag.n,
        "k": ag.k,
        "tau": ag.tau,
        "epoch_built": ag.epoch_built,
    }


def checkpoint(state: TrainState, path) -> Path:
    """Write a self-describing checkpoint (config, parameters, optimizer, rng, affinity)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": "glcc-checkpoint",
        "version": CHECKPOINT_VERSION,
        "config": json.dumps(state.cfg.to_dict()),
        "encoder_config": json.dumps(state.model.cfg.to_dict()),
        "params": state.model.state_dict(),
        "optimizer": state.optimizer.state_dict(),
        "rng_state": json.dumps(state.rng.bit_generator.state),
        "epoch": state.epoch,
        "affinity_builds": state.affinity_builds,
        "history": json.dumps(state.history),
        "affinity": _affinity_payload(state.affinity),
    }
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)
    return path


def restore(path) -> TrainState:
    try:
        payload = torch.load(path, weights_only=True)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint ({type(exc).__name__}: {exc})") from None
    if not isinstance(payload, dict) or payload.get("format") != "glcc-checkpoint":
        raise CheckpointError(f"{path}: not a checkpoint file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: checkpoint version {payload.get('version')} unsupported")
    try:
        cfg = TrainConfig.from_dict(json.loads(payload["config"]))
        enc_cfg = EncoderConfig(**json.loads(payload["encoder_config"]))
        model = GLCCEncoder(enc_cfg).to(_DTYPES[cfg.dtype])
        model.load_state_dict(payload["params"])
        opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
        opt.load_state_dict(payload["optimizer"])
        rng = np.random.default_rng()
        rng.bit_generator.state = json.loads(payload["rng_state"])
        aff = payload["affinity"]
        ag = None
        if aff is not None:
            A = sp.csr_matrix(
                (aff["data"].numpy(), aff["indices"].numpy(), aff["indptr"].numpy()),
                shape=(aff["n"], aff["n"]),
            )
            ag = AffinityGraph(A, aff["k"], aff["tau"], np.asarray(A.sum(axis=1)).ravel(), aff["epoch_built"])
        return TrainState(
            cfg,
            model,
            opt,
            rng,
            ag,
            int(payload["epoch"]),
            json.loads(payload["history"]),
            int(payload["affinity_builds"]),
        )
    except (KeyError, TypeError, ValueError, RuntimeError) as exc:
        raise CheckpointError(f"{path}: inconsistent checkpoint ({exc})") from None
