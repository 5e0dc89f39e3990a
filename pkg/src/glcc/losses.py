"""Contrastive training objectives.

All losses take unit-norm feature rows (or row-stochastic assignments) as
torch tensors and return differentiable scalars.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F

from glcc.errors import DegenerateBatchError, ParameterError

LOG_EPS = 1e-12


@dataclass
class LossReport:
    igc: float = 0.0
    cgc: float = 0.0
    entropy: float = 0.0
    sup: float = 0.0
    total: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def positive_weights(L_rows) -> torch.Tensor:
    """Map Laplacian rows to positive-pair weights.

    Off-diagonal entries weigh ``-L_ij`` where ``L_ij < 0``. The diagonal
    weighs ``1 - L_ii`` (``A_ii / d_i`` under self-loops), so an instance
    and its own augmented view always pair when the affinity graph carries
    self-loops, and a zero Laplacian gives plain two-view InfoNCE.
    """
    L = torch.as_tensor(L_rows)
    W = torch.clamp(-L, min=0.0)
    diag = torch.clamp(1.0 - torch.diagonal(L), min=0.0)
    W = W.clone()
    W.diagonal().copy_(diag)
    return W


def igc_loss(H: torch.Tensor, Hp: torch.Tensor, L_rows, tau: float = 0.1, return_skipped: bool = False):
    """Laplacian-weighted instance-level contrastive loss.

    For anchor ``i`` the numerator sums ``w_ij * exp(h_i . h'_j / tau)``
    over positives (``w`` from :func:`positive_weights`) and the denominator
    adds ``exp(h_i . h'_j / tau)`` over the non-adjacent pairs
    (``L_ij == 0``, ``j != i``). Anchors without positives are skipped and the
    mean runs over the remaining anchors.
    """
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    if H.shape != Hp.shape:
        raise ParameterError(f"H {tuple(H.shape)} and H' {tuple(Hp.shape)} differ")
    L = torch.as_tensor(L_rows, dtype=H.dtype)
    B = H.shape[0]
    W = positive_weights(L)
    eye = torch.eye(B, dtype=torch.bool)
    pos = W > 0
    neg = (L == 0) & ~eye & ~pos
    active = pos.any(dim=1)
    skipped = int(B - active.sum())
    if not active.any():
        raise DegenerateBatchError("no anchor has a positive pair")
    logits = H @ Hp.T / tau
    ninf = torch.tensor(float("-inf"), dtype=H.dtype)
    log_w = torch.log(torch.where(pos, W, torch.ones_like(W)))
    log_num = torch.logsumexp(torch.where(pos, logits + log_w, ninf), dim=1)
    log_neg = torch.logsumexp(torch.where(neg, logits, ninf), dim=1)
    log_den = torch.logaddexp(log_num, log_neg)
    loss = -(log_num - log_den)[active].mean()
    return (loss, skipped) if return_skipped else loss


def marginal_entropy(Z: torch.Tensor) -> torch.Tensor:
    """Entropy of the mean cluster assignment; ``0 log 0`` counts as 0."""
    P = Z.mean(dim=0)
    return -(P * torch.log(torch.clamp(P, min=LOG_EPS))).sum()


def cgc_loss(Z: torch.Tensor, Zp: torch.Tensor, tau: float = 1.0) -> tuple[torch.Tensor, torch.Tensor]:
    """Cluster-level contrast between columns of ``Z`` and ``Zp``.

    Columns are L2-normalized, so ``z_i . z'_j`` is a cosine. Returns
    ``(contrast, entropy)``; the loss contribution is ``contrast - entropy``.
    """
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    K = Z.shape[1]
    if K < 2:
        raise ParameterError(f"cluster-level contrast needs K >= 2, got {K}")
    zn = F.normalize(Z, dim=0, eps=LOG_EPS)
    zpn = F.normalize(Zp, dim=0, eps=LOG_EPS)
    logits = zn.T @ zpn / tau
    contrast = F.cross_entropy(logits, torch.arange(K))
    return contrast, marginal_entropy(Z)


def combined_loss(igc, cgc_contrast, entropy):
    return igc + (cgc_contrast - entropy)


def supcon_loss(features: torch.Tensor, labels, tau: float = 0.1) -> torch.Tensor:
    """Supervised contrastive loss over labeled rows.

    Every other row with the same label is a positive. The loss is averaged
    over anchors that have at least one positive.
    """
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    n = features.shape[0]
    if n < 2:
        raise DegenerateBatchError("supervised contrast needs at least 2 rows")
    y = torch.as_tensor(np.asarray(labels)).reshape(-1)
    eye = torch.eye(n, dtype=torch.bool)
    logits = features @ features.T / tau
    logits = logits.masked_fill(eye, float("-inf"))
    log_prob = logits - torch.logsumexp(logits, dim=1, keepdim=True)
    pos = (y[:, None] == y[None, :]) & ~eye
    n_pos = pos.sum(dim=1)
    active = n_pos > 0
    if not active.any():
        raise DegenerateBatchError("no anchor has a positive")
    per_anchor = -torch.where(pos, log_prob, torch.zeros_like(log_prob)).sum(dim=1)
    return (per_anchor[active] / n_pos[active]).mean()


def entropy_upper_bound(K: int) -> float:
    return math.log(K)
