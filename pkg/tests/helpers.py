"""Test-side oracles shared by the unit and acceptance suites."""

import itertools
import math

import numpy as np
import torch

from glcc.augment import AugmentationSpec, augment
from glcc.encoder import EncoderConfig, build_encoder, collate
from glcc.graph import make_graph


def central_differences(loss_fn, params, h=1e-5):
    """Central finite differences of ``loss_fn()`` w.r.t. every entry of ``params``."""
    out = []
    with torch.no_grad():
        for p in params:
            g = torch.zeros_like(p)
            flat = p.view(-1)
            for i in range(flat.numel()):
                old = flat[i].item()
                flat[i] = old + h
                up = loss_fn().item()
                flat[i] = old - h
                down = loss_fn().item()
                flat[i] = old
                g.view(-1)[i] = (up - down) / (2 * h)
            out.append(g)
    return out


def max_relative_error(analytic, numeric, floor=1e-6):
    a = torch.cat([t.reshape(-1) for t in analytic])
    n = torch.cat([t.reshape(-1) for t in numeric])
    denom = torch.clamp(torch.maximum(a.abs(), n.abs()), min=floor)
    return float(((a - n).abs() / denom).max())


def four_graph_setup(seed=0, K=3):
    """Small float64 encoder, four graphs and fixed augmented/neighbor views."""
    rng = np.random.default_rng(seed)
    graphs = []
    for n in (4, 5, 6, 3):
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < 0.6
        graphs.append(make_graph(n, np.stack([iu[keep], ju[keep]], 1), rng.standard_normal((n, 3))))
    views = [augment(g, AugmentationSpec("attr_mask", 0.3), rng) for g in graphs]
    nbrs = [views[i] for i in (1, 0, 3, 2)]
    cfg = EncoderConfig(feature_dim=3, num_clusters=K, num_layers=2, hidden_dim=6, instance_dim=5)
    model = build_encoder(cfg, seed=seed, dtype=torch.float64)
    gb = collate(graphs + views + nbrs, 3, torch.float64)
    return model, gb


def brute_force_acc(pred, truth):
    """Best injective cluster-to-class map by exhaustive search."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    ps, ts = sorted(set(pred.tolist())), sorted(set(truth.tolist()))
    best = 0
    if len(ps) <= len(ts):
        for perm in itertools.permutations(ts, len(ps)):
            m = dict(zip(ps, perm))
            best = max(best, sum(m[p] == t for p, t in zip(pred, truth)))
    else:
        for perm in itertools.permutations(ps, len(ts)):
            m = dict(zip(perm, ts))
            best = max(best, sum(m.get(p) == t for p, t in zip(pred, truth)))
    return best / len(pred)


def table(pred, truth):
    ps, ts = sorted(set(pred)), sorted(set(truth))
    return [[sum(1 for p, t in zip(pred, truth) if p == a and t == b) for b in ts] for a in ps]


def hand_nmi(pred, truth):
    """Mutual information over sqrt(H(pred) H(truth)) from the contingency table."""
    pred, truth = list(pred), list(truth)
    n = len(pred)
    C = table(pred, truth)
    rows = [sum(r) for r in C]
    cols = [sum(c) for c in zip(*C)]
    hp = -sum(r / n * math.log(r / n) for r in rows)
    ht = -sum(c / n * math.log(c / n) for c in cols)
    if hp == 0 or ht == 0:
        return 1.0 if hp == ht else 0.0
    mi = sum(
        C[i][j] / n * math.log(n * C[i][j] / (rows[i] * cols[j]))
        for i in range(len(rows))
        for j in range(len(cols))
        if C[i][j]
    )
    return mi / math.sqrt(hp * ht)


def hand_ari(pred, truth):
    """Hubert-Arabie adjusted Rand index from pair counts."""
    pred, truth = list(pred), list(truth)
    n = len(pred)
    C = table(pred, truth)
    comb = lambda x: x * (x - 1) / 2
    sum_ij = sum(comb(v) for r in C for v in r)
    sum_a = sum(comb(sum(r)) for r in C)
    sum_b = sum(comb(sum(c)) for c in zip(*C))
    expected = sum_a * sum_b / comb(n)
    mx = (sum_a + sum_b) / 2
    if mx == expected:
        return 1.0
    return (sum_ij - expected) / (mx - expected)
