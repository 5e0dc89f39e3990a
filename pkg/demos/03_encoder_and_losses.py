"""
Encoder and contrastive losses
==============================

Encode a handful of graphs, then evaluate the three training objectives on
the outputs and take one gradient step.
"""

# %%

import numpy as np
import torch

from glcc import EncoderConfig, build_encoder, cgc_loss, encode, igc_loss, supcon_loss
from glcc.augment import AugmentationSpec, augment
from glcc.graph import three_family_mixture

ds = three_family_mixture(count=4, seed=0)
graphs = ds.graphs[:8]
model = build_encoder(EncoderConfig(feature_dim=ds.feature_dim, num_clusters=3), seed=0)

emb = encode(graphs, model)
print("h_G", tuple(emb.h.shape))
print("instance features are unit norm:", torch.allclose(emb.instance_features.norm(dim=1), torch.ones(8)))
print("assignment rows sum to one:", torch.allclose(emb.assignments.sum(dim=1), torch.ones(8)))

# %%
# Two views of the same batch
# ---------------------------

rng = np.random.default_rng(0)
views = [augment(g, AugmentationSpec("attr_mask", 0.1), rng) for g in graphs]
both = encode(graphs + views, model)
H, Hp = both.instance_features[:8], both.instance_features[8:]
Z, Zp = both.assignments[:8], both.assignments[8:]

# %%
# With an all-zero Laplacian block the instance loss is plain InfoNCE.

L = torch.zeros(8, 8)
print("instance loss", igc_loss(H, Hp, L, tau=0.1).item())

contrast, entropy = cgc_loss(Z, Zp, tau=1.0)
print("cluster contrast", contrast.item(), "entropy", entropy.item())

labels = [g.label for g in graphs] * 2
print("supervised contrast", supcon_loss(both.instance_features, labels, tau=0.1).item())

# %%
# One optimizer step on the combined objective.

opt = torch.optim.Adam(model.parameters(), lr=1e-3)
loss = igc_loss(H, Hp, L, 0.1) + contrast - entropy
opt.zero_grad()
loss.backward()
opt.step()
print("step done, loss was", loss.item())
