"""
Graph augmentations
===================

The four perturbations used to make the second view of a graph.
"""

# %%

import numpy as np

from glcc import AugmentationSpec, augment
from glcc.graph import three_family_mixture

g = three_family_mixture(count=1, seed=1)[2]
rng = np.random.default_rng(0)
print("original:", g.node_count, "nodes,", g.num_edges, "edges")

for strategy in ("node_drop", "edge_perturb", "subgraph", "attr_mask"):
    v = augment(g, AugmentationSpec(strategy, ratio=0.2), rng)
    masked = int((np.abs(v.node_features).sum(axis=1) == 0).sum())
    print(f"{strategy:13s} {v.node_count:3d} nodes {v.num_edges:4d} edges {masked} masked rows")

# %%
# ``random_choice`` picks one of the four per call, which is what training
# does once per mini-batch.

spec = AugmentationSpec("random_choice", 0.1)
print([spec.concrete(rng).strategy for _ in range(6)])

# %%
# A zero ratio is the identity.

print(augment(g, AugmentationSpec("edge_perturb", 0.0), rng).same_as(g))
