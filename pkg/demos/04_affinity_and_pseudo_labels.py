"""
Affinity graph and pseudo-labels
================================

Build the kNN affinity graph over instance features, look at its
Laplacian, and pick the most confident pseudo-labels.
"""

# %%

import numpy as np

from glcc import build_affinity, laplacian, neighbor_average, normalized_weights, sample_neighbor, select_confident

rng = np.random.default_rng(0)
centers = np.eye(3)
y = np.repeat([0, 1, 2], 10)
h = centers[y] + 0.3 * rng.standard_normal((30, 3))
h /= np.linalg.norm(h, axis=1, keepdims=True)

ag = build_affinity(h, k=5, tau=0.1)
print("nonzeros:", ag.A.nnz, "symmetric:", (ag.A != ag.A.T).nnz == 0)

# %%
# Neighbours of one node, with normalized edge weights.

w = normalized_weights(ag, 0)
print({j: round(v, 3) for j, v in w.items()})
print("sampled neighbour:", sample_neighbor(ag, 0, rng))

# %%
# The normalized Laplacian has its spectrum in [0, 2].

ev = np.linalg.eigvalsh(laplacian(ag).toarray())
print("eigenvalues in", ev.min().round(6), ev.max().round(6))

# %%
# Pseudo-labels
# -------------
# Soft assignments are averaged with the neighbours' before ranking by
# entropy. Node 0 has a vague prediction that its neighbours sharpen.

Z = np.full((30, 3), 0.1)
Z[np.arange(30), y] = 0.8
Z[0] = [0.4, 0.3, 0.3]
print("node 0 before", Z[0], "after", neighbor_average(0, Z, ag).round(3))
pls = select_confident(Z, ag, r=0.2)
print(len(pls), "selected:", pls.indices.tolist())
print("labels agree with truth:", bool(np.all(pls.labels == y[pls.indices])))
