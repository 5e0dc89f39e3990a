"""
Metrics and the k-means baseline
================================
"""

# %%
# All three scores ignore how clusters are numbered.

import numpy as np

from glcc import acc, ari, evaluate_labels, kmeans, nmi

truth = [0, 0, 1, 1, 2, 2]
pred = [2, 2, 0, 0, 1, 1]
print(nmi(pred, truth), acc(pred, truth), ari(pred, truth))

# %%
# A pattern unrelated to the truth scores zero NMI and negative ARI.

print(nmi([0, 0, 1, 1], [0, 1, 0, 1]), ari([0, 0, 1, 1], [0, 1, 0, 1]))

# %%
# k-means on three blobs.

rng = np.random.default_rng(0)
y = np.repeat([0, 1, 2], 50)
X = 4 * np.eye(3)[y] + rng.standard_normal((150, 3))
report = evaluate_labels(kmeans(X, 3, seed=0), y)
print(report.to_json())
