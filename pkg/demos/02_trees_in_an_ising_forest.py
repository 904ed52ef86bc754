# %% [markdown]
# # Five-vertex trees in a binary Ising model
#
# On a forest the pairwise moments have a closed form: the correlation of two
# spins is the product of tanh(w) along the path joining them. That makes
# exact sampling and exact ground truth cheap.

# %%
import math

import numpy as np

from graphfdr import ising_edge_statistics, select_features
from graphfdr.features import path, spider, star
from graphfdr.simulation import (
    IsingDesign,
    fdp_power,
    gen_ising_forest,
    rep_rng,
    sample_ising_forest,
    true_features_for,
)

design = IsingDesign(d=80, theta=0.45)
model = gen_ising_forest(design, rep_rng(seed=3, rep=0))
print(f"{len(model.blocks)} trees with sizes {[len(b.vertices) for b in model.blocks]}")

X = sample_ising_forest(model.weights, n=2000, rng=rep_rng(seed=3, rep=1))
u, v = model.blocks[0].edges[0]
print(f"edge {(u, v)}: empirical E[XuXv] = {np.mean(X[:, u] * X[:, v]):.3f}, "
      f"tanh(w) = {math.tanh(model.weights.weight((u, v))):.3f}")

# %% [markdown]
# ## Thresholded moments as edge weights
#
# An "edge" here is a pair whose moment exceeds tanh(theta). Neighbours in a
# tree always qualify; two-step neighbours usually do too, so the true graph is
# denser than the forest.

# %%
stats = ising_edge_statistics(X, design.theta)
print("true pairs above the threshold:", len(model.truth.support("b")))
print("forest edges:", sum(len(b.edges) for b in model.blocks))

# %% [markdown]
# ## Which five-vertex trees are present?

# %%
for shape in (path(5), star(5), spider()):
    res = select_features(stats, shape, q=0.05)
    fdp, power = fdp_power(res, true_features_for(shape, model), truth_edges=model.truth.support("b"))
    print(f"{shape.name:7s} selected={len(res.selected):4d} FDP={fdp:.3f} power={power:.3f}")
