"""Density of users and crisis maps on the log-binned (K, K*) plane."""
import numpy as np

import gmcascade as gm
from gmcascade.analytics import crisis_map, density_grid
from gmcascade.contagion import run_contagion
from gmcascade.synth import SynthParams, synthetic_graph

g = synthetic_graph(SynthParams(nodes=5000, edges=25000), seed=1)
p, ps = gm.rank_pair(g)

# %% users per cell; the total is N
dens = density_grid(p.index, ps.index, cells=20)
print("users counted:", dens.cells.sum(), "of", g.node_count)

# %% crisis map after tau = 3: +1 all bankrupt, -1 all safe, NaN empty
state = run_contagion(g, 0.15, tau_max=3)
cmap = crisis_map(p.index, ps.index, state.bankrupt, cells=20)
filled = ~np.isnan(cmap.cells)
print("filled cells:", filled.sum(), "mean value:", round(float(cmap.cells[filled].mean()), 3))
print("bin edges:", np.round(cmap.edges[:5], 2), "...")
