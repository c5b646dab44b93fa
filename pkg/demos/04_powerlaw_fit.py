"""Integrated bankrupt fraction against rank and its power-law fit."""
import numpy as np

import gmcascade as gm
from gmcascade.analytics import integrated_fraction, powerlaw_fit
from gmcascade.contagion import run_contagion
from gmcascade.synth import SynthParams, synthetic_graph

g = synthetic_graph(SynthParams(nodes=20_000, edges=100_000), seed=2)
p, ps = gm.rank_pair(g)
state = run_contagion(g, 0.15, tau_max=10)
k = np.arange(1, g.node_count + 1)

# %% W(K) counts bankrupts among the top K users, divided by N
for name, order in (("K", p.index), ("K*", ps.index)):
    w = integrated_fraction(state.bankrupt, order)
    fit = powerlaw_fit(k, w, fit_range=(10, 1e4))
    print(f"{name:2s}: mu={fit.mu:.4g} +- {fit.stderr_mu:.2g}  beta={fit.beta:.4f} +- {fit.stderr_beta:.2g}")

# %% sanity check: an exact W = K / N recovers mu = N and beta = 1
fit = powerlaw_fit(k, k / g.node_count)
print("exact:", fit.mu, fit.beta)
