"""Bankruptcy cascade and the kappa sweep.

A user goes bankrupt once its balance ``(P* - P) / (P* + P)`` drops to
``-kappa`` or below. Bankrupt users stop paying, so their ingoing links are
cut and the ranks are recomputed.
"""
import numpy as np

import gmcascade as gm
from gmcascade.contagion import default_kappa_grid, kappa_sweep, run_contagion
from gmcascade.synth import SynthParams, synthetic_graph

g = synthetic_graph(SynthParams(nodes=10_000, edges=50_000), seed=0)

# %% one run at kappa = 0.15
state = run_contagion(g, 0.15, tau_max=10)
for tau, (w, new) in enumerate(zip(state.history, state.new_counts), start=1):
    print(f"tau={tau:2d} W_c={w:.4f} new={new}")

# %% sweep kappa; the bankrupt fraction falls from near one to near zero
kappas = np.concatenate([[1e-6], default_kappa_grid(0.1, 1.0, 0.1)])
sweep = kappa_sweep(g, kappas, taus=(1, 3, 10))
print("kappa   tau=1   tau=3   tau=10")
for kappa, row in zip(sweep.kappas, sweep.fractions):
    print(f"{kappa:8.6f} " + " ".join(f"{x:7.4f}" for x in row))
