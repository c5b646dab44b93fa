"""Reduced Google matrix of the top PageRank users.

``G_R`` keeps the PageRank of the selected nodes and splits into direct
links ``G_rr``, a projector part ``G_pr`` and indirect paths ``G_qr``.
"""
import numpy as np

import gmcascade as gm
from gmcascade.regomax import component_weights, reduced_google, top_pagerank_selection
from gmcascade.synth import SynthParams, synthetic_graph

g = synthetic_graph(SynthParams(nodes=10_000, edges=50_000), seed=0)
op = gm.build_operator(g)
p = gm.pagerank(op)

nodes = top_pagerank_selection(p.index, 20)
rm = reduced_google(op, nodes)
print("lambda_c =", rm.lambda_c, "series terms =", rm.series_terms)

# %% column sums of G_R are one, the parts add up to G_R
print("max |colsum - 1| =", np.abs(rm.g_r.sum(axis=0) - 1).max())
print("max |G_rr + G_pr + G_qr - G_R| =", np.abs(rm.g_rr + rm.g_pr + rm.g_qr - rm.g_r).max())

# %% the restricted PageRank is a fixed point of G_R
pr = p.probs[nodes] / p.probs[nodes].sum()
print("fixed point error:", np.abs(rm.g_r @ pr - pr).max())

for key, value in component_weights(rm).items():
    print(f"{key:6s} {value:.5f}")
