"""Google matrix ranking, balance-threshold contagion and reduced Google
matrices for time-sliced transaction networks."""

__version__ = "0.1.0"

from .ingest import (
    SliceGraph,
    TransactionRecord,
    build_graph,
    invert_graph,
    parse_transactions,
    slice_by_quarter,
)
from .google import StochasticOperator, RankResult, build_operator, cheirank, pagerank, rank_indices, rank_pair
from .contagion import balance, contagion_step, kappa_sweep, run_contagion
from .regomax import ReducedMatrices, component_weights, leading_eigenpair, partition, reduced_google
from .analytics import crisis_map, density_grid, integrated_fraction, powerlaw_fit, topk_occurrence
