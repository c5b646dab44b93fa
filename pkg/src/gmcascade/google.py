"""Matrix-free Google matrix, PageRank and CheiRank.

The Google matrix of a graph with ``N`` nodes is

    G_ij = alpha * S_ij + alpha * d_j / N + (1 - alpha) / N

where ``S`` is the column-normalized transfer matrix and ``d_j`` flags
dangling nodes (no outgoing weight). Only ``S`` is stored; the dangling
and teleportation terms are rank-one and applied analytically.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .ingest import SliceGraph, invert_graph

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.85
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 1000


@dataclass(frozen=True, eq=False)
class StochasticOperator:
    """Implicit Google matrix.

    ``s_matrix`` is CSR with rows indexed by receiver ``i`` and columns by
    sender ``j``, so that ``s_matrix @ v`` is the link-following step.
    """

    alpha: float
    s_matrix: sp.csr_matrix
    dangling: np.ndarray  # bool mask, length n

    @property
    def n(self) -> int:
        return self.s_matrix.shape[0]

    def teleport_weights(self) -> np.ndarray:
        """Per-column weight ``c_j`` of the rank-one part ``(1/N) 1 c^T``."""
        return self.alpha * self.dangling + (1.0 - self.alpha)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply(self, v)


def build_operator(g: SliceGraph, alpha: float = DEFAULT_ALPHA) -> StochasticOperator:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    n = g.node_count
    if n == 0:
        raise ValueError("empty graph")
    out = g.out_weight()
    s = g.adjacency.T.tocsr()
    s.sort_indices()
    # data of row i, column j is w_ij; divide by the sender's out-weight
    s.data = s.data / out[s.indices]
    return StochasticOperator(float(alpha), s, out == 0)


def apply(op: StochasticOperator, v: np.ndarray) -> np.ndarray:
    """Return ``G @ v`` (``v`` may also be an ``N x k`` block)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != op.n:
        raise ValueError(f"vector of length {v.shape[0]} for operator of size {op.n}")
    shift = op.teleport_weights() @ v / op.n
    return op.alpha * (op.s_matrix @ v) + shift


def dense_matrix(op: StochasticOperator) -> np.ndarray:
    """Materialize ``G``; only sensible for small graphs."""
    return op.alpha * op.s_matrix.toarray() + np.outer(
        np.full(op.n, 1.0 / op.n), op.teleport_weights()
    )


@dataclass(frozen=True, eq=False)
class RankResult:
    probs: np.ndarray
    index: np.ndarray  # node indices by decreasing probability (K=1 first)
    iterations: int
    residual: float
    converged: bool

    def positions(self) -> np.ndarray:
        """Rank position (1-based K) of every node."""
        return rank_positions(self.index)


def rank_indices(probs: np.ndarray) -> np.ndarray:
    """Order nodes by decreasing probability, ties by ascending index."""
    probs = np.asarray(probs, dtype=np.float64)
    if not np.all(np.isfinite(probs)):
        raise ValueError("probabilities must be finite")
    return np.argsort(-probs, kind="stable")


def rank_positions(order: np.ndarray) -> np.ndarray:
    """Invert an ordering: ``positions[order[k]] = k + 1``."""
    order = np.asarray(order)
    pos = np.empty(order.size, dtype=np.int64)
    pos[order] = np.arange(1, order.size + 1)
    return pos


def pagerank(
    op: StochasticOperator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    start: np.ndarray | None = None,
) -> RankResult:
    """Stationary vector of ``G`` by power iteration.

    Stops when the L1 change between successive iterates is at most
    ``tol``. Hitting ``max_iter`` is logged and flagged in the result, not
    raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = op.n
    x = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=np.float64) / np.sum(start)
    c = op.teleport_weights()
    s = op.s_matrix
    alpha = op.alpha
    residual = np.inf
    it = 0
    while it < max_iter:
        it += 1
        y = alpha * (s @ x)
        y += (c @ x) / n
        y /= y.sum()
        residual = float(np.abs(y - x).sum())
        x = y
        if residual <= tol:
            break
    converged = residual <= tol
    if not converged:
        log.warning("power iteration stopped at max_iter=%d, residual %.3e", max_iter, residual)
    return RankResult(x, rank_indices(x), it, residual, converged)


def cheirank(
    op_inverted: StochasticOperator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RankResult:
    """PageRank of the operator built on the inverted graph."""
    return pagerank(op_inverted, tol=tol, max_iter=max_iter)


def rank_pair(
    g: SliceGraph,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[RankResult, RankResult]:
    """PageRank and CheiRank of one graph."""
    p = pagerank(build_operator(g, alpha), tol, max_iter)
    p_star = cheirank(build_operator(invert_graph(g), alpha), tol, max_iter)
    return p, p_star
