"""Figure-level reductions over rank indices and bankrupt sets."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .google import rank_positions

DEFAULT_CELLS = 200

# marks cells of a crisis map that hold no user; 0 is a meaningful value
EMPTY_CELL = np.nan


@dataclass(frozen=True)
class DensityGrid:
    """``cells[a, b]`` covers PageRank bin ``a`` and CheiRank bin ``b``.

    Both axes share ``edges``, log-equidistant over ``[1, N]``.
    """

    cells: np.ndarray
    edges: np.ndarray
    mode: str  # "count" or "crisis"


def log_bin_edges(n: int, cells: int = DEFAULT_CELLS) -> np.ndarray:
    if cells < 1:
        raise ValueError("cells must be at least 1")
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return np.linspace(1.0, 2.0, cells + 1)
    return np.logspace(0.0, np.log10(n), cells + 1)


def _bin_of(k: np.ndarray, n: int, cells: int) -> np.ndarray:
    """Log bin of 1-based ranks; K=1 in the first bin, K=N in the last."""
    if n == 1:
        return np.zeros(k.size, dtype=np.int64)
    # the epsilon puts ranks sitting exactly on an edge (K = N**(a/C)) in bin a
    b = np.floor(cells * np.log(k) / np.log(n) + 1e-9).astype(np.int64)
    return np.clip(b, 0, cells - 1)


def _positions_pair(k_order, k_star_order) -> tuple[np.ndarray, np.ndarray]:
    k = rank_positions(k_order)
    ks = rank_positions(k_star_order)
    if k.size != ks.size:
        raise ValueError("PageRank and CheiRank orderings differ in length")
    return k, ks


def density_grid(k_order: Sequence[int], k_star_order: Sequence[int], cells: int = DEFAULT_CELLS) -> DensityGrid:
    """Count users per log-spaced ``(K, K*)`` cell.

    ``k_order`` and ``k_star_order`` are node orderings by decreasing
    PageRank and CheiRank (``RankResult.index``).
    """
    k, ks = _positions_pair(k_order, k_star_order)
    n = k.size
    edges = log_bin_edges(n, cells)
    a, b = _bin_of(k, n, cells), _bin_of(ks, n, cells)
    grid = np.zeros((cells, cells), dtype=np.int64)
    np.add.at(grid, (a, b), 1)
    return DensityGrid(grid, edges, "count")


def crisis_map(
    k_order: Sequence[int],
    k_star_order: Sequence[int],
    bankrupt: np.ndarray,
    cells: int = DEFAULT_CELLS,
) -> DensityGrid:
    """Per-cell ``(2 N_u,cell - N_cell) / N_cell``; empty cells are NaN.

    ``bankrupt`` is a boolean mask over nodes.
    """
    k, ks = _positions_pair(k_order, k_star_order)
    n = k.size
    bankrupt = np.asarray(bankrupt, dtype=bool)
    if bankrupt.size != n:
        raise ValueError("bankrupt mask length differs from the node count")
    edges = log_bin_edges(n, cells)
    a, b = _bin_of(k, n, cells), _bin_of(ks, n, cells)
    total = np.zeros((cells, cells), dtype=np.int64)
    hit = np.zeros((cells, cells), dtype=np.int64)
    np.add.at(total, (a, b), 1)
    np.add.at(hit, (a[bankrupt], b[bankrupt]), 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = (2.0 * hit - total) / total
    ratio[total == 0] = EMPTY_CELL
    return DensityGrid(ratio, edges, "crisis")


def integrated_fraction(bankrupt: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """``W[K-1]`` = share of all users that are bankrupt with rank <= K."""
    bankrupt = np.asarray(bankrupt, dtype=bool)
    order = np.asarray(order, dtype=np.int64)
    n = order.size
    counts = np.cumsum(bankrupt[order], dtype=np.int64)
    return counts / n


@dataclass(frozen=True)
class FitResult:
    mu: float
    beta: float
    stderr_mu: float
    stderr_beta: float
    fit_range: tuple[float, float]
    points: int

    def predict(self, k):
        return np.asarray(k, dtype=np.float64) ** self.beta / self.mu


def powerlaw_fit(k, w, fit_range: tuple[float, float] = (10, 1e5)) -> FitResult:
    """Least-squares fit of ``W = K**beta / mu`` in log-log coordinates.

    Uses points with ``fit_range[0] <= K <= fit_range[1]`` and ``W > 0``.
    ``stderr_mu`` is propagated from the intercept error to first order.
    """
    k = np.asarray(k, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    lo, hi = fit_range
    use = (k >= lo) & (k <= hi) & (w > 0)
    if use.sum() < 3:
        raise ValueError(f"need at least 3 positive points in range, got {int(use.sum())}")
    res = stats.linregress(np.log(k[use]), np.log(w[use]))
    mu = float(np.exp(-res.intercept))
    return FitResult(
        mu=mu,
        beta=float(res.slope),
        stderr_mu=float(mu * res.intercept_stderr),
        stderr_beta=float(res.stderr),
        fit_range=(float(lo), float(hi)),
        points=int(use.sum()),
    )


@dataclass(frozen=True)
class OccurrenceTable:
    labels: tuple[str, ...]
    users: tuple[str, ...]
    positions: tuple[tuple[int | None, ...], ...]  # per user, per slice; None = absent
    counts: tuple[int, ...]

    def rows(self):
        for user, count, pos in zip(self.users, self.counts, self.positions):
            yield user, count, pos


def topk_occurrence(rankings: Mapping[str, Sequence[str]], k: int = 100, m: int = 20) -> OccurrenceTable:
    """Users most often found in the per-slice top ``k``.

    ``rankings`` maps a slice label to its external ids ordered by rank.
    Users are ordered by appearance count, then best rank ever reached,
    then sum of ranks over appearances, then id.
    """
    if k < 1 or m < 1:
        raise ValueError("k and m must be positive")
    labels = tuple(rankings)
    where: dict[str, dict[str, int]] = defaultdict(dict)
    for label in labels:
        for pos, user in enumerate(list(rankings[label])[:k], start=1):
            where[user][label] = pos

    def key(user):
        ranks = where[user].values()
        return (-len(ranks), min(ranks), sum(ranks), user)

    chosen = sorted(where, key=key)[:m]
    return OccurrenceTable(
        labels=labels,
        users=tuple(chosen),
        positions=tuple(tuple(where[u].get(label) for label in labels) for u in chosen),
        counts=tuple(len(where[u]) for u in chosen),
    )
