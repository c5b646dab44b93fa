"""Seeded scale-free transaction networks for desk-scale experiments.

Every node gets a heavy-tailed "buying" and "selling" activity drawn from a
Pareto law; senders and receivers of each transaction are sampled in
proportion to these activities, so in- and out-degrees inherit the Pareto
tail. Every node sends at least one transaction, so all configured ids
appear in the output.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np

from .ingest import SliceGraph, build_graph_from_arrays, quarter_bounds


@dataclass(frozen=True)
class SynthParams:
    nodes: int = 10_000
    edges: int = 50_000
    exponent: float = 1.5  # CCDF tail exponent of the activities
    amount_sigma: float = 1.0
    year: int = 2013
    quarter: int = 1


@dataclass(frozen=True)
class SynthTransactions:
    src: np.ndarray
    dst: np.ndarray
    amount: np.ndarray
    timestamp: np.ndarray
    ids: tuple[str, ...]

    def graph(self) -> SliceGraph:
        return build_graph_from_arrays(self.src, self.dst, self.amount, self.ids)

    def write(self, fh: IO[str]) -> None:
        fh.write("src,dst,amount,timestamp\n")
        ids = self.ids
        for s, d, a, t in zip(self.src, self.dst, self.amount, self.timestamp):
            fh.write(f"{ids[s]},{ids[d]},{a:.8f},{t}\n")


def _sample(rng: np.random.Generator, weights: np.ndarray, size: int) -> np.ndarray:
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), weights.size - 1)


def generate(params: SynthParams = SynthParams(), seed: int = 0) -> SynthTransactions:
    n, m = params.nodes, params.edges
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if m < n:
        raise ValueError("need at least as many edges as nodes")
    rng = np.random.default_rng(seed)
    sell = rng.pareto(params.exponent, n) + 1.0
    buy = rng.pareto(params.exponent, n) + 1.0

    src = np.concatenate([np.arange(n), _sample(rng, sell, m - n)])
    dst = _sample(rng, buy, m)
    # redraw receivers that coincide with the sender
    loops = np.nonzero(src == dst)[0]
    while loops.size:
        dst[loops] = _sample(rng, buy, loops.size)
        loops = loops[src[loops] == dst[loops]]

    perm = rng.permutation(m)
    src, dst = src[perm], dst[perm]
    amount = np.round(rng.lognormal(0.0, params.amount_sigma, m), 8)
    start, end = quarter_bounds(params.year, params.quarter)
    timestamp = np.sort(rng.integers(start, end, m))
    ids = tuple(f"u{k}" for k in range(n))
    return SynthTransactions(src, dst, amount, timestamp, ids)


def synthetic_graph(params: SynthParams = SynthParams(), seed: int = 0) -> SliceGraph:
    return generate(params, seed).graph()
