"""Balance-threshold bankruptcy cascades.

A user ``u`` with balance ``B_u = (P*_u - P_u) / (P*_u + P_u) <= -kappa``
(up to ``TIE_TOL``) goes bankrupt. Each iteration deletes the ingoing edges
of every bankrupt user, recomputes PageRank and CheiRank on the pruned
network and marks the new bankrupts. Bankruptcy is absorbing.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .google import DEFAULT_ALPHA, DEFAULT_MAX_ITER, DEFAULT_TOL, rank_pair
from .ingest import SliceGraph

DEFAULT_TAU_MAX = 10

# balances within this distance above -kappa count as reaching it; users with
# mathematically equal P and P* must not be split by round-off at kappa = 0
TIE_TOL = 1e-10


def default_kappa_grid(start: float = 0.0, stop: float = 1.0, step: float = 0.01) -> np.ndarray:
    count = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(count), 12)


def balance(p: np.ndarray, p_star: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    p_star = np.asarray(p_star, dtype=np.float64)
    if p.shape != p_star.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {p_star.shape}")
    if np.any(p <= 0) or np.any(p_star <= 0):
        raise ValueError("rank probabilities must be strictly positive")
    return (p_star - p) / (p_star + p)


@dataclass(frozen=True, eq=False)
class ContagionState:
    """Snapshot of a cascade after ``tau`` completed iterations.

    ``bankrupt_tau[u]`` is the iteration at which ``u`` went bankrupt, 0 if
    it is still safe. ``history[t - 1]`` is the bankrupt fraction after
    iteration ``t`` and ``new_counts[t - 1]`` the number of users that went
    bankrupt at that iteration.
    """

    kappa: float
    bankrupt_tau: np.ndarray
    tau: int = 0
    history: tuple[float, ...] = ()
    new_counts: tuple[int, ...] = ()
    balances: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, n: int, kappa: float) -> "ContagionState":
        return cls(float(kappa), np.zeros(n, dtype=np.int64))

    @property
    def bankrupt(self) -> np.ndarray:
        return self.bankrupt_tau > 0

    @property
    def fraction(self) -> float:
        return self.history[-1] if self.history else 0.0


def contagion_step(
    g: SliceGraph,
    state: ContagionState,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ContagionState:
    """Advance the cascade on the original graph ``g`` by one iteration."""
    bankrupt = state.bankrupt
    pruned = g.drop_incoming(bankrupt) if bankrupt.any() else g
    p, p_star = rank_pair(pruned, alpha, tol, max_iter)
    b = balance(p.probs, p_star.probs)
    fresh = (b <= -state.kappa + TIE_TOL) & ~bankrupt
    tau = state.tau + 1
    bankrupt_tau = state.bankrupt_tau.copy()
    bankrupt_tau[fresh] = tau
    n_bankrupt = int(np.count_nonzero(bankrupt_tau))
    return replace(
        state,
        bankrupt_tau=bankrupt_tau,
        tau=tau,
        history=state.history + (n_bankrupt / g.node_count,),
        new_counts=state.new_counts + (int(fresh.sum()),),
        balances=b,
    )


def run_contagion(
    g: SliceGraph,
    kappa: float,
    tau_max: int = DEFAULT_TAU_MAX,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ContagionState:
    """Iterate until ``tau_max`` or until an iteration adds no bankrupt.

    The first iteration uses the unpruned network. After a fixed point the
    cascade cannot move, so the history stays constant at its last value.
    """
    if tau_max < 1:
        raise ValueError("tau_max must be at least 1")
    state = ContagionState.initial(g.node_count, kappa)
    while state.tau < tau_max:
        state = contagion_step(g, state, alpha, tol, max_iter)
        if state.new_counts[-1] == 0:
            break
    return state


def fraction_at(state: ContagionState, tau: int) -> float:
    """Bankrupt fraction after iteration ``tau``, extended past early exit."""
    if tau < 1:
        return 0.0
    if tau <= len(state.history):
        return state.history[tau - 1]
    return state.fraction


@dataclass(frozen=True)
class SweepResult:
    kappas: np.ndarray
    taus: np.ndarray
    fractions: np.ndarray  # shape (len(kappas), len(taus))
    states: tuple[ContagionState, ...]

    def rows(self):
        for a, kappa in enumerate(self.kappas):
            for b, tau in enumerate(self.taus):
                yield float(kappa), int(tau), float(self.fractions[a, b])

    def kappa_monotonicity_violations(self) -> list[tuple[float, int]]:
        """``(kappa, tau)`` pairs where W_c rises with kappa at fixed tau."""
        out = []
        for b, tau in enumerate(self.taus):
            col = self.fractions[:, b]
            for a in np.nonzero(np.diff(col) > 0)[0]:
                out.append((float(self.kappas[a + 1]), int(tau)))
        return out


def kappa_sweep(
    g: SliceGraph,
    kappas: Sequence[float],
    taus: Sequence[int] = (1, 3, 5, 10),
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> SweepResult:
    """Run one cascade per threshold and tabulate W_c at the checkpoints.

    Cascades are independent; with ``threads > 1`` they run on a thread
    pool and are collected in threshold order, so the table does not
    depend on scheduling.
    """
    kappas = np.asarray(kappas, dtype=np.float64)
    taus = np.asarray(sorted(set(int(t) for t in taus)), dtype=np.int64)
    if kappas.size == 0:
        raise ValueError("kappa grid is empty")
    if taus.size == 0 or taus[0] < 1:
        raise ValueError("tau checkpoints must be positive")
    tau_max = int(taus[-1])

    def one(kappa):
        return run_contagion(g, float(kappa), tau_max, alpha, tol, max_iter)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            states = tuple(pool.map(one, kappas))
    else:
        states = tuple(one(k) for k in kappas)
    fractions = np.array([[fraction_at(s, int(t)) for t in taus] for s in states])
    return SweepResult(kappas, taus, fractions, states)
