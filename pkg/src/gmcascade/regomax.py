"""Reduced Google matrix of a node subset and its component split.

For a selection ``r`` with complement ``s`` the reduced matrix is the
Schur complement

    G_R = G_rr + G_rs (1 - G_ss)^-1 G_sr.

With ``lambda_c`` the leading eigenvalue of ``G_ss``, ``psi_R``/``psi_L``
its right/left eigenvectors (``psi_L . psi_R = 1``) and the projectors
``P_c = psi_R psi_L^T``, ``Q_c = 1 - P_c``, the inverse splits into

    (1 - G_ss)^-1 = P_c / (1 - lambda_c) + Q_c (1 - Q_c G_ss Q_c)^-1 Q_c

giving ``G_pr = G_rs P_c G_sr / (1 - lambda_c)`` and
``G_qr = G_rs Q_c [sum_l (Q_c G_ss Q_c)^l] Q_c G_sr``. Everything over the
complement is matrix-free; only ``N_r x N_r`` results are dense.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .google import StochasticOperator

DEFAULT_NR = 20
DEFAULT_SERIES_TOL = 1e-8
MAX_SERIES_TERMS = 10_000


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Block:
    """Matrix-free action of ``G[rows][:, cols]``.

    The block is ``alpha * S[rows, cols] + (1/N) 1 c[cols]^T``.
    """

    s: sp.csr_matrix  # alpha already folded in
    c: np.ndarray
    n: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.s.shape

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = self.s @ x
        shift = self.c @ x / self.n
        return out + shift  # broadcasts over rows for vectors and blocks

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        out = self.s.T @ y
        total = y.sum(axis=0) / self.n
        if y.ndim == 1:
            return out + self.c * total
        return out + np.outer(self.c, total)

    def dense(self) -> np.ndarray:
        return self.matvec(np.eye(self.shape[1]))


def _check_selection(n: int, nodes: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    sel = np.asarray(nodes, dtype=np.int64)
    if sel.ndim != 1 or sel.size < 1:
        raise ValueError("selection must be a non-empty list of node indices")
    if sel.min() < 0 or sel.max() >= n:
        raise ValueError(f"selection index out of range 0..{n - 1}")
    if np.unique(sel).size != sel.size:
        raise ValueError("selection indices must be distinct")
    mask = np.ones(n, dtype=bool)
    mask[sel] = False
    return sel, np.nonzero(mask)[0]


def partition(op: StochasticOperator, nodes: Sequence[int]) -> dict[str, Block]:
    """Split ``G`` into the blocks ``rr``, ``rs``, ``sr``, ``ss``.

    Rows and columns of the selection follow the order of ``nodes``; the
    complement keeps ascending node order.
    """
    r, s = _check_selection(op.n, nodes)
    a_s = (op.alpha * op.s_matrix).tocsr()
    c = op.teleport_weights()
    rows_r = a_s[r]
    rows_s = a_s[s]
    return {
        "rr": Block(rows_r[:, r].tocsr(), c[r], op.n),
        "rs": Block(rows_r[:, s].tocsr(), c[s], op.n),
        "sr": Block(rows_s[:, r].tocsr(), c[r], op.n),
        "ss": Block(rows_s[:, s].tocsr(), c[s], op.n),
    }


def _power(step, n_s: int, tol: float, max_iter: int) -> tuple[float, np.ndarray, int]:
    x = np.full(n_s, 1.0 / n_s)
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = step(x)
        lam = float(y.sum())  # x sums to 1 and all entries are positive
        if lam <= 0:
            return 0.0, x, it
        y /= lam
        if np.abs(y - x).sum() <= tol:
            return lam, y, it
        x = y
    raise ConvergenceError(
        f"leading eigenvector of the complement block did not converge in "
        f"{max_iter} iterations; increase max_iter"
    )


def leading_eigenpair(
    g_ss: Block, tol: float = 1e-13, max_iter: int = 100_000
) -> tuple[float, np.ndarray, np.ndarray]:
    """Leading eigenvalue and right/left eigenvectors of ``G_ss``.

    ``psi_R`` sums to 1 and ``psi_L`` is scaled so that ``psi_L . psi_R = 1``.
    ``G_ss`` is entrywise positive, so the Perron vector is unique and power
    iteration converges.
    """
    n_s = g_ss.shape[0]
    if n_s < 1:
        raise ValueError("complement is empty")
    lam, psi_r, _ = _power(g_ss.matvec, n_s, tol, max_iter)
    _, psi_l, _ = _power(g_ss.rmatvec, n_s, tol, max_iter)
    # left vector is only defined up to scale; fix it by the pairing
    psi_l = psi_l / float(psi_l @ psi_r)
    return lam, psi_r, psi_l


@dataclass(frozen=True)
class ReducedMatrices:
    nodes: np.ndarray
    g_r: np.ndarray
    g_rr: np.ndarray
    g_pr: np.ndarray
    g_qr: np.ndarray
    lambda_c: float
    series_terms: int

    @property
    def g_qrd(self) -> np.ndarray:
        return np.diag(np.diag(self.g_qr))

    @property
    def g_qrnd(self) -> np.ndarray:
        return self.g_qr - self.g_qrd

    @property
    def n_r(self) -> int:
        return self.g_r.shape[0]

    def blocks(self) -> dict[str, np.ndarray]:
        return {
            "g_r": self.g_r,
            "g_rr": self.g_rr,
            "g_pr": self.g_pr,
            "g_qr": self.g_qr,
            "g_qrnd": self.g_qrnd,
        }

    def weights(self) -> dict[str, float]:
        return component_weights(self)


def component_weights(rm: ReducedMatrices) -> dict[str, float]:
    """Sum of entries of each block divided by ``N_r``."""
    n_r = rm.n_r
    return {
        "W_R": float(rm.g_r.sum() / n_r),
        "W_rr": float(rm.g_rr.sum() / n_r),
        "W_pr": float(rm.g_pr.sum() / n_r),
        "W_qr": float(rm.g_qr.sum() / n_r),
        "W_qrnd": float(rm.g_qrnd.sum() / n_r),
    }


def _deflated_series(g_ss: Block, psi_r, psi_l, x0: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    """``sum_l (Q G_ss Q)^l x0`` for ``x0`` already in the range of ``Q``.

    Stops once the remaining tail, extrapolated geometrically with the
    slower of the last two decay ratios, is below ``tol / 10`` times the
    partial sum.
    """

    def project(x):
        return x - np.outer(psi_r, psi_l @ x)

    total = x0.copy()
    term = x0
    prev_norm = np.abs(term).sum()
    if prev_norm == 0:
        return total, 0
    prev_ratio = 1.0
    for k in range(1, MAX_SERIES_TERMS + 1):
        term = project(g_ss.matvec(term))
        norm = np.abs(term).sum()
        total += term
        if norm == 0:
            return total, k
        ratio = norm / prev_norm
        rate = max(ratio, prev_ratio)
        prev_norm, prev_ratio = norm, ratio
        if rate < 1 and norm * rate / (1.0 - rate) <= 0.1 * tol * np.abs(total).sum():
            return total, k
    raise ConvergenceError(
        f"deflated series did not converge within {MAX_SERIES_TERMS} terms"
    )


def reduced_google(
    op: StochasticOperator, nodes: Sequence[int], tol: float = DEFAULT_SERIES_TOL
) -> ReducedMatrices:
    """Reduced Google matrix of ``nodes`` with its ``rr``/``pr``/``qr`` split.

    Row and column ``k`` of every returned matrix correspond to
    ``nodes[k]``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    blocks = partition(op, nodes)
    sel = np.asarray(nodes, dtype=np.int64)
    n_r = sel.size
    g_rr = blocks["rr"].dense()
    n_s = op.n - n_r
    if n_s == 0:
        zero = np.zeros((n_r, n_r))
        return ReducedMatrices(sel, g_rr.copy(), g_rr, zero, zero.copy(), 0.0, 0)

    g_rs, g_sr, g_ss = blocks["rs"], blocks["sr"], blocks["ss"]
    lam, psi_r, psi_l = leading_eigenpair(g_ss)
    if lam >= 1.0 - 1e-12:
        raise ValueError("complement absorbs all probability")

    v = g_sr.matvec(np.eye(n_r))  # N_s x N_r, columns G_sr e_j
    coeff = psi_l @ v  # psi_L^T G_sr
    g_pr = np.outer(g_rs.matvec(psi_r), coeff) / (1.0 - lam)

    q_v = v - np.outer(psi_r, coeff)
    series, terms = _deflated_series(g_ss, psi_r, psi_l, q_v, tol)
    g_qr = g_rs.matvec(series)
    g_r = g_rr + g_pr + g_qr
    return ReducedMatrices(sel, g_r, g_rr, g_pr, g_qr, lam, terms)


def top_pagerank_selection(index: np.ndarray, n_r: int = DEFAULT_NR) -> np.ndarray:
    """First ``n_r`` nodes of a PageRank ordering (K=1 first)."""
    if n_r < 1:
        raise ValueError("n_r must be positive")
    return np.asarray(index[:n_r], dtype=np.int64)
