"""Transaction parsing, quarter slicing and weighted directed graph construction.

The graph is stored as a CSR adjacency matrix whose row ``j`` lists the
receivers ``i`` of node ``j`` together with the aggregated weight ``w_ij``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

GRAPH_MAGIC = b"GMCASCADE-CSR\n"
GRAPH_FORMAT_VERSION = 1


class ParseError(ValueError):
    """Raised for a malformed or invalid line of an edge-list file."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} at line {line}")
        self.line = line


@dataclass(frozen=True)
class TransactionRecord:
    src: str
    dst: str
    amount: float
    timestamp: int


@dataclass(frozen=True, eq=False)
class SliceGraph:
    """Weighted directed graph of one time slice.

    Attributes
    ----------
    adjacency : scipy.sparse.csr_matrix
        ``N x N`` matrix with ``adjacency[j, i] = w_ij``, the total amount
        sent from ``j`` to ``i``. Canonical form: sorted indices, no
        explicit zeros, no duplicates.
    ids : tuple of str
        External identifier of every dense index.
    """

    adjacency: sp.csr_matrix
    ids: tuple[str, ...]

    def __post_init__(self):
        n = len(self.ids)
        if self.adjacency.shape != (n, n):
            raise ValueError(
                f"adjacency shape {self.adjacency.shape} does not match {n} ids"
            )

    @property
    def node_count(self) -> int:
        return len(self.ids)

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.nnz)

    @property
    def id_map(self) -> dict[str, int]:
        return {u: k for k, u in enumerate(self.ids)}

    def out_weight(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def edges(self) -> Iterator[tuple[str, str, float]]:
        """Yield ``(src, dst, weight)`` in CSR order."""
        a = self.adjacency
        for j in range(self.node_count):
            for p in range(a.indptr[j], a.indptr[j + 1]):
                yield self.ids[j], self.ids[a.indices[p]], float(a.data[p])

    def drop_incoming(self, targets: np.ndarray) -> "SliceGraph":
        """Return a copy with every edge ``j -> u`` removed for ``targets[u]``.

        ``targets`` is a boolean mask over nodes. The node set is unchanged.
        """
        targets = np.asarray(targets, dtype=bool)
        a = self.adjacency
        keep = ~targets[a.indices]
        rows = np.repeat(np.arange(self.node_count), np.diff(a.indptr))
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows[keep], minlength=self.node_count), out=indptr[1:])
        pruned = sp.csr_matrix(
            (a.data[keep], a.indices[keep], indptr), shape=a.shape
        )
        return SliceGraph(pruned, self.ids)

    def __eq__(self, other):
        if not isinstance(other, SliceGraph):
            return NotImplemented
        a, b = self.adjacency, other.adjacency
        return (
            self.ids == other.ids
            and a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_transactions(stream: IO[str] | IO[bytes] | Iterable[str]) -> Iterator[TransactionRecord]:
    """Parse a ``src,dst,amount,timestamp`` edge list.

    Commas or tabs are accepted as delimiters (detected per line). A first
    line whose amount field is not numeric is treated as a header. Blank
    lines and lines starting with ``#`` are skipped.

    Raises
    ------
    ParseError
        On a malformed line or a negative amount; the message carries the
        1-based line number.
    """
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        delimiter = "\t" if "\t" in line else ","
        fields = next(csv.reader([line], delimiter=delimiter))
        fields = [f.strip() for f in fields]
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", lineno)
        src, dst, amount_s, ts_s = fields
        if lineno == 1 and not _is_number(amount_s):
            continue
        if not src or not dst:
            raise ParseError("empty node identifier", lineno)
        try:
            amount = float(amount_s)
        except ValueError:
            raise ParseError(f"invalid amount {amount_s!r}", lineno) from None
        if not np.isfinite(amount):
            raise ParseError(f"non-finite amount {amount_s!r}", lineno)
        if amount < 0:
            raise ParseError("negative amount", lineno)
        try:
            timestamp = int(ts_s)
        except ValueError:
            try:
                timestamp = int(float(ts_s))
            except ValueError:
                raise ParseError(f"invalid timestamp {ts_s!r}", lineno) from None
        yield TransactionRecord(src, dst, amount, timestamp)


def quarter_bounds(year: int, quarter: int) -> tuple[int, int]:
    """Epoch seconds of ``[start, end)`` for a calendar quarter in UTC."""
    if quarter not in (1, 2, 3, 4):
        raise ValueError(f"quarter must be in 1..4, got {quarter}")
    month = 3 * (quarter - 1) + 1
    start = datetime(year, month, 1, tzinfo=timezone.utc)
    end = (
        datetime(year + 1, 1, 1, tzinfo=timezone.utc)
        if quarter == 4
        else datetime(year, month + 3, 1, tzinfo=timezone.utc)
    )
    return int(start.timestamp()), int(end.timestamp())


def slice_by_quarter(
    records: Iterable[TransactionRecord], year: int, quarter: int
) -> list[TransactionRecord]:
    start, end = quarter_bounds(year, quarter)
    return [r for r in records if start <= r.timestamp < end]


def build_graph_from_arrays(
    src: np.ndarray,
    dst: np.ndarray,
    weight: np.ndarray,
    ids: Sequence[str],
    drop_self_loops: bool = True,
) -> SliceGraph:
    """Aggregate index arrays into a canonical :class:`SliceGraph`.

    ``src`` and ``dst`` hold dense indices into ``ids``. Parallel edges are
    summed; zero weights (and self-loops unless disabled) are dropped.
    """
    n = len(ids)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    weight = np.asarray(weight, dtype=np.float64)
    keep = weight > 0
    if drop_self_loops:
        keep &= src != dst
    a = sp.coo_matrix((weight[keep], (src[keep], dst[keep])), shape=(n, n)).tocsr()
    a.sum_duplicates()
    a.eliminate_zeros()
    a.sort_indices()
    a.indptr = a.indptr.astype(np.int64)
    a.indices = a.indices.astype(np.int64)
    return SliceGraph(a, tuple(ids))


def build_graph(
    records: Iterable[TransactionRecord],
    weight: str = "amount",
    drop_self_loops: bool = True,
) -> SliceGraph:
    """Build the slice graph from transaction records.

    Every id seen as source or destination becomes a node, numbered in
    order of first appearance (source before destination within a
    record). With ``weight="count"`` each positive-amount transaction
    contributes 1 instead of its amount.
    """
    if weight not in ("amount", "count"):
        raise ValueError(f"weight must be 'amount' or 'count', got {weight!r}")
    index: dict[str, int] = {}
    src, dst, amt = [], [], []
    for r in records:
        s = index.setdefault(r.src, len(index))
        d = index.setdefault(r.dst, len(index))
        src.append(s)
        dst.append(d)
        if weight == "count":
            amt.append(1.0 if r.amount > 0 else 0.0)
        else:
            amt.append(r.amount)
    return build_graph_from_arrays(
        np.array(src, dtype=np.int64),
        np.array(dst, dtype=np.int64),
        np.array(amt, dtype=np.float64),
        list(index),
        drop_self_loops=drop_self_loops,
    )


def invert_graph(g: SliceGraph) -> SliceGraph:
    """Reverse every edge, keeping node set and indexing."""
    at = g.adjacency.T.tocsr()
    at.sort_indices()
    at.indptr = at.indptr.astype(np.int64)
    at.indices = at.indices.astype(np.int64)
    return SliceGraph(at, g.ids)


def save_graph(g: SliceGraph, fh: IO[bytes]) -> None:
    """Write the binary CSR dump (see README for the layout)."""
    a = g.adjacency
    header = {
        "version": GRAPH_FORMAT_VERSION,
        "n": g.node_count,
        "nnz": g.edge_count,
        "indptr": "<i8",
        "indices": "<i8",
        "data": "<f8",
    }
    fh.write(GRAPH_MAGIC)
    fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
    fh.write(np.ascontiguousarray(a.indptr, dtype="<i8").tobytes())
    fh.write(np.ascontiguousarray(a.indices, dtype="<i8").tobytes())
    fh.write(np.ascontiguousarray(a.data, dtype="<f8").tobytes())
    fh.write("\n".join(g.ids).encode("utf-8"))


def load_graph(fh: IO[bytes]) -> SliceGraph:
    magic = fh.read(len(GRAPH_MAGIC))
    if magic != GRAPH_MAGIC:
        raise ValueError("not a graph dump (bad magic)")
    header = json.loads(fh.readline())
    if header.get("version") != GRAPH_FORMAT_VERSION:
        raise ValueError(f"unsupported graph dump version {header.get('version')}")
    n, nnz = header["n"], header["nnz"]
    indptr = np.frombuffer(fh.read(8 * (n + 1)), dtype="<i8").astype(np.int64)
    indices = np.frombuffer(fh.read(8 * nnz), dtype="<i8").astype(np.int64)
    data = np.frombuffer(fh.read(8 * nnz), dtype="<f8").astype(np.float64)
    rest = fh.read().decode("utf-8")
    ids = tuple(rest.split("\n")) if n else ()
    if len(ids) != n:
        raise ValueError(f"graph dump lists {len(ids)} ids, header says {n}")
    a = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    return SliceGraph(a, ids)
