"""Atomic, deterministic writers for the TSV/JSON analytics outputs."""
from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


@contextmanager
def atomic_open(path: str | os.PathLike, mode: str = "w"):
    """Write to a temporary sibling and rename over ``path`` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"encoding": "utf-8", "newline": "\n"})) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if np.isnan(x) else x
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload: dict) -> None:
    with atomic_open(path) as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_tsv(
    path,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    config: dict | None = None,
) -> None:
    """TSV with an optional ``# config:`` line recording the run settings."""
    with atomic_open(path) as fh:
        if config is not None:
            fh.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(fmt(x) for x in row) + "\n")


def write_matrix_tsv(path, matrix: np.ndarray, labels: Sequence[str] | None = None, config: dict | None = None) -> None:
    """Dense matrix dump; the first column and header row carry labels."""
    matrix = np.asarray(matrix)
    if labels is None:
        labels = [str(k) for k in range(matrix.shape[1])]
        row_labels = [str(k) for k in range(matrix.shape[0])]
    else:
        row_labels = labels
    write_tsv(
        path,
        [""] + list(labels),
        ([row_labels[a]] + list(matrix[a]) for a in range(matrix.shape[0])),
        config,
    )


def read_tsv(path) -> tuple[list[str], list[list[str]]]:
    """Read a TSV written by :func:`write_tsv`, skipping comment lines."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    header = lines[0].split("\t")
    return header, [ln.split("\t") for ln in lines[1:]]
