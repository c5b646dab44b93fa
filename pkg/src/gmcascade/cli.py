"""Command-line driver: ingestion, ranking, contagion, REGOMAX, analytics.

Every command writes into ``--out`` atomically. TSV outputs start with a
``# config:`` line and JSON outputs carry a ``config`` key holding the
full effective settings. Settings come from, in increasing precedence,
built-in defaults, a JSON ``--config`` file and command-line flags.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    DEFAULT_CELLS,
    crisis_map,
    density_grid,
    integrated_fraction,
    powerlaw_fit,
    topk_occurrence,
)
from .contagion import DEFAULT_TAU_MAX, default_kappa_grid, kappa_sweep, run_contagion
from .google import DEFAULT_ALPHA, DEFAULT_MAX_ITER, DEFAULT_TOL, build_operator, rank_pair
from .ingest import (
    GRAPH_MAGIC,
    SliceGraph,
    build_graph,
    load_graph,
    parse_transactions,
    quarter_bounds,
    save_graph,
    slice_by_quarter,
)
from .output import atomic_open, write_json, write_matrix_tsv, write_tsv
from .regomax import DEFAULT_NR, DEFAULT_SERIES_TOL, reduced_google, top_pagerank_selection
from .synth import SynthParams, generate

log = logging.getLogger("gmcascade")


class CommandError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- loading

def _records(path: Path):
    with open(path, "rb") as fh:
        yield from parse_transactions(fh)


def _is_graph_dump(path: Path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(GRAPH_MAGIC)) == GRAPH_MAGIC


def load_slice(cfg: argparse.Namespace) -> SliceGraph:
    if cfg.input is None:
        raise CommandError("--input is required", 2)
    path = Path(cfg.input)
    if not path.is_file():
        raise CommandError(f"input file not found: {path}", 2)
    if _is_graph_dump(path):
        if cfg.year is not None:
            raise CommandError("a graph dump cannot be sliced by quarter", 2)
        with open(path, "rb") as fh:
            return load_graph(fh)
    records = _records(path)
    if cfg.year is not None:
        if cfg.quarter is None:
            raise CommandError("--year requires --quarter", 2)
        records = slice_by_quarter(records, cfg.year, cfg.quarter)
    g = build_graph(records, weight=cfg.weight, drop_self_loops=not cfg.keep_self_loops)
    if g.node_count == 0:
        raise CommandError("empty graph: no transactions in the selected slice")
    return g


def effective_config(cfg: argparse.Namespace) -> dict:
    out = {k: v for k, v in sorted(vars(cfg).items()) if k not in ("func", "config", "verbose")}
    out["version"] = __version__
    return out


def _out(cfg, name: str) -> Path:
    return Path(cfg.out) / name


def _kappa_label(kappa: float) -> str:
    return f"{kappa:.4f}"


# ---------------------------------------------------------------- commands

def cmd_ingest(cfg):
    g = load_slice(cfg)
    with atomic_open(_out(cfg, "graph.csr"), "wb") as fh:
        save_graph(g, fh)
    summary = {"config": effective_config(cfg), "nodes": g.node_count, "edges": g.edge_count,
               "total_weight": float(g.adjacency.data.sum())}
    if cfg.year is not None:
        summary["slice"] = {"year": cfg.year, "quarter": cfg.quarter,
                            "bounds_utc": list(quarter_bounds(cfg.year, cfg.quarter))}
    write_json(_out(cfg, "ingest.json"), summary)


def cmd_rank(cfg):
    g = load_slice(cfg)
    p, ps = rank_pair(g, cfg.alpha, cfg.tol, cfg.max_iter)
    k_pos, ks_pos = p.positions(), ps.positions()
    rows = ((g.ids[u], k_pos[u], p.probs[u], ks_pos[u], ps.probs[u]) for u in p.index)
    conf = effective_config(cfg)
    write_tsv(_out(cfg, "ranks.tsv"), ["node_id", "K", "P", "K_star", "P_star"], rows, conf)
    write_json(_out(cfg, "rank_summary.json"), {
        "config": conf,
        "alpha": cfg.alpha,
        "nodes": g.node_count,
        "edges": g.edge_count,
        "pagerank": {"iterations": p.iterations, "residual": p.residual, "converged": p.converged},
        "cheirank": {"iterations": ps.iterations, "residual": ps.residual, "converged": ps.converged},
    })


def _kappas(cfg) -> np.ndarray:
    if cfg.kappas:
        return np.array([float(x) for x in cfg.kappas.split(",")])
    return default_kappa_grid(cfg.kappa_min, cfg.kappa_max, cfg.kappa_step)


def cmd_contagion(cfg):
    g = load_slice(cfg)
    conf = effective_config(cfg)
    taus = range(1, cfg.tau_max + 1)
    sweep = kappa_sweep(g, _kappas(cfg), taus, cfg.alpha, cfg.tol, cfg.max_iter, cfg.threads)
    write_tsv(_out(cfg, "sweep.tsv"), ["kappa", "tau", "W_c"], sweep.rows(), conf)
    for state in sweep.states:
        label = _kappa_label(state.kappa)
        write_tsv(
            _out(cfg, f"run_kappa{label}.tsv"),
            ["tau", "W_c", "n_new_bankrupt"],
            ((t + 1, w, c) for t, (w, c) in enumerate(zip(state.history, state.new_counts))),
            conf,
        )
        order = np.nonzero(state.bankrupt_tau)[0]
        order = order[np.argsort(state.bankrupt_tau[order], kind="stable")]
        write_tsv(
            _out(cfg, f"bankrupt_kappa{label}.tsv"),
            ["node_id", "tau"],
            ((g.ids[u], state.bankrupt_tau[u]) for u in order),
            conf,
        )
    violations = sweep.kappa_monotonicity_violations()
    write_json(_out(cfg, "contagion_summary.json"), {
        "config": conf,
        "nodes": g.node_count,
        "tau_max": cfg.tau_max,
        "kappa_monotonicity_violations": [list(v) for v in violations],
    })
    if violations:
        log.info("W_c rises with kappa at %d (kappa, tau) points", len(violations))


def cmd_regomax(cfg):
    g = load_slice(cfg)
    op = build_operator(g, cfg.alpha)
    if cfg.nodes:
        id_map = g.id_map
        try:
            sel = np.array([id_map[u] for u in cfg.nodes.split(",")], dtype=np.int64)
        except KeyError as exc:
            raise CommandError(f"unknown node id {exc.args[0]!r}", 2) from None
    else:
        p, _ = rank_pair(g, cfg.alpha, cfg.tol, cfg.max_iter)
        sel = top_pagerank_selection(p.index, min(cfg.nr, g.node_count))
    rm = reduced_google(op, sel, cfg.series_tol)
    labels = [g.ids[u] for u in sel]
    conf = effective_config(cfg)
    blocks = rm.blocks()
    write_json(_out(cfg, "regomax.json"), {
        "config": conf,
        "nodes": labels,
        "lambda_c": rm.lambda_c,
        "series_terms": rm.series_terms,
        "weights": rm.weights(),
        "matrices": {name: m for name, m in blocks.items()},
    })
    for name, m in blocks.items():
        write_matrix_tsv(_out(cfg, f"{name}.tsv"), m, labels, conf)


def cmd_density(cfg):
    g = load_slice(cfg)
    p, ps = rank_pair(g, cfg.alpha, cfg.tol, cfg.max_iter)
    conf = effective_config(cfg)
    grid = density_grid(p.index, ps.index, cfg.cells)
    write_matrix_tsv(_out(cfg, "density.tsv"), grid.cells, config=conf)
    sidecar = {"config": conf, "mode": "count", "cells": cfg.cells, "bin_edges": grid.edges,
               "rows": "PageRank K bins", "columns": "CheiRank K* bins"}
    write_json(_out(cfg, "density.json"), sidecar)
    if cfg.kappa is None:
        return
    state = run_contagion(g, cfg.kappa, cfg.tau_max, cfg.alpha, cfg.tol, cfg.max_iter)
    label = _kappa_label(cfg.kappa)
    for tau in range(1, cfg.tau_max + 1):
        bankrupt = (state.bankrupt_tau > 0) & (state.bankrupt_tau <= tau)
        cm = crisis_map(p.index, ps.index, bankrupt, cfg.cells)
        write_matrix_tsv(_out(cfg, f"crisis_kappa{label}_tau{tau}.tsv"), cm.cells, config=conf)
    write_json(_out(cfg, f"crisis_kappa{label}.json"), dict(sidecar, mode="crisis", empty_cell="nan"))


def cmd_fit(cfg):
    g = load_slice(cfg)
    p, ps = rank_pair(g, cfg.alpha, cfg.tol, cfg.max_iter)
    conf = effective_config(cfg)
    state = run_contagion(g, cfg.kappa, cfg.tau_max, cfg.alpha, cfg.tol, cfg.max_iter)
    k = np.arange(1, g.node_count + 1)
    result = {"config": conf, "kappa": cfg.kappa}
    for name, rank in (("K", p), ("K_star", ps)):
        w = integrated_fraction(state.bankrupt, rank.index)
        write_tsv(_out(cfg, f"integrated_{name}.tsv"), [name, "W_c"], zip(k, w), conf)
        try:
            fit = powerlaw_fit(k, w, (cfg.fit_min, cfg.fit_max))
        except ValueError as exc:
            result[name] = {"error": str(exc)}
            continue
        result[name] = {"mu": fit.mu, "beta": fit.beta, "stderr_mu": fit.stderr_mu,
                        "stderr_beta": fit.stderr_beta, "fit_range": fit.fit_range,
                        "points": fit.points}
    write_json(_out(cfg, "fit.json"), result)


def _quarters_present(records) -> list[tuple[int, int]]:
    from datetime import datetime, timezone

    seen = set()
    for r in records:
        d = datetime.fromtimestamp(r.timestamp, tz=timezone.utc)
        seen.add((d.year, (d.month - 1) // 3 + 1))
    return sorted(seen)


def cmd_occurrence(cfg):
    if cfg.input is None or not Path(cfg.input).is_file():
        raise CommandError(f"input file not found: {cfg.input}", 2)
    records = list(_records(Path(cfg.input)))
    if cfg.slices == "all":
        quarters = _quarters_present(records)
    else:
        quarters = []
        for token in cfg.slices.split(","):
            year, q = token.strip().upper().split("Q")
            quarters.append((int(year), int(q)))
    conf = effective_config(cfg)
    top_p, top_c = {}, {}
    for year, q in quarters:
        g = build_graph(slice_by_quarter(records, year, q), cfg.weight, not cfg.keep_self_loops)
        if g.node_count == 0:
            continue
        p, ps = rank_pair(g, cfg.alpha, cfg.tol, cfg.max_iter)
        label = f"{year}Q{q}"
        top_p[label] = [g.ids[u] for u in p.index[: cfg.top_k]]
        top_c[label] = [g.ids[u] for u in ps.index[: cfg.top_k]]
    for name, rankings in (("pagerank", top_p), ("cheirank", top_c)):
        table = topk_occurrence(rankings, cfg.top_k, cfg.m)
        write_tsv(
            _out(cfg, f"occurrence_{name}.tsv"),
            ["user", "occurrences"] + list(table.labels),
            ([u, c] + list(pos) for u, c, pos in table.rows()),
            conf,
        )


def cmd_synth(cfg):
    params = SynthParams(nodes=cfg.nodes, edges=cfg.edges, exponent=cfg.exponent,
                         year=cfg.year or 2013, quarter=cfg.quarter or 1)
    tx = generate(params, cfg.seed)
    with atomic_open(_out(cfg, "synth.csv")) as fh:
        tx.write(fh)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults")
    common.add_argument("--input", help="edge-list file or graph dump")
    common.add_argument("--year", type=int)
    common.add_argument("--quarter", type=int, choices=(1, 2, 3, 4))
    common.add_argument("--weight", choices=("amount", "count"), default="amount")
    common.add_argument("--keep-self-loops", action="store_true")
    common.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gmcascade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    add("ingest", cmd_ingest, "parse and slice an edge list, write a graph dump")
    add("rank", cmd_rank, "PageRank and CheiRank table")

    p = add("contagion", cmd_contagion, "bankruptcy cascades over a kappa grid")
    p.add_argument("--kappa-min", type=float, default=0.0)
    p.add_argument("--kappa-max", type=float, default=1.0)
    p.add_argument("--kappa-step", type=float, default=0.01)
    p.add_argument("--kappas", help="explicit comma-separated kappa list")
    p.add_argument("--tau-max", type=int, default=DEFAULT_TAU_MAX)

    p = add("regomax", cmd_regomax, "reduced Google matrix of a node subset")
    p.add_argument("--nr", type=int, default=DEFAULT_NR, help="top PageRank nodes to select")
    p.add_argument("--nodes", help="explicit comma-separated node ids")
    p.add_argument("--series-tol", type=float, default=DEFAULT_SERIES_TOL)

    p = add("density", cmd_density, "(K, K*) density grid and optional crisis maps")
    p.add_argument("--cells", type=int, default=DEFAULT_CELLS)
    p.add_argument("--kappa", type=float, help="also write crisis maps for this threshold")
    p.add_argument("--tau-max", type=int, default=DEFAULT_TAU_MAX)

    p = add("fit", cmd_fit, "integrated bankrupt fractions and power-law fits")
    p.add_argument("--kappa", type=float, default=0.15)
    p.add_argument("--tau-max", type=int, default=DEFAULT_TAU_MAX)
    p.add_argument("--fit-min", type=float, default=10)
    p.add_argument("--fit-max", type=float, default=1e5)

    p = add("occurrence", cmd_occurrence, "most frequent users of per-quarter top-k lists")
    p.add_argument("--slices", default="all", help="'all' or e.g. 2012Q1,2012Q2")
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--m", type=int, default=20)

    p = add("synth", cmd_synth, "seeded synthetic scale-free edge list")
    p.add_argument("--nodes", type=int, default=SynthParams.nodes)
    p.add_argument("--edges", type=int, default=SynthParams.edges)
    p.add_argument("--exponent", type=float, default=SynthParams.exponent)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                overrides = json.load(fh)
        except FileNotFoundError:
            parser.exit(2, f"gmcascade: config file not found: {args.config}\n")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(overrides) - known
        if unknown:
            parser.exit(2, f"gmcascade: unknown config keys: {', '.join(sorted(unknown))}\n")
        subparser.set_defaults(**overrides)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CommandError as exc:
        print(f"gmcascade: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"gmcascade: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
