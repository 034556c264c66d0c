"""Command-line entry point: generate, detect, experiment, bench."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from .btsbm import sample_adjacency
from .experiment import CANNED, ConfigError, ExperimentConfig, parse_config, run_experiment
from .graph import (EdgeListParseError, induced_subgraph, k_core, largest_connected_component,
                    read_edge_list, write_edge_list)
from .hcd import StoppingRule, hcd_sign, hcd_spec, kway_rsc
from .models import derive_model_params, planted_partition, unbalanced_example

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _model(args):
    if args.model == "unbalanced":
        return unbalanced_example(args.example, args.n, args.degree, args.out_in,
                                  args.ratio_level or "root")
    if args.model == "planted":
        return planted_partition(args.K, args.n, args.degree, args.out_in)
    return derive_model_params(args.K, args.n, args.degree, args.out_in, args.profile,
                               args.ratio_level or "leaf")


def cmd_generate(args) -> int:
    params = _model(args)
    g, _, tree = sample_adjacency(params, args.seed)
    with _open_out(args.output) as fh:
        write_edge_list(g, fh)
    if args.truth:
        truth = {"params": params.to_config(), "seed": args.seed,
                 "labels": tree.labeling().node_names(), "tree": tree.to_dict()}
        with open(args.truth, "w") as fh:
            json.dump(truth, fh, sort_keys=True)
            fh.write("\n")
    print(f"wrote {g.n} nodes, {g.n_edges} edges", file=sys.stderr)
    return EXIT_OK


def cmd_detect(args) -> int:
    g = read_edge_list(args.edges)
    if args.lcc:
        g = induced_subgraph(g, largest_connected_component(g))
    if args.core is not None:
        g = induced_subgraph(g, k_core(g, args.core))
    if g.n == 0:
        raise RuntimeError("graph is empty after preprocessing")
    try:
        stopper = StoppingRule.parse(args.stopper)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    run = hcd_spec if args.method == "hcd_spec" else hcd_sign
    kw = {"tau": args.tau} if args.method == "hcd_spec" else {}
    res = run(g, stopper, seed=args.seed, min_size=args.min_size, **kw)
    out = res.to_dict(g.node_ids)
    out["method"] = args.method
    out["n_nodes"] = g.n
    out["n_edges"] = g.n_edges
    with _open_out(args.output) as fh:
        json.dump(out, fh, sort_keys=True)
        fh.write("\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node", "community"])
            w.writerows(zip(g.node_ids, res.labels.node_names()))
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.config:
        with open(args.config) as fh:
            raw = parse_config(fh.read())
    else:
        raw = dict(CANNED[args.canned])
    if args.replications is not None:
        raw["replications"] = args.replications
    cfg = ExperimentConfig.from_dict(raw)

    def progress(value, rep):
        if args.verbose:
            print(f"{cfg.sweep}={value} rep={rep} done", file=sys.stderr)

    _, summary = run_experiment(cfg, args.csv, args.json, progress)
    if not args.json:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return EXIT_OK


def bench(n, Ks, degree, reps, seed=0, out_in=0.15):
    """Time HCD-Spec (NB stopping) against K-way RSC given the true K.

    Returns (run rows, per-level rows).  Work is reported both as raw
    mat-vec counts and as full-graph equivalents, i.e. edge+vertex visits
    divided by ``nnz(A) + n``.
    """
    runs, levels = [], []
    for K in Ks:
        params = derive_model_params(K, n, degree, out_in)
        for rep in range(reps):
            s = seed + rep
            g, _, _ = sample_adjacency(params, s)
            unit = g.nnz + g.n
            t0 = time.perf_counter()
            r = hcd_spec(g, seed=s)
            t_hcd = time.perf_counter() - t0
            t0 = time.perf_counter()
            kw = kway_rsc(g, K, seed=s)
            t_kw = time.perf_counter() - t0
            d = r.diagnostics.values()
            split_mv = sum(x.split_matvecs for x in d)
            split_vi = sum(x.split_visits for x in d)
            stop_mv = sum(x.stop_matvecs for x in d)
            stop_vi = sum(x.stop_visits for x in d)
            runs.append({"K": K, "rep": rep, "method": "hcd_spec", "seconds": t_hcd,
                         "khat": r.n_communities, "split_matvecs": split_mv,
                         "split_equiv": split_vi / unit, "stop_matvecs": stop_mv,
                         "stop_equiv": stop_vi / unit, "nnz": g.nnz})
            runs.append({"K": K, "rep": rep, "method": "kway_rsc", "seconds": t_kw,
                         "khat": K, "split_matvecs": kw.matvecs,
                         "split_equiv": kw.visits / unit, "stop_matvecs": 0,
                         "stop_equiv": 0.0, "nnz": g.nnz})
            for row in r.level_costs():
                levels.append({"K": K, "rep": rep, "level": row["level"], "nodes": row["nodes"],
                               "level_nnz": row["nnz"], "total_nnz": g.nnz,
                               "within_bound": row["nnz"] <= g.nnz,
                               "matvecs": row["matvecs"], "visits": row["visits"]})
    return runs, levels


def _write_rows(path, rows):
    if not rows:
        return
    with _open_out(path) as fh:
        w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})


def cmd_bench(args) -> int:
    runs, levels = bench(args.n, args.K, args.degree, args.reps, args.seed)
    _write_rows(args.csv, runs)
    if args.levels:
        _write_rows(args.levels, levels)
    return EXIT_OK


class _open_out:
    """``-`` (or None) means stdout."""

    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path in (None, "-"):
            self.fh = None
            return sys.stdout
        self.fh = open(self.path, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hcdtree", description="Hierarchical community detection by recursive bi-partitioning.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="sample a BTSBM graph as an edge list")
    gen.add_argument("--model", choices=["btsbm", "planted", "unbalanced"], default="btsbm")
    gen.add_argument("--K", type=int, default=8)
    gen.add_argument("--n", type=int, default=3200)
    gen.add_argument("--degree", type=float, default=50.0)
    gen.add_argument("--out-in", type=float, default=0.15)
    gen.add_argument("--ratio-level", choices=["leaf", "root"],
                     help="where the out-in ratio is measured (default leaf; root for unbalanced)")
    gen.add_argument("--profile", choices=["geometric", "arithmetic"], default="geometric")
    gen.add_argument("--example", choices=["example1", "example2"], default="example1")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", default="-")
    gen.add_argument("--truth", help="write true labels and tree as JSON")
    gen.set_defaults(func=cmd_generate)

    det = sub.add_parser("detect", help="run HCD on an edge-list file")
    det.add_argument("edges")
    det.add_argument("--method", choices=["hcd_spec", "hcd_sign"], default="hcd_spec")
    det.add_argument("--stopper", default="nb", help="nb, depth:D, size:S or a '+' combination")
    det.add_argument("--tau", type=float, default=0.1)
    det.add_argument("--seed", type=int, default=0)
    det.add_argument("--min-size", type=int, default=4)
    det.add_argument("--lcc", action="store_true", help="keep only the largest connected component")
    det.add_argument("--core", type=int, help="keep only the k-core (after --lcc)")
    det.add_argument("-o", "--output", default="-")
    det.add_argument("--csv", help="also write node,community CSV")
    det.set_defaults(func=cmd_detect)

    exp = sub.add_parser("experiment", help="run a simulation config")
    src = exp.add_mutually_exclusive_group(required=True)
    src.add_argument("-c", "--config")
    src.add_argument("--canned", choices=sorted(CANNED))
    exp.add_argument("--replications", type=int)
    exp.add_argument("--csv")
    exp.add_argument("--json")
    exp.add_argument("-v", "--verbose", action="store_true")
    exp.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bench", help="HCD vs K-way timing and eigensolver work")
    b.add_argument("--n", type=int, default=3200)
    b.add_argument("--K", type=int, nargs="+", default=[4, 16, 64])
    b.add_argument("--degree", type=float, default=50.0)
    b.add_argument("--reps", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv", default="-")
    b.add_argument("--levels", help="per-level cost CSV")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"hcdtree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, EdgeListParseError, ValueError, RuntimeError) as exc:
        print(f"hcdtree: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
