"""Seeded simulation harness: sample, run methods, score, write CSV + JSON summary.

Config files are flat ``key = value`` lines.  Values are JSON literals
(numbers, ``"strings"``, ``[arrays]``, ``true``/``false``); a bare word is
read as a string.  ``#`` starts a comment line.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .btsbm import BtsbmParams, build_B, membership, sample_adjacency
from .hcd import (BlockModel, StoppingRule, fit_sbm, hcd_sign, hcd_spec, kway_rsc,
                  tree_from_probability_matrix)
from .metrics import mega_accuracy, nmi, prob_matrix_error, tree_similarity_error
from .models import derive_model_params, planted_partition, unbalanced_example

METHODS = ("hcd_sign", "hcd_spec", "kway_rsc")
METRICS = ("nmi", "sim_error", "acc1", "acc2", "phat_error", "khat")
SWEEPS = {"btsbm": ("K", "avg_degree"), "planted": ("K", "avg_degree"),
          "unbalanced": ("example",)}


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key.isidentifier():
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        try:
            cfg[key] = json.loads(val)
        except json.JSONDecodeError:
            if not val or any(ch in val for ch in "[]{}\","):
                raise ConfigError(f"line {lineno}: cannot parse value {val!r}") from None
            cfg[key] = val
    return cfg


@dataclass
class ExperimentConfig:
    model: str = "btsbm"
    n: int = 3200
    sweep: str = "K"
    values: list = field(default_factory=lambda: [4, 8, 16])
    K: int = 8
    avg_degree: float = 50.0
    out_in: float = 0.15
    profile: str = "geometric"
    ratio_level: str | None = None      # default: "leaf", or "root" for the unbalanced model
    replications: int = 20
    seed: int = 0
    methods: list = field(default_factory=lambda: list(METHODS))
    stopper: str = "nb"
    metrics: list = field(default_factory=lambda: list(METRICS))
    tau: float = 0.1

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self):
        if self.model not in SWEEPS:
            raise ConfigError(f"model must be one of {sorted(SWEEPS)}")
        if self.sweep not in SWEEPS[self.model]:
            raise ConfigError(f"model {self.model!r} sweeps over {SWEEPS[self.model]}")
        if not isinstance(self.values, list) or not self.values:
            raise ConfigError("values must be a nonempty array")
        if int(self.replications) < 1:
            raise ConfigError("replications must be >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}")
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ConfigError(f"unknown metrics {bad}")
        try:
            StoppingRule.parse(self.stopper)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def params_for(self, value) -> BtsbmParams:
        if self.model == "unbalanced":
            return unbalanced_example(value, self.n, self.avg_degree, self.out_in,
                                      self.ratio_level or "root")
        K = int(value) if self.sweep == "K" else int(self.K)
        deg = float(value) if self.sweep == "avg_degree" else float(self.avg_degree)
        if self.model == "planted":
            return planted_partition(K, self.n, deg, self.out_in)
        return derive_model_params(K, self.n, deg, self.out_in, self.profile,
                                   self.ratio_level or "leaf")


def derived_seed(master: int, *key: int) -> int:
    ss = np.random.SeedSequence(master, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _score(metrics, params, truth, est_tree, est_labels, g):
    out = {}
    if "nmi" in metrics:
        out["nmi"] = nmi(est_labels, truth.labeling())
    if "sim_error" in metrics:
        out["sim_error"] = tree_similarity_error(est_tree, truth)
    for q, key in ((1, "acc1"), (2, "acc2")):
        if key in metrics:
            out[key] = mega_accuracy(est_tree, truth, q) if truth.balanced_to() >= q else math.nan
    if "phat_error" in metrics:
        P = BlockModel(build_B(params), membership(params))
        out["phat_error"] = prob_matrix_error(fit_sbm(g, est_labels), P)
    if "khat" in metrics:
        out["khat"] = float(len(est_tree.leaves))
    return out


def run_replication(cfg: ExperimentConfig, params: BtsbmParams, seed: int) -> list:
    """One sampled graph, every configured method; returns (method, scores, ms, error)."""
    g, _, truth = sample_adjacency(params, seed)
    stopper = StoppingRule.parse(cfg.stopper)
    results = []
    spec = None
    for method in cfg.methods:
        t0 = time.perf_counter()
        try:
            if method == "hcd_sign":
                r = hcd_sign(g, stopper, seed=seed)
                tree, lab = r.tree, r.labels
            elif method == "hcd_spec":
                spec = spec or hcd_spec(g, stopper, cfg.tau, seed=seed)
                tree, lab = spec.tree, spec.labels
            else:
                # the baseline uses the number of communities found by HCD-Spec
                spec = spec or hcd_spec(g, stopper, cfg.tau, seed=seed)
                kw = kway_rsc(g, spec.n_communities, cfg.tau, seed=seed)
                lab = kw.labels
                tree = tree_from_probability_matrix(fit_sbm(g, lab).B, lab)
            scores = _score(cfg.metrics, params, truth, tree, lab, g)
            err = ""
        except Exception as exc:  # recorded, the run continues
            scores = {m: math.nan for m in cfg.metrics}
            err = f"{type(exc).__name__}: {exc}"
        results.append((method, scores, 1000.0 * (time.perf_counter() - t0), err))
    return results


def run_experiment(cfg: ExperimentConfig, csv_path=None, json_path=None, progress=None):
    """Returns (rows, summary); rows are ordered by (sweep value, replication, method)."""
    rows = []
    for vi, value in enumerate(cfg.values):
        params = cfg.params_for(value)
        for rep in range(int(cfg.replications)):
            seed = derived_seed(cfg.seed, vi, rep)
            for method, scores, ms, err in run_replication(cfg, params, seed):
                row = {"method": method, "sweep": cfg.sweep, "value": value, "rep": rep,
                       "seed": seed}
                row.update({m: scores.get(m, math.nan) for m in cfg.metrics})
                row["ms"] = round(ms, 3)
                row["error"] = err
                rows.append(row)
            if progress:
                progress(value, rep)
    summary = summarize(cfg, rows)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            fh.write(rows_to_csv(cfg, rows))
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return rows, summary


def rows_to_csv(cfg: ExperimentConfig, rows, timing: bool = True) -> str:
    cols = ["method", "sweep", "value", "rep", "seed", *cfg.metrics]
    cols += ["ms"] if timing else []
    cols += ["error"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def summarize(cfg: ExperimentConfig, rows) -> dict:
    cells = []
    for value in cfg.values:
        for method in cfg.methods:
            sel = [r for r in rows if r["value"] == value and r["method"] == method]
            cell = {"value": value, "method": method, "n_reps": len(sel),
                    "failures": sum(bool(r["error"]) for r in sel)}
            for m in cfg.metrics:
                x = np.array([r[m] for r in sel], dtype=float)
                x = x[~np.isnan(x)]
                cell[m] = {"mean": float(x.mean()) if x.size else None,
                           "se": float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else None}
            cells.append(cell)
    conf = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    return {"config": conf, "cells": cells}


# Canned configurations for the standard simulation settings.
CANNED = {
    "hierarchy": dict(model="btsbm", sweep="K", values=[4, 8, 16, 32], methods=list(METHODS)),
    "flat": dict(model="planted", sweep="K", values=[16], methods=list(METHODS)),
    "unbalanced": dict(model="unbalanced", sweep="example", values=["example1", "example2"],
                       avg_degree=35.0, ratio_level="root", methods=["hcd_spec", "kway_rsc"]),
}
