import csv
import io
import json
import math

import pytest

from hcdtree.experiment import (CANNED, ConfigError, ExperimentConfig, derived_seed,
                                parse_config, rows_to_csv, run_experiment)


def _small(**kw):
    base = dict(model="btsbm", n=256, sweep="K", values=[4], avg_degree=30.0,
                replications=1, seed=3)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_parse_config_grammar():
    text = """
    # comment
    model = btsbm
    values = [4, 8]
    n = 800
    out_in = 0.2
    methods = ["hcd_spec"]
    """
    cfg = parse_config(text)
    assert cfg == {"model": "btsbm", "values": [4, 8], "n": 800, "out_in": 0.2,
                   "methods": ["hcd_spec"]}
    for bad in ("novalue", "x = [1,", "1x = 3", "x ="):
        with pytest.raises(ConfigError):
            parse_config(bad)


@pytest.mark.parametrize("kw", [dict(model="nope"), dict(sweep="example"), dict(values=[]),
                                dict(replications=0), dict(methods=["x"]),
                                dict(metrics=["acc9"]), dict(stopper="foo"),
                                dict(colour="red")])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        _small(**kw)


def test_one_replication_gives_one_row_per_method():
    rows, summary = run_experiment(_small())
    assert [r["method"] for r in rows] == ["hcd_sign", "hcd_spec", "kway_rsc"]
    assert all(r["error"] == "" for r in rows)
    cell = summary["cells"][1]
    assert cell["method"] == "hcd_spec" and cell["n_reps"] == 1
    assert cell["nmi"]["mean"] == pytest.approx(rows[1]["nmi"]) and cell["nmi"]["se"] is None


def test_rerun_is_identical_apart_from_timing(tmp_path):
    cfg = _small(replications=2)
    a, _ = run_experiment(cfg, tmp_path / "a.csv", tmp_path / "a.json")
    b, _ = run_experiment(cfg)
    assert rows_to_csv(cfg, a, timing=False) == rows_to_csv(cfg, b, timing=False)
    with open(tmp_path / "a.csv") as fh:
        got = list(csv.DictReader(fh))
    assert len(got) == 6 and "ms" in got[0]
    assert json.loads((tmp_path / "a.json").read_text())["config"]["seed"] == 3


def test_seeds_differ_by_replication():
    assert derived_seed(0, 0, 0) != derived_seed(0, 0, 1) != derived_seed(0, 1, 0)
    assert derived_seed(5, 2, 3) == derived_seed(5, 2, 3)


def test_failures_become_nan_rows(monkeypatch):
    import hcdtree.experiment as ex

    def boom(*a, **k):
        raise RuntimeError("solver exploded")
    monkeypatch.setattr(ex, "hcd_sign", boom)
    rows, summary = run_experiment(_small())
    bad = rows[0]
    assert bad["method"] == "hcd_sign" and "exploded" in bad["error"]
    assert math.isnan(bad["nmi"])
    assert summary["cells"][0]["failures"] == 1 and summary["cells"][0]["nmi"]["mean"] is None
    assert rows[1]["error"] == ""


def test_canned_configs_validate():
    for name, raw in CANNED.items():
        ExperimentConfig.from_dict(dict(raw))


def test_unbalanced_model_skips_undefined_accuracy():
    cfg = ExperimentConfig.from_dict(dict(CANNED["unbalanced"], replications=1, n=3200,
                                          values=["example2"], methods=["hcd_spec"]))
    rows, _ = run_experiment(cfg)
    # example2 is balanced to level 2, so both accuracies are defined
    assert not math.isnan(rows[0]["acc2"]) and rows[0]["khat"] >= 2
    assert rows_to_csv(cfg, rows).count("\n") == 2
