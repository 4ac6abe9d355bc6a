import json

import pytest
import yaml

from cdbench.metrics import MetricRow
from cdbench.runner import cli
from cdbench.runner.config import ConfigErrors, config_hash, load_config, validate_config
from cdbench.runner.matrix import plan_cells, run_matrix, sub_seed
from cdbench.runner.report import CellRecord, ExperimentReport, emit_report, from_json, to_csv, to_json

SMALL_SOCIAL = {"kind": "social_ratings", "params": {"n_users": 120, "n_items": 150, "n_blocks": 4}}
SMALL_ANOMALY = {"kind": "labelled_anomalies", "params": {"n_nodes": 200, "n_anomalies": 30, "n_blocks": 4}}


def small_config(**tasks):
    return {
        "seed": 3,
        "datasets": [
            {"name": "social", "generator": SMALL_SOCIAL},
            {"name": "anom", "generator": SMALL_ANOMALY},
        ],
        "tasks": tasks,
    }


# ------------------------------------------------------------------ config


def test_validate_fills_defaults():
    cfg = validate_config(small_config(recommend={}, trust={"n_pos": 50, "n_neg": 25}))
    assert cfg["tasks"]["recommend"]["folds"] == 5
    assert cfg["tasks"]["recommend"]["datasets"] == ["social"]
    assert cfg["tasks"]["trust"]["thresholds"]["louvain"] == 0.45
    assert cfg["cache"] == {"enabled": True, "spot_check": True}


def test_validate_collects_every_error(tmp_path):
    raw = {
        "seed": -1,
        "bogus": 1,
        "datasets": [{"name": "d", "graph": "missing.txt"}],
        "tasks": {"recommend": {"algorithms": ["louvain", "nope"], "folds": 1}},
        "quality": {"algorithms": ["louvain", "bigclam"], "metrics": ["modularity"]},
        "base_dir": str(tmp_path),
    }
    with pytest.raises(ConfigErrors) as exc:
        validate_config(raw)
    errs = "\n".join(exc.value.errors)
    for fragment in (
        "seed:", "bogus: unknown field", "datasets[0].graph: file not found", "'nope' is not one of",
        "tasks.recommend.folds", "quality.algorithms[1]: modularity needs a partition", "tasks.recommend.datasets",
    ):
        assert fragment in errs
    assert len(exc.value.errors) >= 7


def test_trust_needs_directed_graph(tmp_path):
    (tmp_path / "g.txt").write_text("a b\n")
    (tmp_path / "r.txt").write_text("a x 3\n")
    raw = {
        "datasets": [{"name": "d", "graph": "g.txt", "ratings": "r.txt"}],
        "tasks": {"trust": {"kinds": ["indegree"]}},
        "base_dir": str(tmp_path),
    }
    with pytest.raises(ConfigErrors) as exc:
        validate_config(raw)
    assert any("directed" in e for e in exc.value.errors)


def test_load_config_yaml_and_hash(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(small_config(anomaly={})))
    cfg = validate_config(load_config(path))
    moved = dict(cfg, out_dir="elsewhere", jobs=4)
    assert config_hash(cfg) == config_hash(moved)
    assert config_hash(cfg) != config_hash(dict(cfg, seed=4))
    with pytest.raises(ConfigErrors):
        load_config(tmp_path / "absent.yaml")


def test_sub_seed_stable():
    assert sub_seed(1, "a", "b") == sub_seed(1, "a", "b")
    assert sub_seed(1, "a", "b") != sub_seed(2, "a", "b")
    assert 0 <= sub_seed(0, "x") < 2**32


# ------------------------------------------------------------------ matrix


def test_recommend_cardinality(tmp_path):
    raw = small_config(recommend={
        "algorithms": ["louvain", "bigclam"], "kinds": ["degree", "betweenness", "closeness"], "folds": 2,
        "train": {"epochs": 3},
    })
    cfg = validate_config(raw)
    cells = plan_cells(cfg)
    assert len(cells) == 6
    report, _ = run_matrix(cfg, tmp_path)
    assert not report.failed
    means = [r for r in report.rows if r.fold == "mean"]
    assert len(means) == 12
    assert {r.metric for r in means} == {"rmse", "mae"}
    for c in cells:
        assert report.value("social", "recommend", c.algorithm, c.kind, "rmse") >= \
            report.value("social", "recommend", c.algorithm, c.kind, "mae")


def test_failed_cell_is_recorded_and_others_finish(tmp_path):
    raw = small_config(anomaly={"algorithms": ["louvain", "spectral"], "folds": 2, "rounds": 5})
    raw["algorithm_params"] = {"spectral": {"k": 100000}}
    report, _ = run_matrix(validate_config(raw), tmp_path)
    failed = {c.key for c in report.failed}
    assert failed == {"anom/anomaly/spectral/classifier", "anom/anomaly/spectral/linear"}
    assert report.value("anom", "anomaly", "louvain", "classifier", "accuracy") is not None
    assert "## Failed cells" in emit_report(report, "markdown")


def test_cache_hits_give_identical_reports(tmp_path):
    raw = small_config(anomaly={"algorithms": ["louvain", "label_propagation"], "folds": 2, "rounds": 5})
    cfg = validate_config(raw)
    first, _ = run_matrix(cfg, tmp_path)
    second, timings = run_matrix(cfg, tmp_path)
    assert to_json(first) == to_json(second)
    assert json.dumps(timings)  # timings stay serialisable
    uncached = validate_config(dict(raw, cache={"enabled": False}))
    third, _ = run_matrix(uncached, tmp_path / "fresh")
    assert to_csv(third) == to_csv(first)


# ------------------------------------------------------------------ report


def sample_report():
    rows = [
        MetricRow("d", "trust", "louvain", "degree", "all", "f1", 0.5),
        MetricRow("d", "trust", "bigclam", "random", "all", "f1", None),
        MetricRow("d", "recommend", "louvain", "degree", "mean", "rmse", 0.9),
    ]
    cells = [CellRecord("d/trust/louvain/degree", "ok", 1), CellRecord("d/trust/spectral/degree", "failed", 2, "boom")]
    return ExperimentReport(rows, cells, {"seed": 1})


def test_report_round_trip_and_formats():
    rep = sample_report()
    assert from_json(to_json(rep)) == rep
    csv_text = to_csv(rep)
    assert csv_text.splitlines()[0] == "dataset,task,algorithm,kind,fold,class_id,metric,value"
    assert "d,trust,bigclam,random,all,,f1,\n" in csv_text
    md = emit_report(rep, "markdown")
    assert "| **Non-Overlapping** |" in md and "| **Overlapping** |" in md
    assert "MaxDegree" in md and "BIGCLAM" in md
    assert "`d/trust/spectral/degree`: boom" in md
    with pytest.raises(ValueError):
        emit_report(rep, "xml")


def test_empty_report():
    empty = ExperimentReport()
    assert to_csv(empty) == "dataset,task,algorithm,kind,fold,class_id,metric,value\n"
    assert from_json(to_json(empty)) == empty


# ------------------------------------------------------------------ cli


def write_config(tmp_path, raw) -> str:
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_cli_exit_codes(tmp_path, capsys):
    ok = small_config(anomaly={"algorithms": ["louvain"], "folds": 2, "rounds": 5})
    assert cli.main(["bench", "--config", write_config(tmp_path, ok), "--out-dir", str(tmp_path / "a")]) == 0
    for name in ("report.json", "report.csv", "report.md", "timings.json", "config.resolved.json"):
        assert (tmp_path / "a" / name).is_file()

    partial = dict(ok, algorithm_params={"spectral": {"k": 100000}})
    partial["tasks"] = {"anomaly": {"algorithms": ["louvain", "spectral"], "folds": 2, "rounds": 5}}
    assert cli.main(["bench", "--config", write_config(tmp_path, partial), "--out-dir", str(tmp_path / "b")]) == 2

    bad = dict(ok, seed="x")
    assert cli.main(["bench", "--config", write_config(tmp_path, bad), "--out-dir", str(tmp_path / "c")]) == 1
    assert cli.main(["detect", str(tmp_path / "nothing.txt")]) == 1
    capsys.readouterr()


def test_cli_detect_report_and_synth(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    graph.write_text("0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n")
    assert cli.main(["detect", str(graph), "--algorithm", "louvain"]) == 0
    out = capsys.readouterr().out.split("\n")
    assert sorted(line for line in out if line) == ["0 1 2", "3 4 5"]

    assert cli.main(["centrality", str(graph), "--kind", "betweenness"]) == 0
    assert capsys.readouterr().out.startswith("node,score\n")

    run = tmp_path / "run"
    cfg = small_config(anomaly={"algorithms": ["louvain"], "folds": 2, "rounds": 5})
    assert cli.main(["bench", "--config", write_config(tmp_path, cfg), "--out-dir", str(run), "--format", "json"]) == 0
    printed = capsys.readouterr().out
    assert cli.main(["report", str(run / "report.json"), "--format", "json"]) == 0
    assert capsys.readouterr().out == printed

    assert cli.main(["synth", "anomaly", "--out-dir", str(tmp_path / "syn")]) == 0
    assert (tmp_path / "syn" / "graph.txt").is_file() and (tmp_path / "syn" / "labels.txt").is_file()
    assert cli.main([
        "anomaly", "--graph", str(tmp_path / "syn" / "graph.txt"), "--labels", str(tmp_path / "syn" / "labels.txt"),
        "--algorithms", "louvain", "--folds", "2", "--out-dir", str(tmp_path / "task"),
    ]) == 0
    capsys.readouterr()
