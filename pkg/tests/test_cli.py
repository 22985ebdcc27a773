import json
import subprocess
import sys
import time

import pytest

from driftlab.cli import main, parse_seeds
from driftlab.config import ConfigError, parse_config
from driftlab.pipeline import PipelineMode


def _write(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def _minimal(tmp_path, **overrides):
    doc = {
        "dataset": {"generator": {"n_records": 1000, "drift_at": [365], "noise": 0.1}},
        "featurizer": "bow",
        "learner": "nb",
        "detector": "none",
        "window_w": 100,
        "seed": 3,
        "output_dir": str(tmp_path / "out"),
    }
    doc.update(overrides)
    return doc


def test_config_defaults():
    cfg = parse_config({"dataset": {"generator": {}}})
    assert (cfg.featurizer, cfg.learner, cfg.detector) == ("tfidf", "arf", "adwin")
    assert cfg.mode is PipelineMode.RETRAIN_EXTRACTOR
    assert cfg.delay_days == [0] and not cfg.delay_is_list


@pytest.mark.parametrize("doc, where", [
    ({"dataset": {"generator": {"class_ratio": 1.5}}}, "class_ratio"),
    ({"dataset": {"generator": {}}, "colour": "red"}, "colour"),
    ({"dataset": {"generator": {}}, "learner": "svm"}, "learner"),
    ({"dataset": {"generator": {}}, "detector": "none", "mode": "static"}, "detector"),
    ({"dataset": {"traces": {}}, "learner": "arf"}, "iforest"),
    ({"dataset": {"generator": {}}, "delay_days": [0, 7, 7]}, "once"),
    ({"dataset": {"generator": {"drift_at": [900]}}}, "drift_at"),
    ({}, "dataset"),
])
def test_config_rejections(doc, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(doc)


def test_component_params_are_passed_through():
    cfg = parse_config({"dataset": {"generator": {}},
                        "learner": {"name": "arf", "params": {"n_trees": 3}},
                        "detector": {"name": "ddm", "params": {"min_samples": 50}}})
    assert cfg.learner_params == {"n_trees": 3}
    assert cfg.detector_params == {"min_samples": 50}


def test_parse_seeds():
    assert parse_seeds("0-3") == [0, 1, 2, 3]
    assert parse_seeds("5,1,2-3") == [1, 2, 3, 5]


def test_gen_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (a, b):
        assert main(["gen", "--n-records", "10000", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    n_mal = sum(json.loads(line)["label"] == "malicious" for line in a.read_text().splitlines())
    assert abs(n_mal - 1800) <= 18
    assert "malicious 1800" in capsys.readouterr().out


def test_gen_invalid_ratio_is_a_config_error(tmp_path, capsys):
    assert main(["gen", "--class-ratio", "1.5", "--out", str(tmp_path / "x.jsonl")]) == 2
    assert "class_ratio" in capsys.readouterr().err


def test_gen_traces(tmp_path):
    out = tmp_path / "t.jsonl"
    assert main(["gen", "--traces", "--n-traces", "30", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 30


def test_gen_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["gen", "--n-records", "10", "--out", str(blocker / "x.jsonl")]) == 1


def test_bad_config_files(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["run", "--config", str(broken)]) == 2
    assert main(["run", "--config", _write(tmp_path / "c.json", {"dataset": {}, "extra": 1})]) == 2


def test_minimal_run_is_fast_and_writes_artifacts(tmp_path):
    config = _write(tmp_path / "c.json", _minimal(tmp_path))
    start = time.perf_counter()
    assert main(["run", "--config", config]) == 0
    assert time.perf_counter() - start < 10
    out = tmp_path / "out"
    assert {p.name for p in out.iterdir()} == {"summary.json", "metrics.csv", "events.jsonl"}
    summary = json.loads((out / "summary.json").read_text())
    assert {"aut_f1", "final", "drifts"} <= set(summary)
    header = (out / "metrics.csv").read_text().splitlines()[0]
    assert header == "window_index,accuracy,precision,recall,f1"


def test_same_config_same_summary(tmp_path):
    doc = _minimal(tmp_path, detector="ddm", learner="ht")
    config = _write(tmp_path / "c.json", doc)
    assert main(["run", "--config", config, "--output-dir", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", config, "--output-dir", str(tmp_path / "b")]) == 0
    for name in ("summary.json", "metrics.csv", "events.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_delay_list_fans_out(tmp_path):
    config = _write(tmp_path / "c.json", _minimal(tmp_path, delay_days=[0, 1, 7, 30]))
    assert main(["run", "--config", config]) == 0
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir() if p.is_dir()) == ["delay_0", "delay_1", "delay_30", "delay_7"]
    summary = json.loads((out / "summary.json").read_text())
    assert sorted(summary["runs"], key=int) == ["0", "1", "7", "30"]


def test_report_compares_modes(tmp_path, capsys):
    for mode in ("static", "retrain"):
        doc = _minimal(tmp_path, detector="ddm", mode=mode, output_dir=str(tmp_path / mode))
        assert main(["run", "--config", _write(tmp_path / f"{mode}.json", doc)]) == 0
    capsys.readouterr()
    prefix = tmp_path / "report" / "cmp"
    assert main(["report", str(tmp_path / "static"), str(tmp_path / "retrain"), "--out", str(prefix)]) == 0
    table = capsys.readouterr().out
    assert "static_extractor" in table and "retrain_extractor" in table and "delta_f1" in table
    rows = (tmp_path / "report" / "cmp.csv").read_text().splitlines()
    assert len(rows) == 3
    assert rows[1].split(",")[-1] == "0.0000"


def test_report_single_run(tmp_path, capsys):
    assert main(["run", "--config", _write(tmp_path / "c.json", _minimal(tmp_path))]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path / "out")]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 3


def test_report_refuses_mixed_datasets(tmp_path, capsys):
    for seed in (1, 2):
        doc = _minimal(tmp_path, seed=seed, output_dir=str(tmp_path / f"s{seed}"))
        assert main(["run", "--config", _write(tmp_path / f"{seed}.json", doc)]) == 0
    assert main(["report", str(tmp_path / "s1"), str(tmp_path / "s2")]) == 1
    assert "different datasets" in capsys.readouterr().err
    assert main(["report", str(tmp_path / "nowhere")]) == 1


def test_trace_run(tmp_path):
    doc = {"dataset": {"traces": {"n_traces": 60}}, "learner": {"name": "iforest", "params": {"n_estimators": 30}},
           "detector": "none", "sweep": {"proportions": [0.1, 1.0]}, "output_dir": str(tmp_path / "t")}
    assert main(["run", "--config", _write(tmp_path / "t.json", doc)]) == 0
    summary = json.loads((tmp_path / "t" / "summary.json").read_text())
    assert set(summary["f1_by_proportion"]) == {"0.1", "1.0"}


def test_sweep_writes_medians(tmp_path):
    config = _write(tmp_path / "c.json", _minimal(tmp_path))
    assert main(["sweep", "--config", config, "--seeds", "0-2", "--workers", "1"]) == 0
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == ["seed_0", "seed_1", "seed_2", "sweep.json"]
    merged = json.loads((out / "sweep.json").read_text())
    assert merged["seeds"] == [0, 1, 2]
    assert "final_f1" in merged["median"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "driftlab", "gen", "--n-records", "20",
                           "--out", str(tmp_path / "g.jsonl")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "driftlab", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
