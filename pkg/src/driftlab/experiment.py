"""Config-driven experiments: build components, run, write artifacts, report."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from driftlab.config import ExperimentConfig, parse_config
from driftlab.drift import make_detector
from driftlab.evaluation import DelayPolicy, WindowSweepConfig, run_prequential, window_sweep
from driftlab.features import HashingVectorizer, VocabularyVectorizer
from driftlab.generators import (
    GeneratorConfig,
    generate_text_stream,
    generate_traces,
    load_traces,
    sha256_of_traces,
)
from driftlab.learners import make_learner
from driftlab.pipeline import PipelineMode, StreamPipeline
from driftlab.records import load_stream, sha256_of_stream, temporal_split
from driftlab.resampling import temporal_oversample, temporal_undersample

logger = logging.getLogger(__name__)

SUMMARY = "summary.json"
METRICS = "metrics.csv"
EVENTS = "events.jsonl"


# reference streams used by the direction checks


def default_drift_stream(seed=0, **overrides) -> GeneratorConfig:
    """Vocabulary-drift stream: 20,000 records over two years, one swap at day 365."""
    params = dict(n_records=20_000, class_ratio=0.18, drift_at=(365,), noise=0.1, seed=seed)
    params.update(overrides)
    return GeneratorConfig(**params)


def subclass_schedule(n_periods=25):
    """Three malware families whose shares shift steadily over the periods."""
    return tuple(
        {"alpha": 1.0 + k, "beta": 8.0, "gamma": float(max(n_periods - k, 1))}
        for k in range(n_periods)
    )


def subclass_stream(seed=0, **overrides) -> GeneratorConfig:
    params = dict(n_records=4000, class_ratio=0.2, subclass_schedule=subclass_schedule(),
                  seed=seed)
    params.update(overrides)
    return GeneratorConfig(**params)


# component factories


def build_featurizer(name, params=None):
    params = dict(params or {})
    if name == "bow":
        return VocabularyVectorizer(mode="counts", **params)
    if name == "tfidf":
        return VocabularyVectorizer(mode="tfidf", **params)
    if name == "hashing":
        return HashingVectorizer(**params)
    raise ValueError(f"unknown featurizer {name!r}")


def build_learner(name, params=None, seed=0):
    params = dict(params or {})
    learner = make_learner(name, **params)
    if "random_state" in learner.get_params() and "random_state" not in params:
        learner.set_params(random_state=seed)
        learner.reset()
    return learner


def build_pipeline(cfg: ExperimentConfig) -> StreamPipeline:
    detector = None
    if cfg.mode is not PipelineMode.NO_DETECTOR:
        detector = make_detector(cfg.detector, **cfg.detector_params)
    return StreamPipeline(
        build_featurizer(cfg.featurizer, cfg.featurizer_params),
        build_learner(cfg.learner, cfg.learner_params, cfg.seed),
        detector,
        mode=cfg.mode,
        reservoir_capacity=cfg.reservoir_capacity,
    )


def load_dataset(cfg: ExperimentConfig):
    """``(data, sha256)``; data is a Stream or a list of traces."""
    ds = cfg.dataset
    if "generator" in ds:
        stream = generate_text_stream(cfg.generator_config())
        return stream, sha256_of_stream(stream)
    if "traces" in ds:
        traces = generate_traces(cfg.trace_config())
        return traces, sha256_of_traces(traces)
    if cfg.is_traces:
        traces = load_traces(ds["path"])
        return traces, sha256_of_traces(traces)
    stream = load_stream(ds["path"])
    return stream, sha256_of_stream(stream)


def _oversampler(cfg: ExperimentConfig):
    params = dict(cfg.resampling_params)
    params.setdefault("seed", cfg.seed)

    def augment(extractor, records):
        items = [(r.id, extractor.transform_one(r), r.true_label, r.timestamp) for r in records]
        out = temporal_oversample(items, **params)
        return [(s.features, s.label, s.timestamp) for s in out if s.synthetic]

    return augment


def bootstrap_pipeline(cfg: ExperimentConfig, train):
    pipeline = build_pipeline(cfg)
    augment = None
    if cfg.resampling == "temporal_under":
        params = dict(cfg.resampling_params)
        params.setdefault("seed", cfg.seed)
        train = temporal_undersample(train, **params)
    elif cfg.resampling == "temporal_over":
        augment = _oversampler(cfg)
    return pipeline.bootstrap(train, augment=augment)


# artifact writers


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write_run(out_dir: Path, summary, metric_rows, header, events):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / SUMMARY).write_text(dumps(summary), encoding="utf-8")
    (out_dir / METRICS).write_text(_csv_text(header, metric_rows), encoding="utf-8")
    lines = "".join(json.dumps(e, sort_keys=True) + "\n" for e in events)
    (out_dir / EVENTS).write_text(lines, encoding="utf-8")


def _describe(cfg):
    return {
        "featurizer": cfg.featurizer,
        "learner": cfg.learner,
        "detector": cfg.detector if cfg.mode is not PipelineMode.NO_DETECTOR else "none",
        "mode": cfg.mode.value,
        "seed": cfg.seed,
    }


def run_stream(cfg: ExperimentConfig, stream, dataset_hash, out_dir: Path) -> dict:
    train, test = temporal_split(stream, cfg.split_fraction)
    summaries = {}
    for delay in cfg.delay_days:
        pipeline = bootstrap_pipeline(cfg, train)
        result = run_prequential(test, pipeline, DelayPolicy(delay), cfg.window_w,
                                 window_days=cfg.window_days)
        summary = {
            **_describe(cfg),
            "config": cfg.to_json(),
            "dataset_sha256": dataset_hash,
            "delay_days": delay,
            "n_train": len(train),
            "n_test": len(test),
            "n_retrains": pipeline.n_retrains,
            **result.summary(),
        }
        rows = [
            [k] + [repr(result.series[m].values[k]) for m in ("accuracy", "precision", "recall", "f1")]
            for k in range(len(result.series["f1"]))
        ]
        target = out_dir / f"delay_{delay}" if cfg.delay_is_list else out_dir
        _write_run(target, summary, rows,
                   ["window_index", "accuracy", "precision", "recall", "f1"], result.event_log)
        summaries[delay] = summary
    if not cfg.delay_is_list:
        return summaries[cfg.delay_days[0]]
    top = {
        **_describe(cfg),
        "config": cfg.to_json(),
        "dataset_sha256": dataset_hash,
        "runs": {str(d): s for d, s in summaries.items()},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / SUMMARY).write_text(dumps(top), encoding="utf-8")
    return top


def run_traces(cfg: ExperimentConfig, traces, dataset_hash, out_dir: Path) -> dict:
    sweep = dict(cfg.sweep)
    sweep.update(cfg.learner_params)
    sweep.setdefault("seed", cfg.seed)
    result = window_sweep(traces, WindowSweepConfig(**sweep))
    summary = {
        **_describe(cfg),
        "config": cfg.to_json(),
        "dataset_sha256": dataset_hash,
        "threshold": result.threshold,
        "f1_by_proportion": {repr(p): f for p, f in zip(result.proportions, result.f1.values)},
        "per_proportion": [
            {"proportion": p, **m} for p, m in zip(result.proportions, result.per_proportion)
        ],
    }
    rows = [
        [repr(p)] + [repr(m[k]) for k in ("accuracy", "precision", "recall", "f1")]
        for p, m in zip(result.proportions, result.per_proportion)
    ]
    _write_run(out_dir, summary, rows, ["proportion", "accuracy", "precision", "recall", "f1"], [])
    return summary


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> dict:
    """Run ``cfg`` and write its artifacts; returns the summary."""
    out_dir = Path(output_dir or cfg.output_dir)
    data, digest = load_dataset(cfg)
    if cfg.is_traces:
        return run_traces(cfg, data, digest, out_dir)
    return run_stream(cfg, data, digest, out_dir)


def _run_seed(args):
    raw, seed, out_dir = args
    cfg = parse_config(raw).with_seed(seed)
    return seed, run_experiment(cfg, out_dir)


def _median(values):
    values = [v for v in values if v is not None]
    return statistics.median(values) if values else None


def _merge(summaries: dict) -> dict:
    """Medians over seeds, keyed like the per-seed summaries."""
    first = next(iter(summaries.values()))
    if "f1_by_proportion" in first:
        return {"f1_by_proportion": {
            p: _median([s["f1_by_proportion"][p] for s in summaries.values()])
            for p in first["f1_by_proportion"]
        }}

    def pick(s):
        return {"aut_f1": s["aut_f1"], "final_f1": s["final"]["f1"],
                "final_precision": s["final"]["precision"], "drifts": len(s["drifts"])}

    if "runs" in first:
        out = {}
        for delay in first["runs"]:
            rows = [pick(s["runs"][delay]) for s in summaries.values()]
            out[delay] = {k: _median([r[k] for r in rows]) for k in rows[0]}
        return {"runs": out}
    rows = [pick(s) for s in summaries.values()]
    return {k: _median([r[k] for r in rows]) for k in rows[0]}


def run_sweep(cfg: ExperimentConfig, seeds, workers=None, output_dir=None) -> dict:
    """Run ``cfg`` once per seed in a process pool; writes ``sweep.json``."""
    out_dir = Path(output_dir or cfg.output_dir)
    workers = workers or os.cpu_count() or 1
    jobs = [(cfg.raw, s, str(out_dir / f"seed_{s}")) for s in seeds]
    if workers == 1 or len(jobs) == 1:
        results = [_run_seed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed, jobs))
    summaries = dict(sorted(results))
    merged = {
        "config": cfg.to_json(),
        "seeds": list(summaries),
        "median": _merge(summaries),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.json").write_text(dumps(merged), encoding="utf-8")
    return merged


# comparison reports


class ReportError(ValueError):
    pass


REPORT_COLUMNS = ["run", "mode", "detector", "learner", "featurizer", "delay_days",
                  "final_f1", "aut_f1", "drifts", "precision", "precision_drop_ratio", "delta_f1"]


def _read_summary(run_dir: Path) -> dict:
    path = run_dir / SUMMARY
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError:
        raise ReportError(f"{run_dir}: no {SUMMARY}") from None
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: not valid JSON ({exc})") from None


def build_report(run_dirs) -> list:
    """One row per (run, delay); refuses runs over different datasets."""
    rows = []
    hashes = {}
    for run_dir in map(Path, run_dirs):
        summary = _read_summary(run_dir)
        if "dataset_sha256" not in summary or "f1_by_proportion" in summary:
            raise ReportError(f"{run_dir}: not a prequential run summary")
        hashes[str(run_dir)] = summary["dataset_sha256"]
        runs = summary["runs"] if "runs" in summary else {str(summary["delay_days"]): summary}
        baseline = runs.get("0")
        for delay, s in sorted(runs.items(), key=lambda kv: int(kv[0])):
            precision = s["final"]["precision"]
            ratio = None
            if baseline is not None and baseline["final"]["precision"] > 0:
                ratio = precision / baseline["final"]["precision"]
            rows.append({
                "run": run_dir.name or str(run_dir),
                "mode": s["mode"],
                "detector": s["detector"],
                "learner": s["learner"],
                "featurizer": s["featurizer"],
                "delay_days": int(delay),
                "final_f1": s["final"]["f1"],
                "aut_f1": s["aut_f1"],
                "drifts": len(s["drifts"]),
                "precision": precision,
                "precision_drop_ratio": ratio,
            })
    if not rows:
        raise ReportError("no runs to report")
    if len(set(hashes.values())) > 1:
        listing = ", ".join(f"{d} ({h[:12]})" for d, h in hashes.items())
        raise ReportError(f"runs use different datasets; refusing to compare: {listing}")
    reference = rows[0]["final_f1"]
    for row in rows:
        row["delta_f1"] = row["final_f1"] - reference
    return rows


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def report_markdown(rows) -> str:
    lines = ["| " + " | ".join(REPORT_COLUMNS) + " |",
             "|" + "|".join("---" for _ in REPORT_COLUMNS) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(row[c]) for c in REPORT_COLUMNS) + " |")
    return "\n".join(lines) + "\n"


def report_csv(rows) -> str:
    return _csv_text(REPORT_COLUMNS, [[_fmt(row[c]) for c in REPORT_COLUMNS] for row in rows])
