"""Prequential evaluation with delayed labels, windowed metrics and AUT."""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from driftlab.generators import ANOMALOUS
from driftlab.learners.iforest import IsolationForest
from driftlab.validation import check_fraction

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


class ConfusionMatrix:
    """Counts of ``(true_label, predicted_label)`` pairs."""

    def __init__(self, pairs=()):
        self.counts = Counter()
        for t, p in pairs:
            self.add(t, p)

    def add(self, true_label, predicted_label, n=1):
        self.counts[(true_label, predicted_label)] += n

    @property
    def total(self):
        return sum(self.counts.values())

    @property
    def labels(self):
        return sorted({lab for pair in self.counts for lab in pair})

    def __getitem__(self, pair):
        return self.counts.get(pair, 0)

    def to_dict(self):
        return {f"{t}->{p}": n for (t, p), n in sorted(self.counts.items())}


def metrics(cm: ConfusionMatrix, positive="malicious") -> dict:
    """Accuracy, precision, recall and F1 for ``positive``.

    An undefined precision or recall (zero denominator) is reported as 0
    with ``precision_undefined`` / ``recall_undefined`` set.
    """
    total = cm.total
    if total <= 0:
        raise ValueError("metrics of an empty confusion matrix")
    correct = sum(n for (t, p), n in cm.counts.items() if t == p)
    tp = cm[(positive, positive)]
    fp = sum(n for (t, p), n in cm.counts.items() if p == positive and t != positive)
    fn = sum(n for (t, p), n in cm.counts.items() if t == positive and p != positive)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": correct / total,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "precision_undefined": tp + fp == 0,
        "recall_undefined": tp + fn == 0,
    }


@dataclass
class MetricSeries:
    """Metric values at consecutive window indices ``0..n-1``."""

    values: list
    window_size: Optional[int] = None
    keys: Optional[list] = None  # what each index stands for, e.g. proportions

    def __post_init__(self):
        self.values = [float(v) for v in self.values]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(enumerate(self.values))

    def scaled(self, alpha):
        return MetricSeries([alpha * v for v in self.values], self.window_size, self.keys)


def aut(series) -> float:
    """Area Under Time: normalized trapezoid over equally spaced windows.

    ``(1 / (N - 1)) * sum((f_k + f_{k+1}) / 2)``.
    """
    values = series.values if isinstance(series, MetricSeries) else list(series)
    n = len(values)
    if n < 2:
        raise ValueError("AUT needs at least two points")
    area = math.fsum((values[k] + values[k + 1]) / 2.0 for k in range(n - 1))
    return area / (n - 1)


@dataclass(frozen=True)
class DelayPolicy:
    """Labels become usable ``days`` after first sight, or later if the record says so."""

    days: int = 0

    def __post_init__(self):
        if self.days < 0:
            raise ValueError(f"delay must be >= 0 days, got {self.days}")

    def available_at(self, record) -> int:
        return max(record.label_available_at, record.timestamp + self.days)


def windowed_metrics(truths, preds, window, positive="malicious", days=None, window_days=None):
    """Per-window metric series over prediction order.

    Windows hold ``window`` consecutive predictions, the trailing partial
    one included. With ``window_days`` set, windows are calendar periods of
    that many days instead (``days`` gives each prediction's day); empty
    periods are skipped so indices stay consecutive.
    """
    if window_days is None:
        bounds = [(s, min(s + window, len(truths))) for s in range(0, len(truths), window)]
    else:
        bounds = []
        start = 0
        for i in range(1, len(days) + 1):
            if i == len(days) or (days[i] - days[0]) // window_days != (days[start] - days[0]) // window_days:
                bounds.append((start, i))
                start = i
    series = {name: [] for name in METRIC_NAMES}
    flags = []
    for lo, hi in bounds:
        m = metrics(ConfusionMatrix(zip(truths[lo:hi], preds[lo:hi])), positive)
        for name in METRIC_NAMES:
            series[name].append(m[name])
        flags.append(m["precision_undefined"] or m["recall_undefined"])
    size = window if window_days is None else None
    out = {name: MetricSeries(vals, size) for name, vals in series.items()}
    return out, flags


@dataclass
class RunResult:
    predictions: list
    truths: list
    series: dict
    confusion: ConfusionMatrix
    event_log: list
    undefined_windows: list = field(default_factory=list)
    positive: str = "malicious"

    @property
    def final(self):
        return metrics(self.confusion, self.positive)

    def summary(self) -> dict:
        final = self.final
        auts = {}
        for name, s in self.series.items():
            auts[name] = aut(s) if len(s) >= 2 else None
        return {
            "aut_f1": auts["f1"],
            "aut": auts,
            "final": {**final, "confusion": self.confusion.to_dict()},
            "drifts": [e["t"] for e in self.event_log if e["kind"] == "drift"],
            "warnings": sum(1 for e in self.event_log if e["kind"] == "warning"),
            "n_predictions": len(self.predictions),
            "n_windows": len(self.series["f1"]),
            "undefined_windows": sum(self.undefined_windows),
        }

    def tail_mean(self, metric="f1", fraction=0.5):
        """Mean of the last ``fraction`` of the windowed series."""
        vals = self.series[metric].values
        k = max(1, math.ceil(len(vals) * fraction))
        return float(np.mean(vals[-k:]))


def run_prequential(stream, pipeline, delay=DelayPolicy(0), window=1000,
                    positive="malicious", window_days=None) -> RunResult:
    """Test-then-train over ``stream`` with delayed label delivery.

    Before each record at day ``t`` is processed, every pending label whose
    availability is ``<= t`` is delivered, in order of availability and then
    id. Labels still pending when the stream ends are never delivered.
    """
    if isinstance(delay, int):
        delay = DelayPolicy(delay)
    pending = []
    predictions, truths = [], []
    for record in stream:
        t = record.timestamp
        while pending and pending[0][0] <= t:
            _, _, r = heapq.heappop(pending)
            pipeline.deliver_label(r, r.true_label, now=t)
        pred = pipeline.process(record)
        if record.true_label is None:
            continue
        predictions.append(pred)
        truths.append(record.true_label)
        heapq.heappush(pending, (delay.available_at(record), record.id, record))
    preds = [p.pred for p in predictions]
    series, flags = windowed_metrics(truths, preds, window, positive,
                                     days=[p.t for p in predictions], window_days=window_days)
    return RunResult(
        predictions=predictions,
        truths=truths,
        series=series,
        confusion=ConfusionMatrix(zip(truths, preds)),
        event_log=list(pipeline.event_log),
        undefined_windows=flags,
        positive=positive,
    )


# online vs offline window sweep over system-call traces

DEFAULT_PROPORTIONS = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0)


@dataclass
class WindowSweepConfig:
    """Settings of the detection-window sweep.

    ``threshold`` is either ``"train_max_f1"`` (pick, on the training
    traces observed in full, the cut between consecutive trace scores that
    maximizes F1, preferring the highest) or a fixed score.
    """

    proportions: Sequence[float] = DEFAULT_PROPORTIONS
    n_gram: int = 15
    train_fraction: float = 0.5
    n_estimators: int = 100
    max_samples: int = 256
    threshold: object = "train_max_f1"
    alphabet: Optional[Sequence[str]] = None
    seed: int = 0

    def __post_init__(self):
        self.proportions = tuple(float(p) for p in self.proportions)
        for p in self.proportions:
            check_fraction(p, "proportion", closed=True)
        check_fraction(self.train_fraction, "train_fraction")
        if self.n_gram < 1:
            raise ValueError("n_gram must be >= 1")


@dataclass
class SweepResult:
    proportions: tuple
    f1: MetricSeries
    per_proportion: list
    threshold: float

    def f1_at(self, p):
        return self.f1.values[self.proportions.index(p)]


def _encode(calls, index):
    return np.fromiter((index[c] for c in calls), dtype=np.int64, count=len(calls))


def _window_counts(codes, dim, width):
    """Call-frequency vectors of every full sliding window of ``width``."""
    onehot = np.zeros((len(codes) + 1, dim))
    onehot[np.arange(1, len(codes) + 1), codes] = 1.0
    cum = np.cumsum(onehot, axis=0)
    return cum[width:] - cum[:-width]


def _prefix_length(p, n):
    return math.ceil(p * n)


def _trace_scores(forest, traces, index, cfg):
    """``scores[p_index][trace_index]`` = max window score over the prefix."""
    dim = len(index)
    width = cfg.n_gram
    # collect every window once and score them in one batch
    blocks, plan = [], []
    offset = 0
    for trace in traces:
        codes = _encode(trace.calls, index)
        n = len(codes)
        full_at = None
        if n >= width:
            block = _window_counts(codes, dim, width)
            blocks.append(block)
            full_at = offset
            offset += len(block)
        prefixes = []
        for p in cfg.proportions:
            length = _prefix_length(p, n)
            if length < 1:
                raise ValueError(f"proportion {p} gives an empty prefix for a trace of {n} calls")
            if length >= width:
                prefixes.append((full_at, full_at + length - width + 1))
            else:
                blocks.append(np.bincount(codes[:length], minlength=dim).astype(float)[None, :])
                prefixes.append((offset, offset + 1))
                offset += 1
        plan.append(prefixes)
    scores = forest.score_samples(np.vstack(blocks))
    out = np.zeros((len(cfg.proportions), len(traces)))
    for j, prefixes in enumerate(plan):
        for i, (lo, hi) in enumerate(prefixes):
            out[i, j] = scores[lo:hi].max()
    return out


def _f1_from_scores(scores, labels, threshold):
    cm = ConfusionMatrix(
        (lab, ANOMALOUS if s >= threshold else "normal") for s, lab in zip(scores, labels)
    )
    return metrics(cm, ANOMALOUS)


def select_threshold(scores, labels) -> float:
    """Cut between consecutive distinct scores maximizing F1 (highest on ties)."""
    distinct = np.unique(scores)
    cuts = [distinct[0] - 1e-12] + [
        (a + b) / 2.0 for a, b in zip(distinct[:-1], distinct[1:])
    ]
    best, best_f1 = cuts[0], -1.0
    for cut in cuts:
        f1 = _f1_from_scores(scores, labels, cut)["f1"]
        if f1 >= best_f1:
            best, best_f1 = cut, f1
    return float(best)


def window_sweep(traces, cfg: WindowSweepConfig = None) -> SweepResult:
    """F1 of an isolation-forest trace detector as the observed prefix grows.

    The forest is fit on the full sliding windows of normal training
    traces only. A trace is flagged when any window of its first
    ``ceil(p * len)`` calls scores at or above the threshold.
    """
    cfg = cfg or WindowSweepConfig()
    traces = list(traces)
    n_train = math.ceil(cfg.train_fraction * len(traces))
    train, test = traces[:n_train], traces[n_train:]
    if not test:
        raise ValueError("window sweep needs test traces")
    alphabet = cfg.alphabet or sorted({c for t in traces for c in t.calls})
    index = {c: i for i, c in enumerate(alphabet)}
    dim = len(index)

    normal_windows = [
        _window_counts(_encode(t.calls, index), dim, cfg.n_gram)
        for t in train if t.label != ANOMALOUS and len(t.calls) >= cfg.n_gram
    ]
    if not normal_windows:
        raise ValueError("no normal training trace is long enough for one window")
    forest = IsolationForest(cfg.n_estimators, cfg.max_samples, random_state=cfg.seed)
    forest.fit(np.vstack(normal_windows))

    if cfg.threshold == "train_max_f1":
        full_cfg = WindowSweepConfig(proportions=(1.0,), n_gram=cfg.n_gram)
        train_scores = _trace_scores(forest, train, index, full_cfg)[0]
        threshold = select_threshold(train_scores, [t.label for t in train])
    else:
        threshold = float(cfg.threshold)

    scores = _trace_scores(forest, test, index, cfg)
    labels = [t.label for t in test]
    per = [_f1_from_scores(row, labels, threshold) for row in scores]
    return SweepResult(
        proportions=cfg.proportions,
        f1=MetricSeries([m["f1"] for m in per], keys=list(cfg.proportions)),
        per_proportion=per,
        threshold=threshold,
    )
