from collections import Counter

import pytest
from scipy.stats import chi2_contingency

from driftlab.generators import (
    ANOMALOUS,
    NORMAL,
    GeneratorConfig,
    TraceConfig,
    generate_text_stream,
    generate_traces,
    load_traces,
    sha256_of_traces,
    write_traces,
)
from driftlab.records import MALICIOUS, sha256_of_stream


def test_same_seed_same_stream():
    cfg = GeneratorConfig(n_records=2000, drift_at=(200,), seed=7)
    assert sha256_of_stream(generate_text_stream(cfg)) == sha256_of_stream(generate_text_stream(cfg))
    other = GeneratorConfig(n_records=2000, drift_at=(200,), seed=8)
    assert sha256_of_stream(generate_text_stream(other)) != sha256_of_stream(generate_text_stream(cfg))


def test_class_ratio_is_exact_to_a_record():
    stream = generate_text_stream(GeneratorConfig(n_records=10_000, class_ratio=0.18, seed=7))
    n_mal = sum(r.true_label == MALICIOUS for r in stream)
    assert abs(n_mal - 1800) <= 1


def test_malicious_vocabularies_are_disjoint_across_a_drift():
    stream = generate_text_stream(GeneratorConfig(n_records=4000, drift_at=(365,), seed=1))
    before = {t for r in stream if r.timestamp < 365 and r.true_label == MALICIOUS for t in r.tokens}
    after = {t for r in stream if r.timestamp >= 365 and r.true_label == MALICIOUS for t in r.tokens}
    assert before and after
    assert not before & after


def test_no_drift_is_stationary():
    stream = generate_text_stream(GeneratorConfig(n_records=6000, noise=0.1, seed=3))
    half = len(stream) // 2
    vocab = sorted({t for r in stream for t in r.tokens})
    table = []
    for part in (stream[:half], stream[half:]):
        counts = Counter(t for r in part for t in r.tokens)
        table.append([counts[t] for t in vocab])
    assert chi2_contingency(table)[1] > 0.01


def test_noise_leaks_tokens_between_classes():
    stream = generate_text_stream(GeneratorConfig(n_records=2000, noise=0.2, seed=0))
    benign_tokens = Counter(t[:3] for r in stream if r.true_label != MALICIOUS for t in r.tokens)
    assert 0.15 < benign_tokens["mal"] / sum(benign_tokens.values()) < 0.25


@pytest.mark.parametrize("kwargs", [
    {"class_ratio": 1.5}, {"class_ratio": 0.0}, {"noise": 1.0}, {"drift_at": (800,)},
    {"drift_at": (300, 200)}, {"n_records": 0},
])
def test_invalid_generator_config(kwargs):
    with pytest.raises(ValueError):
        GeneratorConfig(**kwargs)


def test_subclass_schedule_tags_records():
    schedule = ({"a": 1.0}, {"b": 1.0})
    stream = generate_text_stream(GeneratorConfig(n_records=500, subclass_schedule=schedule,
                                                  period_days=30, days=60, seed=0))
    assert {r.subclass for r in stream if r.timestamp < 30} == {"a"}
    assert {r.subclass for r in stream if r.timestamp >= 30} == {"b"}


def test_traces_without_anomalies_are_all_normal():
    traces = generate_traces(TraceConfig(n_traces=50, anomaly_ratio=0.0, seed=2))
    assert {t.label for t in traces} == {NORMAL}


def test_burst_window_holds_an_out_of_alphabet_call():
    cfg = TraceConfig(n_traces=60, seed=4)
    traces = generate_traces(cfg)
    normal = set(cfg.normal_alphabet)
    anomalous = [t for t in traces if t.label == ANOMALOUS]
    assert len(anomalous) == 12
    for t in anomalous:
        lo, hi = t.burst
        assert hi - lo == cfg.anomaly_burst_length
        assert any(c not in normal for c in t.calls[lo:hi])
        assert all(c in normal for c in t.calls[:lo] + t.calls[hi:])
    for t in traces:
        if t.label == NORMAL:
            assert set(t.calls) <= normal
            assert cfg.trace_length_range[0] <= len(t.calls) <= cfg.trace_length_range[1]


def test_trace_file_round_trip(tmp_path):
    traces = generate_traces(TraceConfig(n_traces=10, seed=5))
    path = tmp_path / "t.jsonl"
    write_traces(traces, path)
    assert sha256_of_traces(load_traces(path)) == sha256_of_traces(traces)
