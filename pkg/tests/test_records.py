import json
import random
import warnings

import pytest
from hypothesis import given, strategies as st

from driftlab.records import (
    Stream,
    StreamFormatError,
    StreamRecord,
    load_stream,
    sha256_of_stream,
    temporal_split,
    write_stream,
)
from conftest import make_record


def _write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def test_load_sorts_by_timestamp_then_id(tmp_path):
    path = tmp_path / "s.jsonl"
    _write_jsonl(path, [
        {"id": "c", "ts": 5, "label": "benign", "label_at": 5, "tokens": ["x"]},
        {"id": "b", "ts": 2, "label": "malicious", "label_at": 9, "tokens": ["y"]},
        {"id": "a", "ts": 5, "label": "benign", "label_at": 6, "tokens": ["z"]},
    ])
    stream = load_stream(path)
    assert [r.id for r in stream] == ["b", "a", "c"]
    assert stream.class_alphabet == {"benign", "malicious"}


def test_label_before_timestamp_names_the_line(tmp_path):
    path = tmp_path / "s.jsonl"
    _write_jsonl(path, [
        {"id": "a", "ts": 3, "label": "benign", "label_at": 3, "tokens": ["x"]},
        {"id": "b", "ts": 4, "label": "benign", "label_at": 3, "tokens": ["x"]},
    ])
    with pytest.raises(StreamFormatError) as info:
        load_stream(path)
    assert info.value.line == 2
    assert "line 2" in str(info.value)


def test_missing_field_and_duplicate_id(tmp_path):
    path = tmp_path / "s.jsonl"
    _write_jsonl(path, [{"id": "a", "ts": 1, "tokens": ["x"]}])
    with pytest.raises(StreamFormatError, match="label_at"):
        load_stream(path)
    _write_jsonl(path, [
        {"id": "a", "ts": 1, "label_at": 1, "tokens": ["x"]},
        {"id": "a", "ts": 2, "label_at": 2, "tokens": ["y"]},
    ])
    with pytest.raises(StreamFormatError, match="duplicate"):
        load_stream(path)


def test_empty_file_gives_empty_stream(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert len(load_stream(path)) == 0


def test_csv_round_trip(tmp_path, tiny_stream):
    path = tmp_path / "s.csv"
    write_stream(tiny_stream, path, "csv")
    again = load_stream(path)
    assert again.to_jsonl() == tiny_stream.to_jsonl()


def test_jsonl_round_trip_keeps_hash(tmp_path, tiny_stream):
    path = tmp_path / "s.jsonl"
    write_stream(tiny_stream, path)
    assert sha256_of_stream(load_stream(path)) == sha256_of_stream(tiny_stream)


@given(st.lists(st.integers(0, 30), min_size=1, max_size=40), st.randoms(use_true_random=False))
def test_order_is_independent_of_input_order(days, rnd):
    records = [make_record(i, d) for i, d in enumerate(days)]
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert Stream(tuple(shuffled)).records == Stream(tuple(records)).records


def test_split_half_of_ten_days():
    stream = Stream(tuple(make_record(i, i + 1) for i in range(10)))
    train, test = temporal_split(stream, 0.5)
    assert [r.timestamp for r in train] == [1, 2, 3, 4, 5]
    assert [r.timestamp for r in test] == [6, 7, 8, 9, 10]


def test_split_inside_equal_timestamps_warns_and_uses_ids():
    stream = Stream(tuple(make_record(i, 7) for i in random.Random(0).sample(range(6), 6)))
    with pytest.warns(UserWarning, match="equal"):
        train, test = temporal_split(stream, 0.5)
    assert [r.id for r in train] == ["r0000", "r0001", "r0002"]
    assert [r.id for r in test] == ["r0003", "r0004", "r0005"]


def test_split_between_days_is_silent():
    stream = Stream(tuple(make_record(i, i) for i in range(4)))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        temporal_split(stream, 0.5)


@pytest.mark.parametrize("fraction", [0.0, 1.0, 1.5, -0.1])
def test_split_rejects_degenerate_fractions(fraction, tiny_stream):
    with pytest.raises(ValueError):
        temporal_split(tiny_stream, fraction)


@given(st.lists(st.integers(0, 50), min_size=2, max_size=60), st.floats(0.05, 0.95))
def test_no_test_record_precedes_a_train_record(days, fraction):
    stream = Stream(tuple(make_record(i, d) for i, d in enumerate(days)))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            train, test = temporal_split(stream, fraction)
    except ValueError:
        return  # fraction leaves no test records
    assert max(r.timestamp for r in train) <= min(r.timestamp for r in test)
    assert len(train) + len(test) == len(stream)


def test_record_rejects_early_label():
    with pytest.raises(ValueError):
        StreamRecord("x", 5, ("a",), "benign", label_available_at=4)
