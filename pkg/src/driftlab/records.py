"""Stream records, file ingestion and temporal splitting."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

BENIGN = "benign"
MALICIOUS = "malicious"


class StreamFormatError(ValueError):
    """Raised when a stream file violates the record format."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class StreamRecord:
    """One timestamped sample.

    ``timestamp`` and ``label_available_at`` are integer epoch-days.
    """

    id: str
    timestamp: int
    tokens: tuple = ()
    true_label: Optional[str] = None
    label_available_at: Optional[int] = None
    subclass: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.label_available_at is None:
            object.__setattr__(self, "label_available_at", self.timestamp)
        if self.label_available_at < self.timestamp:
            raise ValueError(
                f"record {self.id!r}: label_available_at {self.label_available_at} "
                f"< timestamp {self.timestamp}"
            )
        if self.true_label is not None and not self.tokens:
            raise ValueError(f"record {self.id!r}: labeled record without tokens")

    @property
    def sort_key(self):
        return (self.timestamp, self.id)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "ts": self.timestamp,
            "label": self.true_label,
            "label_at": self.label_available_at,
            "tokens": list(self.tokens),
            "subclass": self.subclass,
        }


@dataclass(frozen=True)
class Stream:
    """Records sorted by ``(timestamp, id)``; immutable once built."""

    records: tuple = ()
    class_alphabet: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: r.sort_key))
        seen = set()
        for r in records:
            if r.id in seen:
                raise ValueError(f"duplicate record id {r.id!r}")
            seen.add(r.id)
        labels = {r.true_label for r in records if r.true_label is not None}
        alphabet = frozenset(self.class_alphabet) | labels
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "class_alphabet", alphabet)

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[StreamRecord]:
        return iter(self.records)

    def __getitem__(self, item):
        return self.records[item]

    @property
    def labels(self):
        return [r.true_label for r in self.records]

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(r.to_json(), sort_keys=True, separators=(",", ":")) + "\n"
            for r in self.records
        )


_REQUIRED = ("id", "ts", "label_at", "tokens")


def _record_from_obj(obj: dict, line: int) -> StreamRecord:
    if not isinstance(obj, dict):
        raise StreamFormatError("expected a JSON object", line)
    for name in _REQUIRED:
        if name not in obj:
            raise StreamFormatError(f"missing required field {name!r}", line)
    try:
        ts = int(obj["ts"])
        label_at = int(obj["label_at"])
    except (TypeError, ValueError):
        raise StreamFormatError("ts and label_at must be integers", line) from None
    if label_at < ts:
        raise StreamFormatError(f"label_at {label_at} < ts {ts}", line)
    tokens = obj["tokens"]
    if isinstance(tokens, str):
        tokens = tokens.split()
    try:
        return StreamRecord(
            id=str(obj["id"]),
            timestamp=ts,
            tokens=tuple(str(t) for t in tokens),
            true_label=obj.get("label"),
            label_available_at=label_at,
            subclass=obj.get("subclass"),
        )
    except ValueError as exc:
        raise StreamFormatError(str(exc), line) from None


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise StreamFormatError(f"invalid JSON ({exc.msg})", lineno) from None


def _iter_csv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            obj = {k: (v if v != "" else None) for k, v in row.items() if k is not None}
            if "tokens" in row:
                obj["tokens"] = row["tokens"] or ""
            yield reader.line_num, obj


def load_stream(path, format: Optional[str] = None) -> Stream:
    """Read a JSONL or CSV stream file and return it sorted by ``(ts, id)``."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise ValueError(f"unknown stream format {format!r}")
    rows = _iter_jsonl(path) if format == "jsonl" else _iter_csv(path)
    records, seen = [], {}
    for lineno, obj in rows:
        rec = _record_from_obj(obj, lineno)
        if rec.id in seen:
            raise StreamFormatError(
                f"duplicate id {rec.id!r} (first seen on line {seen[rec.id]})", lineno
            )
        seen[rec.id] = lineno
        records.append(rec)
    return Stream(tuple(records))


def write_stream(stream: Stream, path, format: str = "jsonl") -> None:
    path = Path(path)
    if format == "jsonl":
        path.write_text(stream.to_jsonl(), encoding="utf-8")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "ts", "label", "label_at", "tokens", "subclass"])
        for r in stream:
            writer.writerow([
                r.id, r.timestamp, r.true_label or "", r.label_available_at,
                " ".join(r.tokens), r.subclass or "",
            ])


def temporal_split(stream: Stream, fraction: float):
    """Split into the earliest ``ceil(fraction * n)`` records and the rest.

    Records with equal timestamps are ordered by id, so the split is
    deterministic; a warning is emitted when the boundary falls inside a
    group of equal timestamps.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n = len(stream)
    if n == 0:
        raise ValueError("cannot split an empty stream")
    k = math.ceil(fraction * n)
    if k >= n:
        raise ValueError(f"fraction {fraction} leaves an empty test split for {n} records")
    records = stream.records
    if records[k - 1].timestamp == records[k].timestamp:
        warnings.warn(
            f"split boundary at day {records[k].timestamp} separates records with equal "
            "timestamps; tie broken by record id",
            stacklevel=2,
        )
    alphabet = stream.class_alphabet
    return Stream(records[:k], alphabet), Stream(records[k:], alphabet)


def sha256_of_stream(stream: Stream) -> str:
    """SHA-256 of the canonical (sorted) JSONL serialization."""
    return hashlib.sha256(stream.to_jsonl().encode("utf-8")).hexdigest()


def stream_from_records(records: Iterable[StreamRecord], alphabet: Sequence[str] = ()) -> Stream:
    return Stream(tuple(records), frozenset(alphabet))
