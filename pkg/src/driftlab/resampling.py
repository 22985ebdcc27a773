"""Class-imbalance resampling that respects time periods.

Records are grouped into half-open periods of ``period_length`` days
counted from the earliest timestamp. Undersampling thins the majority
class inside each period; oversampling interpolates between minority
neighbors (SMOTE) found only inside the same period, so a synthetic
record never mixes information from different times.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from sklearn.neighbors import NearestNeighbors

from driftlab.features import FeatureVector
from driftlab.records import Stream
from driftlab.validation import check_positive_int

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PeriodPartition:
    """Maps a timestamp to ``floor((t - t0) / period_length)``."""

    period_length: int
    t0: int = 0

    def __post_init__(self):
        check_positive_int(self.period_length, "period_length")

    def index(self, timestamp) -> int:
        return (int(timestamp) - self.t0) // self.period_length

    def group(self, items, timestamp=lambda item: item.timestamp) -> dict:
        """``{period: [items]}`` with periods in ascending order."""
        out = defaultdict(list)
        for item in items:
            out[self.index(timestamp(item))].append(item)
        return dict(sorted(out.items()))


def temporal_undersample(stream: Stream, period_length=30, seed=0) -> Stream:
    """Downsample the majority class of every period to that period's minority count.

    The output is a subset of the input; periods holding a single class
    are kept whole.
    """
    records = list(stream)
    labels = {r.true_label for r in records}
    if None in labels:
        raise ValueError("undersampling needs every record labeled")
    if len(labels) > 2:
        raise ValueError(f"undersampling needs a binary stream, got labels {sorted(labels)}")
    if not records:
        return stream
    rng = np.random.default_rng(seed)
    partition = PeriodPartition(period_length, min(r.timestamp for r in records))
    keep = []
    for period, members in partition.group(records).items():
        by_label = defaultdict(list)
        for r in members:
            by_label[r.true_label].append(r)
        if len(by_label) < 2:
            logger.warning("period %d holds a single class; left untouched", period)
            keep.extend(members)
            continue
        (lab_a, recs_a), (lab_b, recs_b) = sorted(by_label.items())
        minority, majority = (recs_a, recs_b) if len(recs_a) <= len(recs_b) else (recs_b, recs_a)
        keep.extend(minority)
        chosen = rng.choice(len(majority), size=len(minority), replace=False)
        keep.extend(majority[i] for i in sorted(chosen))
    return Stream(tuple(keep), stream.class_alphabet)


@dataclass(frozen=True)
class FeatureRecord:
    """A featurized record, as consumed by :func:`temporal_oversample`."""

    id: str
    features: object  # FeatureVector or 1-D array
    label: str
    timestamp: int

    synthetic = False

    def to_json(self) -> dict:
        return {"id": self.id, "ts": self.timestamp, "label": self.label,
                "features": _entries_json(self.features), "synthetic": self.synthetic}


@dataclass(frozen=True)
class SyntheticRecord(FeatureRecord):
    """Point on the segment between two same-class, same-period parents.

    ``features = x_a + u * (x_b - x_a)`` and the timestamp is the
    interpolated parent day rounded half up. It carries no tokens.
    """

    parents: tuple = ()
    u: float = 0.0

    synthetic = True

    def to_json(self) -> dict:
        out = super().to_json()
        out.update(parents=list(self.parents), u=self.u)
        return out


def _entries_json(features):
    if isinstance(features, FeatureVector):
        return {"dim": features.dim, "entries": {str(k): v for k, v in sorted(features.entries.items())}}
    return np.asarray(features, dtype=float).tolist()


def _as_feature_record(item, position) -> FeatureRecord:
    if isinstance(item, FeatureRecord):
        return item
    if len(item) == 3:
        features, label, ts = item
        return FeatureRecord(str(position), features, label, int(ts))
    rid, features, label, ts = item
    return FeatureRecord(str(rid), features, label, int(ts))


def _matrix(records):
    first = records[0].features
    if isinstance(first, FeatureVector):
        rows, cols, vals = [], [], []
        for i, r in enumerate(records):
            for j, v in r.features.entries.items():
                rows.append(i)
                cols.append(j)
                vals.append(v)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(len(records), first.dim))
    return np.vstack([np.asarray(r.features, dtype=float).ravel() for r in records])


def interpolate(a, b, u):
    """``a + u * (b - a)`` for two feature vectors of the same kind."""
    if isinstance(a, FeatureVector):
        keys = set(a.entries) | set(b.entries)
        entries = {}
        for k in keys:
            va, vb = a.entries.get(k, 0.0), b.entries.get(k, 0.0)
            v = va + u * (vb - va)
            if v != 0.0:
                entries[k] = max(v, 0.0)  # guards a -0.0 style round-off
        return FeatureVector(a.dim, entries)
    a = np.asarray(a, dtype=float)
    return a + u * (np.asarray(b, dtype=float) - a)


def round_half_up(x) -> int:
    return int(math.floor(x + 0.5))


def allocate(total: int, weights) -> list:
    """Split ``total`` proportionally to ``weights`` (largest remainder, ties to the earlier)."""
    weights = [max(float(w), 0.0) for w in weights]
    norm = sum(weights)
    if total <= 0 or norm <= 0:
        return [0] * len(weights)
    shares = [total * w / norm for w in weights]
    counts = [int(math.floor(s)) for s in shares]
    order = sorted(range(len(shares)), key=lambda i: (-(shares[i] - counts[i]), i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return counts


def temporal_oversample(records, period_length=30, k_neighbors=5, target_ratio=1.0,
                        seed=0, temporal=True, minority_label: Optional[str] = None) -> list:
    """SMOTE restricted to neighbors of the same class and the same period.

    ``records`` holds :class:`FeatureRecord` items or ``(features, label,
    timestamp)`` / ``(id, features, label, timestamp)`` tuples.
    ``target_ratio`` is the wanted minority/majority ratio; the missing
    count is spread over periods in proportion to each period's own
    deficit. ``temporal=False`` is the period-blind control: one period
    spans the whole input.

    Returns the input records followed by the synthetic ones.
    """
    check_positive_int(k_neighbors, "k_neighbors")
    if target_ratio <= 0:
        raise ValueError(f"target_ratio must be positive, got {target_ratio}")
    items = [_as_feature_record(item, i) for i, item in enumerate(records)]
    if not items:
        return []
    counts = defaultdict(int)
    for r in items:
        counts[r.label] += 1
    if len(counts) != 2:
        raise ValueError(f"oversampling needs exactly two classes, got {sorted(counts)}")
    if minority_label is None:
        minority_label = min(counts, key=lambda lab: (counts[lab], lab))
    majority_label = next(lab for lab in counts if lab != minority_label)

    t0 = min(r.timestamp for r in items)
    if temporal:
        partition = PeriodPartition(period_length, t0)
    else:
        span = max(r.timestamp for r in items) - t0 + 1
        partition = PeriodPartition(span, t0)
    periods = partition.group(items)

    need = math.ceil(target_ratio * counts[majority_label] - counts[minority_label] - 1e-9)
    deficits = []
    for members in periods.values():
        n_major = sum(1 for r in members if r.label == majority_label)
        n_minor = len(members) - n_major
        deficits.append(max(target_ratio * n_major - n_minor, 0.0))
    quotas = allocate(need, deficits)

    rng = np.random.default_rng(seed)
    synthetic = []
    for (period, members), quota in zip(periods.items(), quotas):
        if quota == 0:
            continue
        pool = [r for r in members if r.label == minority_label]
        if len(pool) < 2:
            logger.warning("period %d has %d minority record(s); %d synthetic record(s) skipped",
                           period, len(pool), quota)
            continue
        k = min(k_neighbors, len(pool) - 1)
        nn = NearestNeighbors(n_neighbors=k + 1, algorithm="brute").fit(_matrix(pool))
        _, neighbors = nn.kneighbors(_matrix(pool))
        for _ in range(quota):
            i = int(rng.integers(len(pool)))
            # drop the point itself, wherever distance ties placed it
            candidates = [j for j in neighbors[i] if j != i][:k]
            j = int(candidates[int(rng.integers(len(candidates)))])
            u = float(rng.random())
            a, b = pool[i], pool[j]
            synthetic.append(SyntheticRecord(
                id=f"syn{len(synthetic):07d}",
                features=interpolate(a.features, b.features, u),
                label=minority_label,
                timestamp=round_half_up(a.timestamp + u * (b.timestamp - a.timestamp)),
                parents=(a.id, b.id),
                u=u,
            ))
    return items + synthetic


def cross_period_parents(records, period_length=30, t0=None) -> int:
    """Count synthetic records whose parents fall in different periods."""
    originals = {r.id: r for r in records if not r.synthetic}
    if t0 is None:
        t0 = min(r.timestamp for r in originals.values())
    partition = PeriodPartition(period_length, t0)
    n = 0
    for r in records:
        if r.synthetic:
            a, b = (originals[p] for p in r.parents)
            if partition.index(a.timestamp) != partition.index(b.timestamp):
                n += 1
    return n
