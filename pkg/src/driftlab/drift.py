"""Supervised drift detectors fed with per-example error indicators.

DDM and EDDM report two levels (warning, drift); ADWIN only reports
drift. Every detector resets its statistics right after signalling a
drift (ADWIN drops the older part of its window instead of forgetting
everything).
"""

from __future__ import annotations

import enum
import math

from sklearn.base import BaseEstimator


class DriftSignal(str, enum.Enum):
    NORMAL = "normal"
    WARNING = "warning"
    DRIFT = "drift"

    def __str__(self):
        return self.value


class DriftDetector(BaseEstimator):
    """Common surface: ``update(value) -> DriftSignal`` and ``reset()``."""

    has_warning = True

    def reset(self):
        raise NotImplementedError

    def update(self, value) -> DriftSignal:
        raise NotImplementedError

    @property
    def name(self):
        return type(self).__name__.lower()


def ddm_level(p, s, p_min, s_min, warning_level=2.0, drift_level=3.0) -> DriftSignal:
    """Classify the current ``p + s`` against the recorded minimum."""
    level = p + s
    if level > p_min + drift_level * s_min:
        return DriftSignal.DRIFT
    if level > p_min + warning_level * s_min:
        return DriftSignal.WARNING
    return DriftSignal.NORMAL


class DDM(DriftDetector):
    """Drift Detection Method: monitors the running error rate.

    Parameters
    ----------
    min_samples : int
        No level is signalled before this many updates.
    warning_level, drift_level : float
        Multiples of ``s_min`` above ``p_min`` that trigger each level.
    """

    def __init__(self, min_samples=30, warning_level=2.0, drift_level=3.0):
        self.min_samples = min_samples
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.n_detections = 0
        self.reset()

    def reset(self):
        self.n = 0
        self.p = 0.0
        self.s = 0.0
        self.p_min = math.inf
        self.s_min = math.inf
        self.signal = DriftSignal.NORMAL

    def update(self, value) -> DriftSignal:
        self.n += 1
        self.p += (float(value) - self.p) / self.n
        self.s = math.sqrt(self.p * (1.0 - self.p) / self.n)
        if self.n < self.min_samples:
            self.signal = DriftSignal.NORMAL
            return self.signal
        if self.p + self.s <= self.p_min + self.s_min:
            self.p_min, self.s_min = self.p, self.s
        signal = ddm_level(self.p, self.s, self.p_min, self.s_min,
                           self.warning_level, self.drift_level)
        if signal is DriftSignal.DRIFT:
            self.n_detections += 1
            self.reset()
        self.signal = signal
        return signal


class EDDM(DriftDetector):
    """Early Drift Detection Method: monitors the distance between errors.

    ``m = mean + 2 * std`` of the gaps between consecutive errors is compared
    with its running maximum; warning below ``warning_level`` of the maximum,
    drift below ``drift_level``.
    """

    def __init__(self, min_errors=30, warning_level=0.95, drift_level=0.90):
        self.min_errors = min_errors
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.n_detections = 0
        self.reset()

    def reset(self):
        self.n = 0
        self.n_errors = 0
        self.last_error_at = 0
        self.mean = 0.0
        self._m2 = 0.0
        self.m_max = 0.0
        self.signal = DriftSignal.NORMAL

    @property
    def std(self):
        return math.sqrt(self._m2 / self.n_errors) if self.n_errors else 0.0

    @property
    def ratio(self):
        if self.m_max <= 0.0:
            return 1.0
        return (self.mean + 2.0 * self.std) / self.m_max

    def update(self, value) -> DriftSignal:
        self.n += 1
        if not value:
            return self.signal
        self.n_errors += 1
        gap = self.n - self.last_error_at
        self.last_error_at = self.n
        delta = gap - self.mean
        self.mean += delta / self.n_errors
        self._m2 += delta * (gap - self.mean)
        m = self.mean + 2.0 * self.std
        if m > self.m_max:
            self.m_max = m
        if self.n_errors < self.min_errors:
            self.signal = DriftSignal.NORMAL
            return self.signal
        ratio = m / self.m_max
        if ratio < self.drift_level:
            self.n_detections += 1
            self.reset()
            self.signal = DriftSignal.DRIFT
        elif ratio < self.warning_level:
            self.signal = DriftSignal.WARNING
        else:
            self.signal = DriftSignal.NORMAL
        return self.signal


class ADWIN(DriftDetector):
    """Adaptive windowing over an exponential histogram of bucket sums.

    Level ``i`` buckets summarise ``2**i`` consecutive values; at most
    ``max_buckets`` buckets are kept per level. Every ``clock`` updates all
    bucket boundaries are tested as cut points and the older sub-window is
    dropped while some cut separates the two means by at least
    ``sqrt(ln(4 W / delta) / (2 m))`` with ``m = 1 / (1/n0 + 1/n1)``.
    """

    has_warning = False

    def __init__(self, delta=0.002, max_buckets=5, clock=1):
        self.delta = delta
        self.max_buckets = max_buckets
        self.clock = clock
        self.n_detections = 0
        self.reset()

    def reset(self):
        self._rows = [[]]  # _rows[level] holds bucket sums, oldest first
        self._pending = []  # values seen since the last clock tick
        self._width = 0
        self._total = 0.0
        self._ticks = 0
        self.signal = DriftSignal.NORMAL

    @property
    def width(self):
        self._flush()
        return self._width

    @property
    def total(self):
        self._flush()
        return self._total

    @property
    def mean(self):
        width = self.width
        return self._total / width if width else 0.0

    @property
    def n_buckets(self):
        self._flush()
        return sum(len(r) for r in self._rows)

    def buckets(self):
        """``(size, sum)`` pairs from oldest to newest."""
        self._flush()
        out = []
        for level in range(len(self._rows) - 1, -1, -1):
            size = 1 << level
            out.extend((size, s) for s in self._rows[level])
        return out

    def _flush(self):
        # Inserting a batch and compressing afterwards yields the same
        # histogram as compressing after every insert: merges always pair
        # the two oldest buckets of a level.
        pending = self._pending
        if not pending:
            return
        rows = self._rows
        rows[0].extend(pending)
        self._width += len(pending)
        total = self._total
        for v in pending:
            total += v
        self._total = total
        pending.clear()
        m = self.max_buckets
        level = 0
        while len(rows[level]) > m:
            row = rows[level]
            n_merge = (len(row) - m + 1) // 2
            merged = [row[2 * i] + row[2 * i + 1] for i in range(n_merge)]
            del row[:2 * n_merge]
            if level + 1 == len(rows):
                rows.append([])
            rows[level + 1].extend(merged)
            level += 1

    def _find_cut(self):
        """Number of oldest buckets to drop at the first firing cut, or 0."""
        width, total = self._width, self._total
        if width < 2:
            return 0
        c = math.log(4.0 * width / self.delta) / 2.0
        n0 = 0
        s0 = 0.0
        k = 0
        rows = self._rows
        for level in range(len(rows) - 1, -1, -1):
            size = 1 << level
            for s in rows[level]:
                n0 += size
                s0 += s
                k += 1
                n1 = width - n0
                if n1 <= 0:
                    return 0
                diff = s0 / n0 - (total - s0) / n1
                if diff * diff >= c * (1.0 / n0 + 1.0 / n1):
                    return k
        return 0

    def _drop_oldest(self, k):
        rows = self._rows
        level = len(rows) - 1
        while k:
            while not rows[level]:
                level -= 1
            rows[level].pop(0)
            self._width -= 1 << level
            k -= 1
        while len(rows) > 1 and not rows[-1]:
            rows.pop()
        self._total = sum(sum(r) for r in rows)

    def update(self, value) -> DriftSignal:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"ADWIN input must be finite, got {value!r}")
        self._pending.append(value)
        self._ticks += 1
        if self._ticks % self.clock:
            self.signal = DriftSignal.NORMAL
            return self.signal
        self._flush()
        detected = False
        while True:
            k = self._find_cut()
            if not k:
                break
            self._drop_oldest(k)
            detected = True
        if detected:
            self.n_detections += 1
        self.signal = DriftSignal.DRIFT if detected else DriftSignal.NORMAL
        return self.signal


DETECTORS = {"ddm": DDM, "eddm": EDDM, "adwin": ADWIN}


def make_detector(name, **params):
    if name in (None, "none"):
        return None
    try:
        return DETECTORS[name](**params)
    except KeyError:
        raise ValueError(f"unknown detector {name!r}") from None
