"""Drift-aware stream pipelines with a feature extractor in the loop.

The pipeline keeps an extractor ``E``, a classifier ``C`` and an optional
detector ``D``. Predicting (:meth:`StreamPipeline.process`) and learning
(:meth:`StreamPipeline.deliver_label`) are separate calls so that labels
can arrive late.

Modes:

``NO_DETECTOR``
    plain prequential learning; ``E`` is fitted once.
``STATIC_EXTRACTOR``
    on drift, ``C`` is replaced by a learner trained on the old features
    of the warning buffer (or the reservoir).
``RETRAIN_EXTRACTOR``
    on drift, both ``E`` and ``C`` are refitted on the raw records of the
    warning buffer (or the reservoir).
"""

from __future__ import annotations

import enum
import logging
from collections import OrderedDict, deque
from dataclasses import dataclass, replace

from sklearn.base import clone

from driftlab.drift import DriftSignal

logger = logging.getLogger(__name__)


class PipelineMode(str, enum.Enum):
    NO_DETECTOR = "no_detector"
    STATIC_EXTRACTOR = "static_extractor"
    RETRAIN_EXTRACTOR = "retrain_extractor"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"none": cls.NO_DETECTOR, "static": cls.STATIC_EXTRACTOR,
                   "retrain": cls.RETRAIN_EXTRACTOR}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"unknown pipeline mode {value!r}") from None


@dataclass(frozen=True)
class Prediction:
    id: str
    t: int
    pred: str
    score: float

    def to_json(self):
        return {"id": self.id, "t": self.t, "pred": self.pred, "score": self.score}


class PipelineError(RuntimeError):
    pass


class StreamPipeline:
    """Extractor + classifier + detector, driven one record at a time.

    Parameters
    ----------
    featurizer, learner : estimator prototypes
        Cloned on bootstrap and on every retrain.
    detector : detector prototype or None
        Ignored in ``NO_DETECTOR`` mode.
    mode : PipelineMode or str
    reservoir_capacity : int
        Most recent labeled raw records kept as the retrain source when the
        warning buffer is empty (ADWIN never warns).
    pending_capacity : int
        Maximum number of predictions awaiting their label.
    positive_label : str
        Class whose probability is reported as the prediction score.
    """

    def __init__(self, featurizer, learner, detector=None, mode=PipelineMode.RETRAIN_EXTRACTOR,
                 reservoir_capacity=1000, pending_capacity=1_000_000,
                 positive_label="malicious"):
        self.featurizer = featurizer
        self.learner = learner
        self.detector = detector
        self.mode = PipelineMode.parse(mode)
        self.reservoir_capacity = reservoir_capacity
        self.pending_capacity = pending_capacity
        self.positive_label = positive_label
        if self.mode is not PipelineMode.NO_DETECTOR and detector is None:
            raise ValueError(f"mode {self.mode.value} needs a drift detector")
        self.E = self.C = self.D = None

    @property
    def detector_name(self):
        return self.D.name if self.D is not None else "none"

    def bootstrap(self, train, augment=None):
        """Fit ``E`` on ``train`` and train a fresh ``C`` on one pass over it.

        ``augment(E, records)`` may return extra ``(features, label,
        timestamp)`` items in ``E``'s feature space (synthetic minority
        samples); ``C`` then sees them interleaved with the records by day.
        """
        records = list(train)
        if not records:
            raise ValueError("bootstrap needs at least one training record")
        for r in records:
            _reject_synthetic(r)
            if r.true_label is None:
                raise ValueError(f"bootstrap record {r.id!r} has no label")
        self.E = clone(self.featurizer).fit(records)
        if augment is None:
            self.C = self._train_learner(self.E, records)
        else:
            items = [(r.timestamp, 0, i, self.E.transform_one(r), r.true_label)
                     for i, r in enumerate(records)]
            items += [(int(ts), 1, i, x, y) for i, (x, y, ts) in enumerate(augment(self.E, records))]
            self.C = clone(self.learner)
            for *_, x, y in sorted(items, key=lambda item: item[:3]):
                self.C.learn_one(x, y)
        self.D = None if self.mode is PipelineMode.NO_DETECTOR else clone(self.detector)
        self.warning_buffer = []
        self.reservoir = deque(records[-self.reservoir_capacity:], maxlen=self.reservoir_capacity)
        self.event_log = []
        self._pending = OrderedDict()
        self._delivered = set()
        self._in_warning = False
        self.n_retrains = 0
        return self

    def _train_learner(self, extractor, records):
        learner = clone(self.learner)
        for r in records:
            learner.learn_one(extractor.transform_one(r), r.true_label)
        return learner

    def _check_ready(self):
        if self.C is None:
            raise PipelineError("pipeline used before bootstrap()")

    def predict(self, record) -> Prediction:
        """Predict without recording anything."""
        self._check_ready()
        return self._predict_features(record, self.E.transform_one(record))

    def _predict_features(self, record, x):
        proba = self.C.predict_proba_one(x)
        label = self.C.label_from_proba(proba)
        return Prediction(record.id, record.timestamp, label,
                          float(proba.get(self.positive_label, 0.0)))

    def process(self, record) -> Prediction:
        """Extract features with the current ``E`` and predict with ``C``.

        The prediction is kept until :meth:`deliver_label` presents the
        record's label.
        """
        _reject_synthetic(record)
        self._check_ready()
        x = self.E.transform_one(record)
        pred = self._predict_features(record, x)
        if record.id in self._pending or record.id in self._delivered:
            raise PipelineError(f"record {record.id!r} processed twice")
        if len(self._pending) >= self.pending_capacity:
            raise PipelineError(
                f"{len(self._pending)} predictions await labels; pending_capacity exceeded"
            )
        # the features are reused at label time unless E has been refitted since
        self._pending[record.id] = (pred, x, self.E)
        return pred

    def _log(self, t, kind):
        self.event_log.append({"t": int(t), "kind": kind, "detector": self.detector_name})

    def deliver_label(self, record, true_label, now=None) -> DriftSignal:
        """Feed the outcome of an earlier prediction and adapt.

        ``now`` is the stream time of delivery, used for the event log; it
        defaults to the record's own timestamp.
        """
        self._check_ready()
        if record.id in self._delivered:
            raise PipelineError(f"label for {record.id!r} delivered twice")
        entry = self._pending.pop(record.id, None)
        if entry is None:
            raise PipelineError(f"label for unknown record {record.id!r}")
        pred, x, extractor = entry
        self._delivered.add(record.id)
        t = record.timestamp if now is None else now
        labeled = record if record.true_label == true_label else _relabel(record, true_label)

        if self.D is None:
            signal = DriftSignal.NORMAL
        else:
            signal = self.D.update(1.0 if pred.pred != true_label else 0.0)

        if signal is DriftSignal.DRIFT:
            if self._in_warning:
                self.warning_buffer.append(labeled)
            self.reservoir.append(labeled)
            self._log(t, "drift")
            self._retrain(t)
            return signal

        if extractor is not self.E:
            x = self.E.transform_one(labeled)
        self.C.learn_one(x, true_label)
        self.reservoir.append(labeled)
        if signal is DriftSignal.WARNING:
            if not self._in_warning:
                self._log(t, "warning")
            self._in_warning = True
            self.warning_buffer.append(labeled)
        else:
            self._in_warning = False
            self.warning_buffer.clear()
        return signal

    def _retrain_source(self, t):
        source = list(self.warning_buffer)
        if source and len({r.true_label for r in source}) < 2:
            logger.warning("day %s: warning buffer holds a single class; "
                           "augmenting with the reservoir", t)
            ids = {r.id for r in source}
            source = [r for r in self.reservoir if r.id not in ids] + source
        if not source:
            source = list(self.reservoir)
        if not source:
            raise PipelineError("drift signalled but neither warning buffer nor reservoir holds data")
        return source

    def _retrain(self, t):
        source = self._retrain_source(t)
        if self.mode is PipelineMode.RETRAIN_EXTRACTOR:
            self.E = clone(self.featurizer).fit(source)
        self.C = self._train_learner(self.E, source)
        self.D.reset()
        self.warning_buffer = []
        self._in_warning = False
        self.n_retrains += 1

    @property
    def n_pending(self):
        return len(self._pending)


def _reject_synthetic(record):
    if getattr(record, "synthetic", False):
        raise PipelineError(f"record {record.id!r} is synthetic and carries no raw tokens")


def _relabel(record, label):
    return replace(record, true_label=label)
