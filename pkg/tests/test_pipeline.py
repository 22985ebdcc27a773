import logging

import pytest

from driftlab.drift import ADWIN, DDM, DriftDetector, DriftSignal
from driftlab.features import VocabularyVectorizer
from driftlab.generators import GeneratorConfig, generate_text_stream
from driftlab.learners import HoeffdingTreeClassifier, MultinomialNB
from driftlab.pipeline import PipelineError, PipelineMode, StreamPipeline
from driftlab.records import MALICIOUS, Stream, temporal_split
from driftlab.resampling import SyntheticRecord
from conftest import make_record

W, D, N = DriftSignal.WARNING, DriftSignal.DRIFT, DriftSignal.NORMAL


class ScriptedDetector(DriftDetector):
    """Replays ``script`` (one signal per update), then stays Normal."""

    def __init__(self, script=(), has_warning=True):
        self.script = script
        self.has_warning = has_warning
        self.reset()

    def reset(self):
        self.calls = getattr(self, "calls", 0)
        self.resets = getattr(self, "resets", -1) + 1

    def update(self, value):
        signal = self.script[self.calls] if self.calls < len(self.script) else N
        self.calls += 1
        return signal


@pytest.fixture(scope="module")
def drift_stream():
    return generate_text_stream(GeneratorConfig(n_records=3000, drift_at=(365,), seed=0))


def _pipeline(mode="retrain_extractor", detector=None, learner=None):
    if detector is None and mode != "no_detector":
        detector = ScriptedDetector()
    return StreamPipeline(VocabularyVectorizer(), learner or MultinomialNB(), detector, mode=mode)


def _feed(pipeline, records):
    signals = []
    for r in records:
        pipeline.process(r)
        signals.append(pipeline.deliver_label(r, r.true_label))
    return signals


def test_bootstrap_then_predict(tiny_stream):
    pipe = _pipeline().bootstrap(tiny_stream)
    assert pipe.predict(tiny_stream[0]).pred in {"benign", "malicious"}


def test_bootstrap_is_deterministic(drift_stream):
    train, test = temporal_split(drift_stream, 0.25)
    probe = test[:200]
    a = _pipeline(learner=HoeffdingTreeClassifier()).bootstrap(train)
    b = _pipeline(learner=HoeffdingTreeClassifier()).bootstrap(train)
    assert [a.predict(r) for r in probe] == [b.predict(r) for r in probe]


def test_bootstrap_errors(tiny_stream):
    with pytest.raises(ValueError):
        _pipeline().bootstrap(Stream())
    unlabeled = Stream((make_record(0, 1, label=None),))
    with pytest.raises(ValueError, match="no label"):
        _pipeline().bootstrap(unlabeled)


def test_mode_needs_detector():
    with pytest.raises(ValueError):
        StreamPipeline(VocabularyVectorizer(), MultinomialNB(), None, mode="static_extractor")


def test_use_before_bootstrap(tiny_stream):
    with pytest.raises(PipelineError):
        _pipeline().process(tiny_stream[0])


def test_unknown_tokens_predict_from_the_prior(tiny_stream):
    pipe = _pipeline("static_extractor").bootstrap(tiny_stream)
    record = make_record(99, 9, ("never", "seen"))
    assert pipe.E.transform_one(record).entries == {}
    assert pipe.predict(record).pred == pipe.C.predict_one({})


def test_predict_is_pure(tiny_stream):
    pipe = _pipeline().bootstrap(tiny_stream)
    r = make_record(50, 9, ("bad", "lib"))
    assert pipe.predict(r) == pipe.predict(r)
    assert pipe.n_pending == 0


def test_normal_path_updates_model_only(tiny_stream):
    pipe = _pipeline().bootstrap(tiny_stream)
    before = dict(pipe.C.class_weight_)
    r = make_record(50, 9, ("bad", "lib"), "malicious")
    pipe.process(r)
    assert pipe.deliver_label(r, "malicious") is N
    assert pipe.C.class_weight_["malicious"] == before["malicious"] + 1
    assert pipe.warning_buffer == []
    assert pipe.reservoir[-1].id == r.id


def test_label_delivery_errors(tiny_stream):
    pipe = _pipeline().bootstrap(tiny_stream)
    r = make_record(50, 9)
    with pytest.raises(PipelineError, match="unknown"):
        pipe.deliver_label(r, "benign")
    pipe.process(r)
    pipe.deliver_label(r, "benign")
    with pytest.raises(PipelineError, match="twice"):
        pipe.deliver_label(r, "benign")
    with pytest.raises(PipelineError, match="twice"):
        pipe.process(r)


def test_forced_drift_refits_on_the_warning_buffer(drift_stream):
    train = [r for r in drift_stream if r.timestamp < 365]
    after = [r for r in drift_stream if r.timestamp >= 365]
    pipe = _pipeline(detector=ScriptedDetector((W,) * 49 + (D,))).bootstrap(Stream(tuple(train)))
    signals = _feed(pipe, after[:50])
    assert signals[-1] is D and set(signals[:-1]) == {W}
    buffered = after[:50]
    assert len({r.true_label for r in buffered}) == 2
    assert set(pipe.E.vocabulary_) == {t for r in buffered for t in r.tokens}
    assert pipe.warning_buffer == [] and pipe.n_retrains == 1
    assert pipe.D.resets == 1
    assert [e["kind"] for e in pipe.event_log] == ["warning", "drift"]


def test_retraining_the_extractor_removes_unknown_tokens(drift_stream):
    train = Stream(tuple(r for r in drift_stream if r.timestamp < 365))
    after = [r for r in drift_stream if r.timestamp >= 365]
    pipe = _pipeline(detector=ScriptedDetector((W,) * 199 + (D,))).bootstrap(train)
    later = [r for r in after[400:] if r.true_label == MALICIOUS]
    assert all(pipe.E.oov_rate(r) == 1.0 for r in later)
    _feed(pipe, after[:200])
    assert all(pipe.E.oov_rate(r) == 0.0 for r in later)
    assert all(pipe.E.transform_one(r).entries for r in later)


def test_static_extractor_keeps_the_vocabulary(drift_stream):
    train = Stream(tuple(r for r in drift_stream if r.timestamp < 365))
    after = [r for r in drift_stream if r.timestamp >= 365]
    pipe = _pipeline("static_extractor", ScriptedDetector((W,) * 99 + (D,))).bootstrap(train)
    extractor, learner = pipe.E, pipe.C
    _feed(pipe, after[:100])
    assert pipe.E is extractor
    assert pipe.C is not learner


def test_drift_without_warning_uses_the_reservoir(tiny_stream):
    pipe = _pipeline(detector=ScriptedDetector((D,), has_warning=False)).bootstrap(tiny_stream)
    r = make_record(50, 9, ("fresh",), "malicious")
    pipe.process(r)
    pipe.deliver_label(r, "malicious")
    # reservoir held the 5 training records plus r
    assert pipe.E.n_docs_ == 6
    assert "fresh" in pipe.E.vocabulary_


def test_drift_with_nothing_to_retrain_on(tiny_stream):
    pipe = _pipeline(detector=ScriptedDetector((D,))).bootstrap(tiny_stream)
    pipe.reservoir = type(pipe.reservoir)(maxlen=0)
    r = make_record(50, 9)
    pipe.process(r)
    with pytest.raises(PipelineError, match="neither"):
        pipe.deliver_label(r, "benign")


def test_single_class_buffer_is_augmented(tiny_stream, caplog):
    pipe = _pipeline(detector=ScriptedDetector((W, D))).bootstrap(tiny_stream)
    records = [make_record(50, 9, ("x1",), "benign"), make_record(51, 9, ("x2",), "benign")]
    with caplog.at_level(logging.WARNING, logger="driftlab.pipeline"):
        _feed(pipe, records)
    assert "single class" in caplog.text
    assert {"x1", "x2", "bad"} <= set(pipe.E.vocabulary_)


def test_return_to_normal_clears_the_buffer(tiny_stream):
    pipe = _pipeline(detector=ScriptedDetector((W, W, N))).bootstrap(tiny_stream)
    records = [make_record(50 + i, 9) for i in range(3)]
    _feed(pipe, records[:2])
    assert len(pipe.warning_buffer) == 2
    _feed(pipe, records[2:])
    assert pipe.warning_buffer == []


def test_no_detector_matches_a_plain_learner(drift_stream):
    train, test = temporal_split(drift_stream, 0.25)
    pipe = _pipeline("no_detector", learner=HoeffdingTreeClassifier()).bootstrap(train)
    vec = VocabularyVectorizer().fit(train)
    tree = HoeffdingTreeClassifier()
    for r in train:
        tree.learn_one(vec.transform_one(r), r.true_label)
    for r in test:
        x = vec.transform_one(r)
        assert pipe.process(r).pred == tree.predict_one(x)
        pipe.deliver_label(r, r.true_label)
        tree.learn_one(x, r.true_label)


def test_event_log_order_with_real_detectors(drift_stream):
    train, test = temporal_split(drift_stream, 0.25)
    for detector in (DDM(), ADWIN()):
        pipe = _pipeline(detector=detector).bootstrap(train)
        _feed(pipe, test)
        times = [e["t"] for e in pipe.event_log]
        assert times == sorted(times)
        assert any(e["kind"] == "drift" for e in pipe.event_log)
        if not detector.has_warning:
            assert all(e["kind"] == "drift" for e in pipe.event_log)


def test_synthetic_records_are_rejected(tiny_stream):
    pipe = _pipeline().bootstrap(tiny_stream)
    synthetic = SyntheticRecord("syn0", {0: 1.0}, "malicious", 3, parents=("a", "b"), u=0.5)
    with pytest.raises(PipelineError, match="synthetic"):
        pipe.process(synthetic)
    with pytest.raises(PipelineError, match="synthetic"):
        _pipeline().bootstrap([synthetic])


def test_mode_aliases():
    assert PipelineMode.parse("static") is PipelineMode.STATIC_EXTRACTOR
    with pytest.raises(ValueError):
        PipelineMode.parse("sometimes")
