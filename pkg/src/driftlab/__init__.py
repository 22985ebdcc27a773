"""Drift-aware stream learning for security data."""

from driftlab.drift import ADWIN, DDM, EDDM, DriftSignal, make_detector
from driftlab.evaluation import (
    ConfusionMatrix,
    DelayPolicy,
    MetricSeries,
    WindowSweepConfig,
    aut,
    metrics,
    run_prequential,
    window_sweep,
)
from driftlab.features import FeatureVector, HashingVectorizer, VocabularyVectorizer
from driftlab.generators import GeneratorConfig, TraceConfig, generate_text_stream, generate_traces
from driftlab.learners import (
    AdaptiveRandomForest,
    HoeffdingTreeClassifier,
    IsolationForest,
    MultinomialNB,
    make_learner,
)
from driftlab.pipeline import PipelineMode, StreamPipeline
from driftlab.records import Stream, StreamRecord, load_stream, temporal_split, write_stream

__version__ = "0.1.0"

__all__ = [
    "ADWIN",
    "DDM",
    "EDDM",
    "AdaptiveRandomForest",
    "ConfusionMatrix",
    "DelayPolicy",
    "DriftSignal",
    "FeatureVector",
    "GeneratorConfig",
    "HashingVectorizer",
    "HoeffdingTreeClassifier",
    "IsolationForest",
    "MetricSeries",
    "MultinomialNB",
    "PipelineMode",
    "Stream",
    "StreamPipeline",
    "StreamRecord",
    "TraceConfig",
    "VocabularyVectorizer",
    "WindowSweepConfig",
    "aut",
    "generate_text_stream",
    "generate_traces",
    "load_stream",
    "make_detector",
    "make_learner",
    "metrics",
    "run_prequential",
    "temporal_split",
    "window_sweep",
    "write_stream",
]
