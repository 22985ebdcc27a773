"""Adaptive Random Forest for evolving streams.

Each member is a Hoeffding tree restricted to random feature subsets at
every split attempt and trained with online bagging (Poisson weights).
Per member, a sensitive ADWIN starts a background tree on warning and a
conservative ADWIN swaps the background tree in on drift. Background
trees learn but never vote.
"""

from __future__ import annotations

import numpy as np

from driftlab.drift import ADWIN, DriftSignal
from driftlab.learners.base import OnlineClassifier
from driftlab.learners.hoeffding import HoeffdingTreeClassifier
from driftlab.validation import check_entries


class _Member:
    __slots__ = ("tree", "background", "warning", "drift")

    def __init__(self, tree, warning, drift):
        self.tree = tree
        self.background = None
        self.warning = warning
        self.drift = drift


class AdaptiveRandomForest(OnlineClassifier):
    """Ensemble of Hoeffding trees with per-tree drift recovery.

    Parameters
    ----------
    n_trees : int
    max_features : None, int or "sqrt"
        Feature subset size evaluated at each split attempt.
    lambda_value : float or None
        Poisson rate of the online-bagging weights; ``None`` trains every
        tree on every example with weight 1.
    drift_detection : bool
        Enables the per-tree warning/drift ADWIN pair.
    warning_delta, drift_delta : float
        Confidence of the warning and drift detectors.
    detector_clock : int
        Cut-check period of the per-tree detectors.
    """

    def __init__(self, n_trees=10, max_features="sqrt", lambda_value=6.0,
                 grace_period=200, delta=1e-7, tau=0.05, drift_detection=True,
                 warning_delta=0.01, drift_delta=0.001, detector_clock=32,
                 classes=("benign", "malicious"), random_state=None):
        self.n_trees = n_trees
        self.max_features = max_features
        self.lambda_value = lambda_value
        self.grace_period = grace_period
        self.delta = delta
        self.tau = tau
        self.drift_detection = drift_detection
        self.warning_delta = warning_delta
        self.drift_delta = drift_delta
        self.detector_clock = detector_clock
        self.classes = classes
        self.random_state = random_state
        self.reset()

    def reset(self):
        self._init_classes()
        self._rng = np.random.default_rng(self.random_state)
        self.members_ = [self._new_member() for _ in range(self.n_trees)]
        self.n_seen_ = 0
        self.events_ = []
        return self

    def _new_tree(self):
        return HoeffdingTreeClassifier(
            grace_period=self.grace_period, delta=self.delta, tau=self.tau,
            max_features=self.max_features, classes=tuple(self.classes_),
            random_state=int(self._rng.integers(2 ** 31)),
        )

    def _new_member(self):
        return _Member(
            self._new_tree(),
            ADWIN(self.warning_delta, clock=self.detector_clock),
            ADWIN(self.drift_delta, clock=self.detector_clock),
        )

    def learn_one(self, x, y, weight=1.0):
        entries = check_entries(x)
        dim = getattr(x, "dim", 0)
        if y not in self.classes_:
            self._see_label(y)
        self.n_seen_ += 1
        n = self.n_trees
        if self.lambda_value is None:
            ks = [1] * n
        else:
            ks = self._rng.poisson(self.lambda_value, n).tolist()
        present = [f for f, v in entries.items() if v > 0.0]
        for i, (member, k) in enumerate(zip(self.members_, ks)):
            tree = member.tree
            route = tree._sort(entries)
            if self.drift_detection:
                err = 1.0 if tree._leaf_label(route[0]) != y else 0.0
            if k > 0:
                tree._learn(entries, y, k * weight, dim, route, present)
                if member.background is not None:
                    member.background._learn(entries, y, k * weight, dim, None, present)
            if not self.drift_detection:
                continue
            if member.warning.update(err) is DriftSignal.DRIFT and member.background is None:
                member.background = self._new_tree()
                self.events_.append({"n": self.n_seen_, "tree": i, "kind": "warning"})
            if member.drift.update(err) is DriftSignal.DRIFT:
                member.tree = member.background or self._new_tree()
                member.background = None
                member.warning.reset()
                member.drift.reset()
                self.events_.append({"n": self.n_seen_, "tree": i, "kind": "drift"})
        return self

    def predict_proba_one(self, x) -> dict:
        entries = check_entries(x)
        scores = dict.fromkeys(self.classes_, 0.0)
        for member in self.members_:
            leaf = member.tree._leaf(entries)
            total = leaf.total
            if total > 0:
                for c, w in leaf.counts.items():
                    scores[c] = scores.get(c, 0.0) + w / total
            elif self.classes_:
                share = 1.0 / len(self.classes_)
                for c in self.classes_:
                    scores[c] += share
        total = sum(scores.values())
        if total <= 0:
            return self._uniform()
        return {c: v / total for c, v in scores.items()}

    @property
    def n_tree_swaps(self):
        return sum(1 for e in self.events_ if e["kind"] == "drift")
