"""Shared protocol for incremental classifiers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from driftlab.validation import check_entries, iter_rows


class OnlineClassifier(ClassifierMixin, BaseEstimator):
    """Record-at-a-time classifier with scikit-learn batch wrappers.

    Subclasses implement ``learn_one``, ``predict_proba_one`` and ``reset``.
    Before anything is learned, predictions fall back to ``classes[0]``
    with uniform scores over ``classes``.
    """

    def _init_classes(self):
        self.classes_ = list(self.classes) if self.classes else []

    def _see_label(self, y):
        if y not in self.classes_:
            self.classes_.append(y)
            self.classes_.sort()

    def _uniform(self):
        if not self.classes_:
            return {}
        p = 1.0 / len(self.classes_)
        return {c: p for c in self.classes_}

    @property
    def default_label(self):
        return self.classes[0] if self.classes else None

    def learn_one(self, x, y, weight=1.0):
        raise NotImplementedError

    def predict_proba_one(self, x) -> dict:
        raise NotImplementedError

    def reset(self):
        raise NotImplementedError

    def predict_one(self, x):
        """Most probable label; ties go to the lexicographically smaller one."""
        return self.label_from_proba(self.predict_proba_one(x))

    def label_from_proba(self, proba):
        if not proba:
            return self.default_label
        best = max(proba.values())
        return min(c for c, p in proba.items() if p == best)

    # scikit-learn style batch API

    def partial_fit(self, X, y, classes=None, sample_weight=None):
        if classes is not None:
            for c in classes:
                self._see_label(c)
        weights = sample_weight if sample_weight is not None else [1.0] * len(y)
        for x, label, w in zip(iter_rows(X), y, weights):
            self.learn_one(x, label, w)
        return self

    def fit(self, X, y, sample_weight=None):
        self.reset()
        return self.partial_fit(X, y, sample_weight=sample_weight)

    def predict(self, X):
        return np.asarray([self.predict_one(x) for x in iter_rows(X)], dtype=object)

    def predict_proba(self, X):
        rows = [self.predict_proba_one(x) for x in iter_rows(X)]
        return np.asarray([[r.get(c, 0.0) for c in self.classes_] for r in rows])


def normalize_scores(counts: dict) -> dict:
    total = sum(counts.values())
    if total <= 0:
        return {}
    return {c: v / total for c, v in counts.items()}


__all__ = ["OnlineClassifier", "check_entries", "normalize_scores"]
