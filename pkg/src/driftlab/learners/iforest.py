"""Isolation forest, batch-fit on normal data only.

Trees are stored as flat arrays so scoring walks all samples level by
level with numpy. A sample reaching a leaf that held ``size`` training
points gets ``depth + c(size)`` as its path length.

Attributes that are constant in a node's sample are still eligible split
attributes (split value = the constant). Training points all go left, but
a test value above the training range goes right into an empty leaf and
is isolated, which is what makes never-seen system calls stand out.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_is_fitted

from driftlab.validation import check_dense


def harmonic_number(k: int) -> float:
    """``sum(1/i for i in 1..k)``."""
    return math.fsum(1.0 / i for i in range(1, k + 1))


def average_path_length(n: int) -> float:
    """``c(n) = 2 H(n-1) - 2 (n-1) / n``: mean unsuccessful-search depth of a BST."""
    if n <= 1:
        return 0.0
    return 2.0 * harmonic_number(n - 1) - 2.0 * (n - 1) / n


def anomaly_score(mean_path_length, sample_size):
    """``2 ** (-E[h] / c(psi))``."""
    return 2.0 ** (-np.asarray(mean_path_length, dtype=float) / average_path_length(sample_size))


class IsolationTree:
    """One isolation tree in array form.

    ``feature[i] == -1`` marks a leaf; ``size[i]`` is the number of training
    points that reached node ``i``. Samples with ``x[feature] <= split`` go
    to ``left``.
    """

    def __init__(self, height_limit, rng):
        self.height_limit = height_limit
        self.rng = rng
        self.feature, self.split, self.left, self.right, self.size = [], [], [], [], []

    def _node(self, size):
        for arr, v in ((self.feature, -1), (self.split, 0.0), (self.left, -1),
                       (self.right, -1), (self.size, size)):
            arr.append(v)
        return len(self.size) - 1

    def build(self, X):
        stack = [(self._node(len(X)), X, 0)]
        while stack:
            node, data, depth = stack.pop()
            if depth >= self.height_limit or len(data) <= 1:
                continue
            q = int(self.rng.integers(X.shape[1]))
            col = data[:, q]
            lo, hi = col.min(), col.max()
            p = float(self.rng.uniform(lo, hi)) if hi > lo else float(lo)
            mask = col <= p
            left = self._node(int(mask.sum()))
            right = self._node(int(len(data) - mask.sum()))
            self.feature[node], self.split[node] = q, p
            self.left[node], self.right[node] = left, right
            stack.append((left, data[mask], depth + 1))
            stack.append((right, data[~mask], depth + 1))
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.split = np.asarray(self.split)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.size = np.asarray(self.size, dtype=np.int64)
        self._leaf_adjust = np.array([average_path_length(int(s)) for s in self.size])
        return self

    def path_length(self, X):
        node = np.zeros(len(X), dtype=np.int64)
        depth = np.zeros(len(X))
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            idx = rows[active]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.split[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            depth[idx] += 1.0
            active = self.feature[node] >= 0
        return depth + self._leaf_adjust[node]


class IsolationForest(OutlierMixin, BaseEstimator):
    """Isolation forest anomaly detector.

    Parameters
    ----------
    n_estimators : int
        Number of trees.
    max_samples : int
        Subsample size per tree; capped at the number of training points.
    threshold : float
        Scores at or above it are flagged anomalous by ``predict``.
    random_state : int or None
    """

    def __init__(self, n_estimators=100, max_samples=256, threshold=0.5, random_state=None):
        self.n_estimators = n_estimators
        self.max_samples = max_samples
        self.threshold = threshold
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_dense(X)
        if len(X) < 2:
            raise ValueError("isolation forest needs at least 2 training points")
        rng = np.random.default_rng(self.random_state)
        psi = min(self.max_samples, len(X))
        self.sample_size_ = psi
        self.height_limit_ = math.ceil(math.log2(psi))
        self.n_features_in_ = X.shape[1]
        self.estimators_ = []
        for _ in range(self.n_estimators):
            idx = rng.choice(len(X), size=psi, replace=False)
            self.estimators_.append(IsolationTree(self.height_limit_, rng).build(X[idx]))
        return self

    def mean_path_length(self, X):
        check_is_fitted(self, "estimators_")
        X = check_dense(X)
        total = np.zeros(len(X))
        for tree in self.estimators_:
            total += tree.path_length(X)
        return total / len(self.estimators_)

    def score_samples(self, X):
        """Anomaly score ``s`` in (0, 1]; higher means more anomalous."""
        return anomaly_score(self.mean_path_length(X), self.sample_size_)

    def decision_function(self, X):
        return self.score_samples(X) - self.threshold

    def predict(self, X):
        """``-1`` for anomalies, ``1`` for inliers (scikit-learn convention)."""
        return np.where(self.score_samples(X) >= self.threshold, -1, 1)
