"""Hoeffding tree over sparse nonnegative features.

Splits are binary on feature presence (``x[f] > 0``); leaves predict the
majority class. A leaf attempts a split every ``grace_period`` units of
weight and splits when the information-gain advantage of the best feature
over the runner-up (or over not splitting) exceeds the Hoeffding bound, or
when the bound falls under ``tau``.
"""

from __future__ import annotations

import math
import random

from driftlab.learners.base import OnlineClassifier
from driftlab.validation import check_entries


def hoeffding_bound(value_range, delta, n):
    """``sqrt(R^2 ln(1/delta) / (2n))``."""
    return math.sqrt(value_range * value_range * math.log(1.0 / delta) / (2.0 * n))


def entropy(counts) -> float:
    total = sum(counts)
    if total <= 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def presence_gain(class_counts: dict, present: dict) -> float:
    """Information gain of splitting ``class_counts`` on feature presence."""
    total = sum(class_counts.values())
    if total <= 0:
        return 0.0
    pres = [present.get(c, 0.0) for c in class_counts]
    absent = [max(class_counts[c] - present.get(c, 0.0), 0.0) for c in class_counts]
    w_p = sum(pres)
    w_a = total - w_p
    return (entropy(class_counts.values())
            - (w_p * entropy(pres) + w_a * entropy(absent)) / total)


class _Leaf:
    __slots__ = ("counts", "total", "best", "stats", "last_attempt", "depth")

    def __init__(self, counts=None, depth=0):
        self.counts = dict(counts or {})
        self.total = sum(self.counts.values())
        self.best = None  # majority label, smallest on ties
        if self.counts:
            top = max(self.counts.values())
            self.best = min(c for c, w in self.counts.items() if w == top)
        self.stats = {}  # class -> {feature: weight of examples with feature present}
        self.last_attempt = self.total
        self.depth = depth


class _Split:
    __slots__ = ("feature", "present", "absent", "depth")

    def __init__(self, feature, present, absent, depth):
        self.feature = feature
        self.present = present
        self.absent = absent
        self.depth = depth


class HoeffdingTreeClassifier(OnlineClassifier):
    """Incremental decision tree (VFDT) with presence splits.

    Parameters
    ----------
    grace_period : float
        Leaf weight accumulated between split attempts.
    delta : float
        Split confidence.
    tau : float
        Tie threshold on the Hoeffding bound.
    max_features : None, int or "sqrt"
        Size of the random feature subset evaluated at each split attempt;
        ``None`` evaluates every feature seen at the leaf.
    max_depth : int or None
    classes : sequence
        Labels known up front; ``classes[0]`` is the default prediction.
    random_state : int or None
        Seeds the feature subsets.
    """

    def __init__(self, grace_period=200, delta=1e-7, tau=0.05, max_features=None,
                 max_depth=None, classes=("benign", "malicious"), random_state=None):
        self.grace_period = grace_period
        self.delta = delta
        self.tau = tau
        self.max_features = max_features
        self.max_depth = max_depth
        self.classes = classes
        self.random_state = random_state
        self.reset()

    def reset(self):
        self._init_classes()
        self.root_ = _Leaf()
        self.n_features_ = 0
        self.n_splits_ = 0
        self._rng = random.Random(self.random_state)
        return self

    def _sort(self, entries):
        node, parent, side = self.root_, None, None
        while type(node) is _Split:
            parent = node
            if entries.get(node.feature, 0.0) > 0.0:
                node, side = node.present, True
            else:
                node, side = node.absent, False
        return node, parent, side

    def _leaf(self, entries):
        node = self.root_
        while type(node) is _Split:
            node = node.present if entries.get(node.feature, 0.0) > 0.0 else node.absent
        return node

    def learn_one(self, x, y, weight=1.0):
        return self._learn(check_entries(x), y, weight, getattr(x, "dim", 0))

    def _learn(self, entries, y, weight, dim, route=None, present=None):
        # ``route`` is a precomputed ``_sort(entries)`` result, ``present``
        # the features of ``entries`` with a positive value
        if y not in self.classes_:
            self._see_label(y)
        if dim > self.n_features_:
            self.n_features_ = dim
        leaf, parent, side = route or self._sort(entries)
        counts = leaf.counts
        w_y = counts[y] = counts.get(y, 0.0) + weight
        best = leaf.best
        if best is None or (best != y and (w_y > counts[best] or (w_y == counts[best] and y < best))):
            leaf.best = y
        st = leaf.stats.get(y)
        if st is None:
            st = leaf.stats[y] = {}
        get = st.get
        if present is None:
            present = [f for f, v in entries.items() if v > 0.0]
        for f in present:
            st[f] = get(f, 0.0) + weight
        leaf.total += weight
        total = leaf.total
        if total - leaf.last_attempt >= self.grace_period:
            leaf.last_attempt = total
            self._attempt_split(leaf, parent, side, total)
        return self

    def _subspace_size(self, n_observed):
        mf = self.max_features
        if mf is None:
            return n_observed
        if mf == "sqrt":
            dim = max(self.n_features_, n_observed)
            return max(1, math.ceil(math.sqrt(dim)))
        return int(mf)

    def _attempt_split(self, leaf, parent, side, total):
        if self.max_depth is not None and leaf.depth >= self.max_depth:
            return
        counts = leaf.counts
        if sum(1 for v in counts.values() if v > 0) < 2:
            return
        stats = leaf.stats
        features = sorted({f for st in stats.values() for f in st})
        m = self._subspace_size(len(features))
        if m < len(features):
            features = self._rng.sample(features, m)

        def present(f):
            return {c: st[f] for c, st in stats.items() if f in st}

        ranked = sorted((-presence_gain(counts, present(f)), f) for f in features)
        if not ranked or -ranked[0][0] <= 0.0:
            return
        best, best_f = -ranked[0][0], ranked[0][1]
        # not splitting has gain 0, so the runner-up is never below it
        second = max(-ranked[1][0], 0.0) if len(ranked) > 1 else 0.0
        n_classes = max(len(self.classes_), 2)
        eps = hoeffding_bound(math.log2(n_classes), self.delta, total)
        if best - second >= eps or eps < self.tau:
            pres = present(best_f)
            absent = {c: max(w - pres.get(c, 0.0), 0.0) for c, w in counts.items()}
            node = _Split(best_f, _Leaf(pres, leaf.depth + 1),
                          _Leaf(absent, leaf.depth + 1), leaf.depth)
            if parent is None:
                self.root_ = node
            elif side:
                parent.present = node
            else:
                parent.absent = node
            self.n_splits_ += 1

    def predict_proba_one(self, x) -> dict:
        return self._proba(check_entries(x))

    def _leaf_label(self, leaf):
        """``label_from_proba`` of a leaf without building the dict."""
        if leaf.total <= 0:
            return min(self.classes_) if self.classes_ else self.default_label
        return leaf.best

    def _proba(self, entries):
        leaf = self._leaf(entries)
        total = leaf.total
        if total <= 0:
            return self._uniform()
        proba = {c: 0.0 for c in self.classes_}
        for c, w in leaf.counts.items():
            proba[c] = w / total
        return proba

    @property
    def depth(self):
        def walk(node):
            if type(node) is _Leaf:
                return 0
            return 1 + max(walk(node.present), walk(node.absent))
        return walk(self.root_)

    @property
    def n_leaves(self):
        return self.n_splits_ + 1
