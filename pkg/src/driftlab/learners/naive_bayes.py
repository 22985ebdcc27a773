import math

from driftlab.learners.base import OnlineClassifier
from driftlab.validation import check_entries


class MultinomialNB(OnlineClassifier):
    """Incremental multinomial naive Bayes with additive smoothing.

    Class-conditional feature likelihoods come from the summed feature mass
    per class; the smoothing vocabulary is every feature index seen so far.
    """

    def __init__(self, alpha=1.0, classes=("benign", "malicious")):
        self.alpha = alpha
        self.classes = classes
        self.reset()

    def reset(self):
        self._init_classes()
        self.class_weight_ = {}
        self.feature_mass_ = {}  # class -> {feature: mass}
        self.total_mass_ = {}
        self.features_seen_ = set()
        return self

    def learn_one(self, x, y, weight=1.0):
        entries = check_entries(x)
        self._see_label(y)
        self.class_weight_[y] = self.class_weight_.get(y, 0.0) + weight
        mass = self.feature_mass_.setdefault(y, {})
        total = 0.0
        for i, v in entries.items():
            mass[i] = mass.get(i, 0.0) + weight * v
            total += weight * v
            self.features_seen_.add(i)
        self.total_mass_[y] = self.total_mass_.get(y, 0.0) + total
        return self

    def joint_log_likelihood(self, x) -> dict:
        entries = check_entries(x)
        n = sum(self.class_weight_.values())
        vocab = len(self.features_seen_)
        out = {}
        for c in self.classes_:
            prior = self.class_weight_.get(c, 0.0)
            if prior <= 0:
                continue
            mass = self.feature_mass_.get(c, {})
            denom = self.total_mass_.get(c, 0.0) + self.alpha * vocab
            ll = math.log(prior / n)
            for i, v in entries.items():
                if i not in self.features_seen_:
                    continue
                ll += v * math.log((mass.get(i, 0.0) + self.alpha) / denom)
            out[c] = ll
        return out

    def predict_proba_one(self, x) -> dict:
        jll = self.joint_log_likelihood(x)
        if not jll:
            return self._uniform()
        top = max(jll.values())
        exp = {c: math.exp(v - top) for c, v in jll.items()}
        z = sum(exp.values())
        proba = {c: 0.0 for c in self.classes_}
        proba.update({c: v / z for c, v in exp.items()})
        return proba
