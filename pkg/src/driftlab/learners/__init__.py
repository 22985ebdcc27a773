from driftlab.learners.base import OnlineClassifier
from driftlab.learners.forest import AdaptiveRandomForest
from driftlab.learners.hoeffding import HoeffdingTreeClassifier, hoeffding_bound
from driftlab.learners.iforest import IsolationForest, average_path_length
from driftlab.learners.naive_bayes import MultinomialNB

LEARNERS = {
    "nb": MultinomialNB,
    "ht": HoeffdingTreeClassifier,
    "arf": AdaptiveRandomForest,
}


def make_learner(name, **params):
    try:
        return LEARNERS[name](**params)
    except KeyError:
        raise ValueError(f"unknown incremental learner {name!r}") from None


__all__ = [
    "AdaptiveRandomForest",
    "HoeffdingTreeClassifier",
    "IsolationForest",
    "MultinomialNB",
    "OnlineClassifier",
    "average_path_length",
    "hoeffding_bound",
    "make_learner",
]
