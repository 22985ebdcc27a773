"""Token featurizers: bag-of-words, TF-IDF and the hashing trick.

Both vectorizers follow the scikit-learn transformer protocol
(``fit``/``transform`` on batches, returning scipy CSR matrices) and add
``transform_one`` for the record-at-a-time stream pipeline.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

STATE_VERSION = 1


@dataclass
class FeatureVector:
    """Sparse nonnegative vector of declared dimension."""

    dim: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        for idx, val in self.entries.items():
            if not 0 <= idx < self.dim:
                raise ValueError(f"index {idx} outside dimension {self.dim}")
            if not (val >= 0.0 and math.isfinite(val)):
                raise ValueError(f"invalid feature value {val!r} at index {idx}")

    def __getitem__(self, idx):
        return self.entries.get(idx, 0.0)

    def __len__(self):
        return len(self.entries)

    @property
    def mass(self):
        return sum(self.entries.values())

    def norm(self):
        return math.sqrt(sum(v * v for v in self.entries.values()))

    def to_dense(self):
        out = np.zeros(self.dim)
        for i, v in self.entries.items():
            out[i] = v
        return out

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr, dtype=float).ravel()
        nz = np.flatnonzero(arr)
        return cls(arr.size, {int(i): float(arr[i]) for i in nz})


def fnv1a_64(token: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 bytes of ``token``."""
    h = FNV64_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * FNV64_PRIME) & _MASK64
    return h


def _tokens(doc):
    tokens = getattr(doc, "tokens", doc)
    if isinstance(tokens, str):
        return tokens.split()
    return tokens


def _to_csr(vectors, dim):
    indptr, indices, data = [0], [], []
    for v in vectors:
        for i in sorted(v.entries):
            indices.append(i)
            data.append(v.entries[i])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), indptr),
        shape=(len(indptr) - 1, dim),
    )


class VocabularyVectorizer(TransformerMixin, BaseEstimator):
    """Vocabulary-based vectorizer (raw counts or TF-IDF).

    Parameters
    ----------
    mode : {"tfidf", "counts"}
        ``counts`` gives raw term counts; ``tfidf`` multiplies the raw count
        by ``ln((1 + n_docs) / (1 + df)) + 1``.
    min_freq : int
        Tokens appearing in fewer documents are left out of the vocabulary.
    normalize : bool or None
        L2-normalize output rows. ``None`` means on for tfidf, off for counts.

    Attributes
    ----------
    vocabulary_ : dict
        token -> column index, in first-seen order.
    doc_freq_ : dict
        token -> number of fitted documents containing it (vocabulary only).
    n_docs_ : int
    """

    def __init__(self, mode="tfidf", min_freq=1, normalize=None):
        self.mode = mode
        self.min_freq = min_freq
        self.normalize = normalize

    def _check_params(self):
        if self.mode not in ("tfidf", "counts"):
            raise ValueError(f"mode must be 'tfidf' or 'counts', got {self.mode!r}")
        if not isinstance(self.min_freq, int) or self.min_freq < 1:
            raise ValueError(f"min_freq must be a positive integer, got {self.min_freq!r}")

    @property
    def normalize_(self):
        return self.mode == "tfidf" if self.normalize is None else bool(self.normalize)

    def fit(self, X, y=None):
        self._check_params()
        df = Counter()
        order = {}
        n_docs = 0
        for doc in X:
            n_docs += 1
            for tok in _tokens(doc):
                if tok not in order:
                    order[tok] = len(order)
            df.update(set(_tokens(doc)))
        if n_docs == 0:
            raise ValueError("cannot fit a vocabulary on an empty corpus")
        kept = [t for t in sorted(order, key=order.__getitem__) if df[t] >= self.min_freq]
        if not kept:
            raise ValueError(f"no token reaches min_freq={self.min_freq}")
        self._set_state({t: i for i, t in enumerate(kept)}, {t: df[t] for t in kept}, n_docs)
        return self

    def _set_state(self, vocabulary, doc_freq, n_docs):
        self.vocabulary_ = vocabulary
        self.doc_freq_ = doc_freq
        self.n_docs_ = n_docs
        self.idf_ = {
            t: math.log((1 + n_docs) / (1 + doc_freq[t])) + 1.0 for t in vocabulary
        }

    @property
    def dim(self):
        check_is_fitted(self, "vocabulary_")
        return len(self.vocabulary_)

    def transform_one(self, doc) -> FeatureVector:
        """Vectorize a single record; out-of-vocabulary tokens are dropped."""
        vocab = self.vocabulary_
        counts = {}
        for tok in _tokens(doc):
            idx = vocab.get(tok)
            if idx is not None:
                counts[tok] = counts.get(tok, 0) + 1
        if self.mode == "tfidf":
            idf = self.idf_
            entries = {vocab[t]: c * idf[t] for t, c in counts.items()}
        else:
            entries = {vocab[t]: float(c) for t, c in counts.items()}
        if self.normalize_ and entries:
            norm = math.sqrt(sum(v * v for v in entries.values()))
            entries = {i: v / norm for i, v in entries.items()}
        return FeatureVector(len(vocab), entries)

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        return _to_csr([self.transform_one(doc) for doc in X], self.dim)

    def oov_rate(self, doc) -> float:
        """Fraction of the document's tokens missing from the vocabulary."""
        tokens = list(_tokens(doc))
        if not tokens:
            return 0.0
        return sum(t not in self.vocabulary_ for t in tokens) / len(tokens)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.asarray(sorted(self.vocabulary_, key=self.vocabulary_.__getitem__), dtype=object)

    def to_dict(self) -> dict:
        check_is_fitted(self, "vocabulary_")
        return {
            "version": STATE_VERSION,
            "kind": "vocabulary",
            "params": self.get_params(),
            "vocabulary": list(self.get_feature_names_out()),
            "doc_freq": [self.doc_freq_[t] for t in self.get_feature_names_out()],
            "n_docs": self.n_docs_,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, state: dict) -> "VocabularyVectorizer":
        if state.get("kind") != "vocabulary" or state.get("version") != STATE_VERSION:
            raise ValueError("not a serialized VocabularyVectorizer state")
        est = cls(**state["params"])
        vocab = {t: i for i, t in enumerate(state["vocabulary"])}
        est._set_state(vocab, dict(zip(state["vocabulary"], state["doc_freq"])), state["n_docs"])
        return est

    @classmethod
    def from_json(cls, text: str) -> "VocabularyVectorizer":
        return cls.from_dict(json.loads(text))


class HashingVectorizer(TransformerMixin, BaseEstimator):
    """Stateless term counts over ``fnv1a_64(token) % dim`` buckets."""

    def __init__(self, dim=2 ** 18):
        self.dim = dim

    def _check_params(self):
        d = self.dim
        if not isinstance(d, int) or d < 1 or d & (d - 1):
            raise ValueError(f"dim must be a power of two, got {d!r}")

    def fit(self, X=None, y=None):
        self._check_params()
        return self

    def index(self, token: str) -> int:
        return fnv1a_64(token) % self.dim

    def transform_one(self, doc) -> FeatureVector:
        entries = {}
        dim = self.dim
        for tok in _tokens(doc):
            i = fnv1a_64(tok) % dim
            entries[i] = entries.get(i, 0.0) + 1.0
        return FeatureVector(dim, entries)

    def transform(self, X):
        self._check_params()
        return _to_csr([self.transform_one(doc) for doc in X], self.dim)

    def oov_rate(self, doc) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"version": STATE_VERSION, "kind": "hashing", "params": self.get_params()}

    @classmethod
    def from_dict(cls, state: dict) -> "HashingVectorizer":
        if state.get("kind") != "hashing":
            raise ValueError("not a serialized HashingVectorizer state")
        return cls(**state["params"])


def featurizer_from_dict(state: dict):
    kind = state.get("kind")
    if kind == "vocabulary":
        return VocabularyVectorizer.from_dict(state)
    if kind == "hashing":
        return HashingVectorizer.from_dict(state)
    raise ValueError(f"unknown featurizer state kind {kind!r}")
