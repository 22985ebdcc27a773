"""Small input-validation helpers shared by the estimators."""

import math
import numbers

import numpy as np
from scipy import sparse


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_fraction(value, name, closed=False):
    """Require ``value`` in (0, 1), or (0, 1] when ``closed``."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    ok = 0.0 < value <= 1.0 if closed else 0.0 < value < 1.0
    if not ok:
        interval = "(0, 1]" if closed else "(0, 1)"
        raise ValueError(f"{name} must lie in {interval}, got {value!r}")
    return float(value)


def check_entries(x):
    """Return the sparse ``{index: value}`` mapping behind ``x``.

    Accepts a :class:`~driftlab.features.FeatureVector`, a plain mapping,
    or a 1-D dense array. Values must be finite and nonnegative.
    """
    entries = getattr(x, "entries", None)
    if entries is not None:
        return entries
    if isinstance(x, dict):
        for k, v in x.items():
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"feature {k} has invalid value {v!r}")
        return x
    arr = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("features must be finite and nonnegative")
    nz = np.flatnonzero(arr)
    return {int(i): float(arr[i]) for i in nz}


def iter_rows(X):
    """Yield per-sample feature mappings from a batch.

    ``X`` may be a list of feature vectors / mappings, a dense 2-D array or
    a scipy sparse matrix.
    """
    if sparse.issparse(X):
        X = sparse.csr_matrix(X)
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            yield {int(j): float(v) for j, v in zip(X.indices[lo:hi], X.data[lo:hi])}
        return
    if isinstance(X, np.ndarray):
        if X.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {X.shape}")
        for row in X:
            yield check_entries(row)
        return
    for row in X:
        yield check_entries(row)


def check_dense(X):
    """Turn a batch of feature vectors into a 2-D float array."""
    if sparse.issparse(X):
        return np.asarray(X.todense(), dtype=float)
    if isinstance(X, np.ndarray):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {X.shape}")
        return X
    rows = list(X)
    if not rows:
        raise ValueError("empty batch")
    if hasattr(rows[0], "to_dense"):
        return np.vstack([r.to_dense() for r in rows])
    return np.asarray(rows, dtype=float)
