"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .errors import EmptyInput


def check_score_matrix(X, *, n_features=None, estimator=None) -> np.ndarray:
    """Return ``X`` as a finite 2-D float64 array with at least one row."""
    try:
        X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True,
                        ensure_min_samples=1, estimator=estimator)
    except ValueError as exc:
        if "0 sample" in str(exc):
            raise EmptyInput(str(exc)) from None
        raise
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} columns, expected {n_features}")
    return X


def check_vector(x, *, name="values") -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array with at least one element."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyInput(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or infinity")
    return arr


def check_ids(ids, n: int) -> list[str]:
    if ids is None:
        return [str(i) for i in range(n)]
    ids = [str(i) for i in ids]
    if len(ids) != n:
        raise ValueError(f"got {len(ids)} ids for {n} rows")
    if len(set(ids)) != n:
        raise ValueError("ids must be unique")
    return ids
