"""Expert-judgement scoring: min-max normalization, unweighted SAW, competition ranking."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .model import CRITERION_NAMES, Dataset
from .ingestion import aggregate_experts
from .validation import check_score_matrix, check_vector


def normalize(X) -> np.ndarray:
    """Column-wise min-max scaling to [0, 1].

    A constant column carries no information for ranking and maps to 0.0.
    """
    X = check_score_matrix(X)
    return _normalize(X)


def _normalize(X: np.ndarray) -> np.ndarray:
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    return _scale(X, lo, span)


def _scale(X, lo, span):
    out = np.zeros_like(X)
    live = span != 0
    out[:, live] = (X[:, live] - lo[live]) / span[live]
    return out


def saw(X_norm) -> np.ndarray:
    """Simple additive weighting: the row sum of normalized criterion values."""
    X_norm = check_score_matrix(X_norm)
    return X_norm.sum(axis=1)


def rank_competition(scores, higher_is_better: bool = True) -> np.ndarray:
    """Competition ("1-1-3") ranks: rank = 1 + number of strictly better scores.

    Ties are detected with exact float equality.

    >>> rank_competition([3.5, 3.5, 1.0]).tolist()
    [1, 1, 3]
    """
    s = check_vector(scores, name="scores")
    return _competition(s if higher_is_better else -s)


def _competition(s: np.ndarray) -> np.ndarray:
    ordered = np.sort(s)
    better = s.size - np.searchsorted(ordered, s, side="right")
    return better.astype(np.int64) + 1


def initial_ranking(X) -> tuple[np.ndarray, np.ndarray]:
    """SAW scores and competition ranks of raw expert scores (before any perturbation)."""
    X = check_score_matrix(X)
    scores = _normalize(X).sum(axis=1)
    return scores, _competition(scores)


def score_matrix(dataset: Dataset, expert: str | None = None) -> tuple[list[str], np.ndarray]:
    """Raw score matrix of a dataset, rows in UCA order and columns in criterion order.

    With ``expert=None`` each row is the mean over all expert sheets of that UCA.
    Otherwise only that expert's sheets are used and UCAs the expert did not
    score are left out.
    """
    ids, rows = [], []
    for uca in dataset.ucas:
        if expert is None:
            rows.append(aggregate_experts(uca.expert_scores).as_tuple())
        elif expert in uca.expert_scores:
            rows.append(uca.expert_scores[expert].as_tuple())
        else:
            continue
        ids.append(uca.id)
    return ids, np.asarray(rows, dtype=np.float64).reshape(len(rows), len(CRITERION_NAMES))


class SawRanker(TransformerMixin, BaseEstimator):
    """Min-max normalization + unweighted SAW as a scikit-learn estimator.

    ``fit`` learns the per-criterion minimum and maximum of the cohort,
    ``transform`` applies the scaling, ``decision_function`` returns SAW scores
    and ``predict`` returns competition ranks (1 = highest concern) among the
    rows passed in.
    """

    def fit(self, X, y=None):
        X = check_score_matrix(X, estimator=self)
        self.n_features_in_ = X.shape[1]
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.data_range_ = self.data_max_ - self.data_min_
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_score_matrix(X, n_features=self.n_features_in_, estimator=self)
        return _scale(X, self.data_min_, self.data_range_)

    def decision_function(self, X):
        return self.transform(X).sum(axis=1)

    def predict(self, X):
        return _competition(self.decision_function(X))

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)
