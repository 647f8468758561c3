import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from uca_prioritizer.ej import SawRanker, initial_ranking, normalize, rank_competition, saw, score_matrix
from uca_prioritizer.errors import EmptyInput

from conftest import WORKED
from oracles import brute_competition_ranks, brute_normalize

WORKED_NORMALIZED = np.array([
    [1.0, 1.0, 0.5, 1.0, 0.0],
    [0.5, 0.0, 1.0, 1.0, 1.0],
    [0.0, 0.0, 0.0, 0.0, 1.0],
])


def test_normalize_worked_example():
    np.testing.assert_allclose(normalize(WORKED), WORKED_NORMALIZED, atol=1e-12)


def test_normalize_matches_brute_force():
    np.testing.assert_array_equal(normalize(WORKED), np.array(brute_normalize(WORKED.tolist())))


def test_single_row_normalizes_to_zero():
    np.testing.assert_array_equal(normalize([[3, 1, 2, 3, 1]]), np.zeros((1, 5)))


def test_constant_column_maps_to_zero():
    out = normalize([[1, 5], [2, 5], [3, 5]])
    np.testing.assert_array_equal(out[:, 1], 0.0)
    np.testing.assert_array_equal(out[:, 0], [0, 0.5, 1])


def test_saw_worked_example():
    np.testing.assert_array_equal(saw(WORKED_NORMALIZED), [3.5, 3.5, 1.0])
    np.testing.assert_array_equal(saw(np.zeros((2, 5))), [0.0, 0.0])


@pytest.mark.parametrize("scores,expected", [
    ([3.5, 3.5, 1.0], [1, 1, 3]),
    ([5], [1]),
    ([1, 2, 2, 3], [4, 2, 2, 1]),
])
def test_rank_competition(scores, expected):
    assert rank_competition(scores).tolist() == expected
    assert brute_competition_ranks(scores) == expected


def test_rank_competition_lower_is_better():
    assert rank_competition([1, 2, 2, 3], higher_is_better=False).tolist() == [1, 2, 2, 4]


def test_rank_competition_empty():
    with pytest.raises(EmptyInput):
        rank_competition([])


def test_initial_ranking_worked_example():
    scores, ranks = initial_ranking(WORKED)
    np.testing.assert_array_equal(scores, [3.5, 3.5, 1.0])
    assert ranks.tolist() == [1, 1, 3]


def test_case_study_initial_ranking(dataset):
    # the top three UCAs tie on the initial SAW score
    ids, X = score_matrix(dataset)
    scores, ranks = initial_ranking(X)
    got = dict(zip(ids, scores))
    assert got["UCA-18.2.1"] == got["UCA-8.2.1"] == got["UCA-6.1.1"] == 4.5
    assert dict(zip(ids, ranks))["UCA-47.1.1"] == 10


matrices = st.integers(1, 8).flatmap(lambda n: arrays(
    np.float64, (n, 5), elements=st.integers(0, 3).map(float)))


@given(matrices, st.lists(st.sampled_from([0.25, 0.5, 1.0, 2.0, 8.0]), min_size=5, max_size=5),
       st.lists(st.integers(-5, 5), min_size=5, max_size=5))
def test_ranking_invariant_under_positive_affine_maps(X, a, b):
    # power-of-two scales and integer shifts keep the arithmetic exact
    Y = X * np.array(a) + np.array(b)
    np.testing.assert_array_equal(normalize(X), normalize(Y))
    assert initial_ranking(X)[1].tolist() == initial_ranking(Y)[1].tolist()


@given(matrices, st.lists(st.floats(0.1, 10), min_size=5, max_size=5),
       st.lists(st.floats(-5, 5), min_size=5, max_size=5))
def test_normalization_cancels_any_positive_affine_map(X, a, b):
    Y = X * np.array(a) + np.array(b)
    np.testing.assert_allclose(normalize(X), normalize(Y), atol=1e-12)


@given(matrices)
def test_normalize_properties(X):
    N = normalize(X)
    assert ((N >= 0) & (N <= 1)).all()
    for j in range(X.shape[1]):
        if np.ptp(X[:, j]) > 0:
            assert N[:, j].min() == 0 and N[:, j].max() == 1
            np.testing.assert_allclose(normalize(N)[:, j], N[:, j])
        else:
            assert (N[:, j] == 0).all()


@settings(max_examples=200)
@given(st.lists(st.integers(-5, 5).map(lambda v: v / 2), min_size=1, max_size=30))
def test_rank_equals_one_plus_strictly_better(scores):
    assert rank_competition(scores).tolist() == brute_competition_ranks(scores)


def test_saw_ranker_estimator():
    est = SawRanker()
    assert est.get_params() == {}
    clone(est)
    with pytest.raises(NotFittedError):
        est.transform(WORKED)
    np.testing.assert_allclose(est.fit_transform(WORKED), WORKED_NORMALIZED)
    np.testing.assert_array_equal(est.decision_function(WORKED), [3.5, 3.5, 1.0])
    assert est.predict(WORKED).tolist() == [1, 1, 3]
    assert est.fit_predict(WORKED).tolist() == [1, 1, 3]
    with pytest.raises(ValueError, match="columns"):
        est.transform(WORKED[:, :4])


def test_saw_ranker_in_pipeline():
    from sklearn.pipeline import make_pipeline
    from sklearn.preprocessing import FunctionTransformer
    pipe = make_pipeline(FunctionTransformer(lambda X: X * 2), SawRanker())
    np.testing.assert_allclose(pipe.fit_transform(WORKED), WORKED_NORMALIZED)
