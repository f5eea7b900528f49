import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from textcat.classifiers import KNNClassifier, knn_classify
from textcat.exceptions import NotFittedError

pytestmark = pytest.mark.property


def _oracle(Xtr, ytr, x, k, n_classes):
    """Sort by (distance, class, row), majority vote, ties by summed distance then class."""
    d = [(math.dist(row, x), int(c), i) for i, (row, c) in enumerate(zip(Xtr, ytr))]
    near = sorted(d)[:k]
    votes = [0] * n_classes
    total = [0.0] * n_classes
    for dist, c, _ in near:
        votes[c] += 1
        total[c] += dist
    return min(range(n_classes), key=lambda c: (-votes[c], total[c], c))


def test_self_match():
    X = np.array([[0.0, 1.0], [2.0, 2.0], [5.0, -1.0]])
    m = KNNClassifier().fit(X, [2, 0, 1])
    assert knn_classify(m, [2.0, 2.0]) == 0
    assert (m.predict(X) == [2, 0, 1]).all()


def test_k3_majority():
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0]])
    y = np.array([0, 0, 1, 1, 1])
    m = KNNClassifier(n_neighbors=3).fit(X, y)
    assert knn_classify(m, [0.5]) == 0
    assert knn_classify(m, [0.5]) == _oracle(X, y, [0.5], 3, 2)


def test_equidistant_tie_goes_to_lower_class():
    m = KNNClassifier(n_neighbors=1).fit(np.array([[-1.0], [1.0]]), [1, 0])
    assert knn_classify(m, [0.0]) == 0
    m = KNNClassifier(n_neighbors=2).fit(np.array([[-1.0], [1.0]]), [1, 0])
    assert knn_classify(m, [0.0]) == 0


def test_vote_tie_goes_to_smaller_distance_sum():
    X = np.array([[0.0], [3.0], [-1.0], [4.0]])
    y = np.array([1, 1, 0, 0])
    # k=4 from x=0.5: class 1 distances 0.5 + 2.5 = 3, class 0 1.5 + 3.5 = 5
    m = KNNClassifier(n_neighbors=4).fit(X, y)
    assert knn_classify(m, [0.5]) == 1


def test_k_capped_and_not_fitted():
    m = KNNClassifier(n_neighbors=10).fit(np.array([[0.0], [1.0], [5.0]]), [0, 1, 1])
    assert knn_classify(m, [0.0]) == 1
    with pytest.raises(NotFittedError):
        KNNClassifier().predict([[0.0]])


points = st.tuples(st.integers(1, 10), st.integers(1, 3)).flatmap(
    lambda s: st.tuples(arrays(np.float64, s, elements=st.integers(-3, 3).map(float)),
                        arrays(np.int64, s[0], elements=st.integers(0, 2)),
                        arrays(np.float64, (4, s[1]), elements=st.integers(-3, 3).map(float))))


@settings(max_examples=200, deadline=None)
@given(points, st.integers(1, 5))
def test_matches_brute_force_oracle(data, k):
    X, y, queries = data
    m = KNNClassifier(n_neighbors=k).fit(X, y)
    classes = m.classes_
    y_idx = np.searchsorted(classes, y)
    for q in queries:
        expected = classes[_oracle(X, y_idx, q, min(k, len(y)), len(classes))]
        assert knn_classify(m, q) == expected


def test_training_accuracy_distinct_rows():
    X = np.random.default_rng(0).normal(size=(50, 4))
    y = np.random.default_rng(1).integers(0, 4, 50)
    assert (KNNClassifier().fit(X, y).predict(X) == y).all()


def test_positive_scaling_invariance():
    rng = np.random.default_rng(2)
    X, Xt = rng.normal(size=(40, 3)), rng.normal(size=(20, 3))
    y = rng.integers(0, 3, 40)
    a = KNNClassifier(n_neighbors=3).fit(X, y).predict(Xt)
    b = KNNClassifier(n_neighbors=3).fit(X * 7.5, y).predict(Xt * 7.5)
    assert np.array_equal(a, b)
