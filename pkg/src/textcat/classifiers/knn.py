"""k-nearest-neighbour classification by Euclidean distance and majority vote."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from ..exceptions import NotFittedError
from ._base import as_dense

_CHUNK = 256


def _squared_distances(A, B):
    # exact pairwise differences; the expansion |a|^2 + |b|^2 - 2ab loses
    # precision for near-identical rows and can reorder near-ties
    out = np.empty((A.shape[0], B.shape[0]))
    for i, a in enumerate(A):
        d = B - a
        out[i] = np.einsum("ij,ij->i", d, d)
    return out


def vote(distances, labels, n_classes, k):
    """Majority label among the ``k`` nearest; ties go to the smaller summed
    distance, then to the lower class index.

    ``distances`` and ``labels`` describe all stored rows for one query.
    Equidistant rows at the k-th position are ranked by class index, then by
    row order.
    """
    order = np.lexsort((np.arange(labels.shape[0]), labels, distances))[:k]
    near = labels[order]
    votes = np.bincount(near, minlength=n_classes)
    dist_sum = np.bincount(near, weights=distances[order], minlength=n_classes)
    top = np.flatnonzero(votes == votes.max())
    if top.size == 1:
        return int(top[0])
    best = dist_sum[top].min()
    return int(top[np.flatnonzero(dist_sum[top] == best)[0]])


class KNNClassifier(ClassifierMixin, BaseEstimator):
    """Lazy learner storing the training rows.

    Parameters
    ----------
    n_neighbors : int
        Neighbourhood size k (capped at the number of stored rows).
    """

    def __init__(self, n_neighbors=1):
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        X, y = validate_data(self, X, y, accept_sparse="csr", dtype=np.float64)
        check_classification_targets(y)
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        self.classes_, self.y_ = np.unique(y, return_inverse=True)
        self.X_ = as_dense(X)
        self.metric_ = "euclidean"
        return self

    def kneighbors_vote(self, X):
        """Class indices (into ``classes_``) voted for each row of ``X``."""
        if getattr(self, "X_", None) is None or self.X_.shape[0] == 0:
            raise NotFittedError("KNNClassifier has no stored training rows")
        X = as_dense(validate_data(self, X, accept_sparse="csr", dtype=np.float64, reset=False))
        k = min(self.n_neighbors, self.X_.shape[0])
        n_classes = len(self.classes_)
        out = np.empty(X.shape[0], dtype=np.intp)
        for start in range(0, X.shape[0], _CHUNK):
            block = X[start:start + _CHUNK]
            d2 = _squared_distances(block, self.X_)
            for i, row in enumerate(np.sqrt(d2)):
                out[start + i] = vote(row, self.y_, n_classes, k)
        return out

    def predict(self, X):
        check_is_fitted(self, "X_")
        return self.classes_[self.kneighbors_vote(X)]


def knn_classify(model, x):
    """Class label for a single feature row."""
    return model.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
