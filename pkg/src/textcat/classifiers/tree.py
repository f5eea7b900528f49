"""C4.5-style decision tree (the J48 learner) on numeric features."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from . import _tree
from ._base import as_dense

__all__ = ["C45Classifier", "gain_ratio", "information_gain", "train_tree", "tree_classify"]


def _split_counts(y, x, threshold, n_classes=None):
    y = np.asarray(y)
    x = np.asarray(x, dtype=np.float64)
    if n_classes is None:
        n_classes = int(y.max()) + 1 if y.size else 0
    mask = x <= threshold
    left = np.bincount(y[mask], minlength=n_classes)
    right = np.bincount(y[~mask], minlength=n_classes)
    return left, right


def information_gain(y, x, threshold):
    """Entropy reduction (bits) from splitting labels ``y`` at ``x <= threshold``."""
    left, right = _split_counts(y, x, threshold)
    n = left.sum() + right.sum()
    child = (left.sum() * _tree.entropy(left) + right.sum() * _tree.entropy(right)) / n
    return float(_tree.entropy(left + right) - child)


def gain_ratio(y, x, threshold):
    """Information gain divided by split information, both in bits.

    Returns 0 when the split leaves one side empty (zero split information).
    """
    left, right = _split_counts(y, x, threshold)
    split_info = float(_tree.entropy([left.sum(), right.sum()]))
    if split_info <= 0:
        return 0.0
    return information_gain(y, x, threshold) / split_info


class C45Classifier(ClassifierMixin, BaseEstimator):
    """Binary-threshold decision tree grown by gain ratio with pessimistic pruning.

    Parameters
    ----------
    min_samples_leaf : int
        Minimum training rows on each side of a split.
    confidence : float in (0, 1)
        Confidence factor of the error-based pruning; smaller prunes harder.
    prune : bool
        Apply collapsing and subtree replacement after growth.
    criterion : {"gain_ratio", "gain"}
        Split score maximised over all (feature, threshold) candidates.
    max_features : int or None
        Random subspace size per node (used by the forest); None considers
        every feature.
    random_state : int, Generator or None
        Drives the per-node feature permutation when ``max_features`` is set.
    """

    def __init__(self, min_samples_leaf=2, confidence=0.25, prune=True, criterion="gain_ratio",
                 max_features=None, random_state=None):
        self.min_samples_leaf = min_samples_leaf
        self.confidence = confidence
        self.prune = prune
        self.criterion = criterion
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, accept_sparse="csr", dtype=np.float64)
        check_classification_targets(y)
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")
        if self.criterion not in ("gain_ratio", "gain"):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        X = as_dense(X)
        rng = np.random.default_rng(self.random_state)
        tree = _tree.grow(X, y_idx, len(self.classes_), self.min_samples_leaf, self.criterion,
                          self.max_features, rng)
        if self.prune:
            tree = _tree.prune(tree, self.confidence)
        self.tree_ = tree
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = as_dense(validate_data(self, X, accept_sparse="csr", dtype=np.float64, reset=False))
        return self.classes_[self.tree_.predict_index(X)]

    def predict_proba(self, X):
        check_is_fitted(self, "tree_")
        X = as_dense(validate_data(self, X, accept_sparse="csr", dtype=np.float64, reset=False))
        counts = self.tree_.counts[self.tree_.apply(X)]
        return counts / counts.sum(axis=1, keepdims=True)


def train_tree(data, min_samples_leaf=2, confidence=0.25, prune=True, random_state=None):
    """Fit :class:`C45Classifier` on a :class:`~textcat.corpus.LabeledSparseMatrix`."""
    return C45Classifier(min_samples_leaf=min_samples_leaf, confidence=confidence, prune=prune,
                         random_state=random_state).fit(data.X, data.labels)


def tree_classify(model, x):
    """Class label for a single feature row."""
    return model.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
