"""Random forest: bagged, unpruned random-subspace trees with majority voting."""

import math

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from . import _tree
from ._base import as_dense

_SEED_BOUND = 2**31 - 1


def default_subspace(n_features):
    """floor(log2(n_features)) + 1."""
    return int(math.floor(math.log2(max(n_features, 1)))) + 1


def tree_seeds(random_state, n_trees):
    """Per-tree seeds derived from one master seed (independent of worker count)."""
    rng = np.random.default_rng(random_state)
    return rng.integers(0, _SEED_BOUND, size=n_trees)


def _bootstrap(seed, n, bootstrap):
    if not bootstrap:
        return np.arange(n)
    return np.random.default_rng([seed, 0]).integers(0, n, size=n)


def _grow_one(X, y, n_classes, seed, bootstrap, min_leaf, criterion, max_features):
    rows = _bootstrap(seed, X.shape[0], bootstrap)
    rng = np.random.default_rng([seed, 1])
    return _tree.grow(X[rows], y[rows], n_classes, min_leaf, criterion, max_features, rng)


class RandomForestClassifier(ClassifierMixin, BaseEstimator):
    """Breiman-style forest of unpruned trees.

    Parameters
    ----------
    n_estimators : int
    max_features : int, "log2+1" or None
        Features drawn at random per node; None uses every feature. When no
        drawn feature yields a positive-gain split, further random features
        are tried.
    criterion : {"gain", "gain_ratio"}
    min_samples_leaf : int
    bootstrap : bool
        Draw n rows with replacement per tree; False trains every tree on the
        full training set.
    oob_score : bool
        Compute ``oob_score_`` (accuracy on out-of-bag rows) after fitting.
    random_state : int or None
    n_jobs : int or None
        Trees are grown in parallel with joblib; results do not depend on it.
    """

    def __init__(self, n_estimators=100, max_features="log2+1", criterion="gain",
                 min_samples_leaf=1, bootstrap=True, oob_score=False, random_state=1,
                 n_jobs=None):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.criterion = criterion
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.oob_score = oob_score
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _subspace(self, n_features):
        if self.max_features is None:
            return None
        if self.max_features == "log2+1":
            return min(default_subspace(n_features), n_features)
        if int(self.max_features) < 1:
            raise ValueError("max_features must be >= 1")
        return min(int(self.max_features), n_features)

    def fit(self, X, y):
        X, y = validate_data(self, X, y, accept_sparse="csr", dtype=np.float64)
        check_classification_targets(y)
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        X = as_dense(X)
        n_classes = len(self.classes_)
        self.max_features_ = self._subspace(X.shape[1])
        self.tree_seeds_ = tree_seeds(self.random_state, self.n_estimators)
        self.estimators_ = Parallel(n_jobs=self.n_jobs)(
            delayed(_grow_one)(X, y_idx, n_classes, int(s), self.bootstrap,
                               self.min_samples_leaf, self.criterion, self.max_features_)
            for s in self.tree_seeds_)
        if self.oob_score:
            self._compute_oob(X, y_idx)
        return self

    def _compute_oob(self, X, y_idx):
        n = X.shape[0]
        votes = np.zeros((n, len(self.classes_)), dtype=np.int64)
        for seed, tree in zip(self.tree_seeds_, self.estimators_):
            in_bag = np.zeros(n, dtype=bool)
            in_bag[_bootstrap(int(seed), n, self.bootstrap)] = True
            oob = np.flatnonzero(~in_bag)
            if oob.size:
                votes[oob, tree.predict_index(X[oob])] += 1
        covered = votes.sum(axis=1) > 0
        pred = np.argmax(votes, axis=1)
        self.oob_covered_ = covered
        self.oob_score_ = float(np.mean(pred[covered] == y_idx[covered])) if covered.any() else np.nan

    def tree_votes(self, X):
        """(n_samples, n_classes) vote counts."""
        check_is_fitted(self, "estimators_")
        X = as_dense(validate_data(self, X, accept_sparse="csr", dtype=np.float64, reset=False))
        votes = np.zeros((X.shape[0], len(self.classes_)), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.estimators_:
            votes[rows, tree.predict_index(X)] += 1
        return votes

    def predict(self, X):
        # argmax picks the first maximum, i.e. the lower class index on ties
        return self.classes_[np.argmax(self.tree_votes(X), axis=1)]

    def predict_proba(self, X):
        votes = self.tree_votes(X)
        return votes / votes.sum(axis=1, keepdims=True)


def forest_classify(model, x):
    """Class label for a single feature row."""
    return model.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
