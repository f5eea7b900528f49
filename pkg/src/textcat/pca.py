"""Principal component analysis with variance-retention component selection.

The eigendecomposition is taken of whichever is smaller: the feature
covariance matrix (f x f) or the document Gram matrix (n x n). Both use the
unbiased ``n - 1`` normalisation, so eigenvalues are sample variances of the
component scores.
"""

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, validate_data

from .corpus import LabeledSparseMatrix
from .exceptions import ArityError, DegenerateVarianceError, DomainError

# Relative slack on the cumulative-variance comparison, so that a threshold of
# exactly 1.0 is reachable despite rounding in the cumulative sum.
_RATIO_SLACK = 1e-12


def choose_k(eigenvalues, threshold):
    """Smallest k whose leading eigenvalues cover ``threshold`` of the total.

    >>> choose_k([3.0, 1.0], 0.75), choose_k([3.0, 1.0], 0.76)
    (1, 2)
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if not 0 < threshold <= 1:
        raise DomainError(f"variance threshold {threshold} not in (0, 1]")
    if lam.ndim != 1 or lam.size == 0:
        raise DomainError("eigenvalues must be a non-empty vector")
    if np.any(np.diff(lam) > 0) or np.any(lam < 0):
        raise DomainError("eigenvalues must be nonnegative and nonincreasing")
    total = lam.sum()
    if total <= 0:
        raise DomainError("all-zero spectrum")
    ratio = np.cumsum(lam) / total
    k = int(np.searchsorted(ratio, threshold * (1 - _RATIO_SLACK), side="left")) + 1
    return min(k, lam.size)


def _canonical_signs(components):
    """Flip rows so the largest-magnitude entry of each is nonnegative."""
    if components.size == 0:
        return components
    pivot = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), pivot])
    signs[signs == 0] = 1
    return components * signs[:, None]


class VariancePCA(BaseEstimator, TransformerMixin):
    """PCA keeping enough components to explain a fraction of the variance.

    Parameters
    ----------
    variance : float in (0, 1]
        Fraction of total variance to retain.
    n_components : int or None
        Explicit component count; overrides ``variance`` when given.
    standardize : bool
        Divide features by their standard deviation after centering
        (correlation-matrix PCA).

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    scale_ : ndarray of shape (n_features,) or None
    components_ : ndarray of shape (k, n_features)
        Orthonormal rows, ordered by decreasing eigenvalue.
    explained_variance_ : ndarray of shape (k,)
    eigenvalues_ : ndarray
        Full nonnegative spectrum, nonincreasing.
    total_variance_ : float
        Trace of the covariance matrix.
    """

    def __init__(self, variance=0.95, n_components=None, standardize=False):
        self.variance = variance
        self.n_components = n_components
        self.standardize = standardize

    def fit(self, X, y=None):
        X = validate_data(self, X, accept_sparse="csr", dtype=np.float64,
                          ensure_min_samples=2)
        if sp.issparse(X):
            X = X.toarray()
        n, f = X.shape
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_
        self.scale_ = None
        if self.standardize:
            std = Xc.std(axis=0, ddof=1)
            std[std == 0] = 1.0
            self.scale_ = std
            Xc = Xc / std
        col_var = np.einsum("ij,ij->j", Xc, Xc) / (n - 1)
        self.total_variance_ = float(col_var.sum())
        if self.total_variance_ <= 0:
            raise DegenerateVarianceError("every feature is constant")

        if n - 1 < f:
            gram = (Xc @ Xc.T) / (n - 1)
            lam, U = np.linalg.eigh(gram)
            lam, U = lam[::-1], U[:, ::-1]
            lam = np.where(lam < 0, 0.0, lam)
            tol = lam[0] * max(n, f) * np.finfo(np.float64).eps
            rank = int(np.sum(lam > tol))
            V = (Xc.T @ U[:, :rank]) / np.sqrt((n - 1) * lam[:rank])
            components = V.T
        else:
            cov = (Xc.T @ Xc) / (n - 1)
            lam, V = np.linalg.eigh(cov)
            lam, V = lam[::-1], V[:, ::-1]
            lam = np.where(lam < 0, 0.0, lam)
            tol = lam[0] * max(n, f) * np.finfo(np.float64).eps
            rank = int(np.sum(lam > tol))
            components = V[:, :rank].T

        rank = min(rank, n - 1)
        if self.n_components is not None:
            if self.n_components < 1:
                raise DomainError("n_components must be >= 1")
            k = min(int(self.n_components), rank)
        else:
            k = min(choose_k(lam, self.variance), rank)
        self.eigenvalues_ = lam
        self.components_ = np.ascontiguousarray(_canonical_signs(components[:k]))
        self.explained_variance_ = lam[:k].copy()
        self.n_components_ = k
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = validate_data(self, X, accept_sparse="csr", dtype=np.float64, reset=False)
        if sp.issparse(X):
            X = X.toarray()
        Xc = X - self.mean_
        if self.scale_ is not None:
            Xc = Xc / self.scale_
        return Xc @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        Z = check_array(Z)
        X = Z @ self.components_
        if self.scale_ is not None:
            X = X * self.scale_
        return X + self.mean_

    @property
    def explained_variance_ratio_(self):
        return self.explained_variance_ / self.total_variance_


def fit_pca(train, threshold=0.95, n_components=None, standardize=False):
    """Fit :class:`VariancePCA` on a :class:`LabeledSparseMatrix` (labels unused)."""
    X = train.X if isinstance(train, LabeledSparseMatrix) else train
    if sp.issparse(X):
        if not np.all(np.isfinite(X.data)):
            raise DomainError("non-finite value in training matrix")
    elif not np.all(np.isfinite(np.asarray(X, dtype=np.float64))):
        raise DomainError("non-finite value in training matrix")
    return VariancePCA(variance=threshold, n_components=n_components,
                       standardize=standardize).fit(X)


def project(model, data):
    """Project ``data`` with a fitted model; labels pass through unchanged."""
    check_is_fitted(model, "components_")
    if data.n_features != model.mean_.shape[0]:
        raise ArityError(f"data has {data.n_features} features, model expects "
                         f"{model.mean_.shape[0]}")
    return data.with_features(model.transform(data.X))
