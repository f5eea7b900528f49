import numpy as np
import scipy.sparse as sp


def as_dense(X):
    """Dense float64 C-contiguous view of a (possibly sparse) matrix."""
    if sp.issparse(X):
        X = X.toarray()
    return np.ascontiguousarray(X, dtype=np.float64)
