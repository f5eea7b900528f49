"""One-vs-rest soft-margin linear SVM trained by sequential minimal optimisation.

Each binary machine minimises ``0.5 * ||w||^2 + C * sum(hinge)`` with an
unregularised bias. The solver works on the dual

    min_a  0.5 * a' Q a - sum(a)   s.t.  0 <= a <= C,  y' a = 0,

updating two coordinates per step with second-order working-set selection.
Every step minimises the dual exactly along a feasible direction, so the
dual objective never increases.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from ..exceptions import DomainError
from ._base import as_dense

_TAU = 1e-12


@dataclass
class SMOResult:
    alpha: np.ndarray
    bias: float
    iterations: int
    converged: bool
    dual_objective: list = field(default_factory=list)  # sampled once per epoch


def smo(K, y, C, tol=1e-3, max_iter=100_000, epoch=None):
    """Solve the binary SVM dual for Gram matrix ``K`` and labels ``y`` in {-1, +1}.

    ``epoch`` is the number of pair updates between recorded objective values
    (defaults to the number of rows). Stops once the maximal KKT violation
    falls below ``tol``.
    """
    n = y.shape[0]
    y = y.astype(np.float64)
    epoch = n if epoch is None else epoch
    alpha = np.zeros(n)
    grad = -np.ones(n)  # Q a - 1
    diag = np.diag(K).copy()
    history = [0.0]
    it = 0
    converged = False
    while it < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(yg[up])])
        g_max = yg[i]
        g_min = yg[low].min()
        if g_max - g_min < tol:
            converged = True
            break
        # second-order choice of j among violating I_low members
        cand = low & (yg < g_max)
        b = g_max - yg[cand]
        a = diag[i] + diag[cand] - 2.0 * K[i, cand]
        a = np.where(a > 0, a, _TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])

        Ki, Kj = K[i], K[j]
        old_i, old_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = diag[i] + diag[j] + 2.0 * y[i] * y[j] * K[i, j]
            quad = quad if quad > 0 else _TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = diag[i] + diag[j] - 2.0 * K[i, j]
            quad = quad if quad > 0 else _TAU
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
        di, dj = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (y[i] * di * Ki + y[j] * dj * Kj)
        it += 1
        if it % epoch == 0:
            history.append(0.5 * float(alpha @ (grad - 1.0)))
    history.append(0.5 * float(alpha @ (grad - 1.0)))

    # bias from free vectors, else midpoint of the feasible interval
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yg[free].mean())
    else:
        upper = ((y > 0) & (alpha <= 0)) | ((y < 0) & (alpha >= C))
        lower = ((y > 0) & (alpha >= C)) | ((y < 0) & (alpha <= 0))
        ub = yg[upper].min() if upper.any() else np.inf
        lb = yg[lower].max() if lower.any() else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else (
            ub if np.isfinite(ub) else lb)
    return SMOResult(alpha, -rho, it, converged, history)


def primal_objective(w, b, X, y, C):
    """0.5 ||w||^2 + C * sum(max(0, 1 - y (Xw + b)))."""
    margins = y * (X @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


class LinearSVMClassifier(ClassifierMixin, BaseEstimator):
    """One binary linear SVM per class; predicts the class with the largest score.

    Parameters
    ----------
    C : float
        Weight of the hinge-loss sum.
    tol : float
        KKT-violation stopping tolerance of the solver.
    max_epochs : int
        Iteration cap, in units of n pair updates per machine.
    normalize : bool
        Min-max scale every feature to [0, 1] using training ranges before
        training (constant features map to 0). Weights are reported in the
        original feature space.
    random_state : int or None
        Accepted for interface uniformity; the solver is deterministic.

    Attributes
    ----------
    coef_ : ndarray of shape (n_classes, n_features)
    intercept_ : ndarray of shape (n_classes,)
    objective_history_ : list of lists
        Dual objective per epoch for each machine (nonincreasing).
    """

    def __init__(self, C=1.0, tol=1e-3, max_epochs=1000, normalize=True, random_state=None):
        self.C = C
        self.tol = tol
        self.max_epochs = max_epochs
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, accept_sparse="csr", dtype=np.float64)
        check_classification_targets(y)
        if self.C <= 0:
            raise ValueError("C must be > 0")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise DomainError("SVM training needs at least two classes")
        X = as_dense(X)
        n, f = X.shape
        if self.normalize:
            lo = X.min(axis=0)
            span = X.max(axis=0) - lo
            span[span == 0] = 1.0
            Z = (X - lo) / span
        else:
            lo, span = np.zeros(f), np.ones(f)
            Z = X
        K = Z @ Z.T
        coef = np.empty((len(self.classes_), f))
        intercept = np.empty(len(self.classes_))
        self.objective_history_ = []
        self.n_iter_ = []
        self.converged_ = []
        for c in range(len(self.classes_)):
            yc = np.where(y_idx == c, 1.0, -1.0)
            res = smo(K, yc, float(self.C), self.tol, self.max_epochs * n)
            w = Z.T @ (res.alpha * yc)
            # fold the scaling into the weights: w.((x - lo)/span) + b
            coef[c] = w / span
            intercept[c] = res.bias - float(coef[c] @ lo)
            self.objective_history_.append(res.dual_objective)
            self.n_iter_.append(res.iterations)
            self.converged_.append(res.converged)
        self.coef_ = coef
        self.intercept_ = intercept
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = as_dense(validate_data(self, X, accept_sparse="csr", dtype=np.float64, reset=False))
        return X @ self.coef_.T + self.intercept_

    def predict(self, X):
        # argmax keeps the first maximum: ties go to the lower class index
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


def svm_classify(model, x):
    """Class label for a single feature row."""
    return model.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
