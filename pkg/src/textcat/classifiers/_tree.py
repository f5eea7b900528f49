"""Binary threshold trees: split search, growth and error-based pruning.

Nodes are stored in flat arrays (preorder). Internal node ``i`` sends a row
left when ``x[feature[i]] <= threshold[i]``; leaves have ``feature == -1``.
"""

import sys
from functools import lru_cache
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

LEAF = -1

# Upper bound on the (rows x features) cells sorted per block.
_BLOCK_CELLS = 4_000_000
_MIN_GAIN = 1e-12
_TIE = 1e-12


def entropy(counts):
    """Entropy in bits of class-count vectors along the last axis."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, counts / total, 0.0)
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


@dataclass(eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) training class counts

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def n_leaves(self):
        return int(np.sum(self.feature == LEAF))

    def depth(self):
        depth = np.zeros(self.n_nodes, dtype=np.intp)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X):
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_index(self, X):
        return np.argmax(self.counts[self.apply(X)], axis=1)


def _best_in_block(xs_block, ys_block, n_classes, parent_counts, min_leaf, criterion):
    """Best (score, gain, column, position) among one block of sorted columns."""
    m, f = xs_block.shape
    lo_pos = min_leaf - 1
    hi_pos = m - min_leaf  # exclusive bound on split positions
    if hi_pos <= lo_pos:
        return None
    valid = xs_block[1:] > xs_block[:-1]
    valid[:lo_pos] = False
    valid[hi_pos:] = False
    # column-major candidate order: lowest column first, then lowest threshold
    cols, pos = np.nonzero(valid.T)
    if cols.size == 0:
        return None
    # class histogram per run of equal values; prefix sums over runs give the
    # left-branch counts at every boundary between runs
    boundary = np.zeros((m, f), dtype=np.intp)
    boundary[1:] = xs_block[1:] > xs_block[:-1]
    run = np.cumsum(boundary, axis=0)
    n_runs = run[-1] + 1
    start = np.zeros(f, dtype=np.intp)
    np.cumsum(n_runs[:-1], out=start[1:])
    hist = np.bincount(((run + start) * n_classes + ys_block).ravel(),
                       minlength=int(n_runs.sum()) * n_classes).reshape(-1, n_classes)
    prefix = np.cumsum(hist, axis=0)
    left = prefix[start[cols] + run[pos, cols]]
    before = start[cols] > 0
    left[before] -= prefix[start[cols][before] - 1]
    right = parent_counts.astype(np.intp) - left
    n_left = pos + 1
    n_right = m - n_left
    # with integer counts, n * H(counts) = T[n] - sum(T[counts]), T[c] = c log2 c
    table = np.zeros(m + 1)
    k = np.arange(1, m + 1, dtype=np.float64)
    table[1:] = k * np.log2(k)
    child = (table[n_left] + table[n_right] - table[left].sum(axis=1)
             - table[right].sum(axis=1)) / m
    gain = entropy(parent_counts) - child
    n_left = n_left.astype(np.float64)
    if criterion == "gain_ratio":
        pl = n_left / m
        split_info = -(pl * np.log2(pl) + (1 - pl) * np.log2(1 - pl))
        score = gain / split_info
    else:
        score = gain
    ok = gain > _MIN_GAIN
    if not ok.any():
        return None
    score = np.where(ok, score, -np.inf)
    # scores equal up to rounding count as ties; the earliest candidate wins
    best = int(np.argmax(score >= score.max() - _TIE))
    return score[best], gain[best], int(cols[best]), int(pos[best])


def find_split(X, y, rows, features, n_classes, min_leaf, criterion,
               max_features=None, rng=None):
    """Best threshold split of ``rows`` or ``None``.

    With ``max_features`` set, features are visited in a random order in
    groups of that size; the first group holding a positive-gain split wins.
    """
    y_node = y[rows]
    parent = np.bincount(y_node, minlength=n_classes).astype(np.float64)
    m = rows.shape[0]
    if max_features is not None and max_features < features.shape[0]:
        visit = rng.permutation(features)
        size = max_features
    else:
        visit = features
        size = features.shape[0]
    per_block = max(1, _BLOCK_CELLS // max(1, m))
    rows_col = rows[:, None]
    for g in range(0, visit.shape[0], size):
        group = visit[g:g + size]
        best = None
        for start in range(0, group.shape[0], per_block):
            cols = group[start:start + per_block]
            Xn = X[rows_col, cols]
            varying = Xn.max(axis=0) > Xn.min(axis=0)
            if not varying.any():
                continue
            if not varying.all():
                cols, Xn = cols[varying], Xn[:, varying]
            order = np.argsort(Xn, axis=0, kind="stable")
            xs = np.take_along_axis(Xn, order, axis=0)
            ys = y_node[order]
            found = _best_in_block(xs, ys, n_classes, parent, min_leaf, criterion)
            if found is None:
                continue
            score, gain, col, pos = found
            if best is None or score > best[0] + _TIE:
                lo, hi = xs[pos, col], xs[pos + 1, col]
                thr = lo + (hi - lo) / 2.0
                if not lo <= thr < hi:
                    thr = lo
                best = (score, gain, int(cols[col]), float(thr))
        if best is not None:
            return best
    return None


def grow(X, y, n_classes, min_leaf=2, criterion="gain_ratio", max_features=None, rng=None):
    """Grow a tree on dense ``X`` and integer labels ``y`` in ``[0, n_classes)``."""
    feature, threshold, left, right, counts = [], [], [], [], []
    all_features = np.arange(X.shape[1])

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(np.bincount(y[rows], minlength=n_classes))
        return len(feature) - 1

    root_rows = np.arange(X.shape[0])
    stack = [(new_node(root_rows), root_rows)]
    while stack:
        node, rows = stack.pop()
        c = counts[node]
        if np.count_nonzero(c) <= 1 or rows.shape[0] < 2 * min_leaf:
            continue
        split = find_split(X, y, rows, all_features, n_classes, min_leaf, criterion,
                           max_features, rng)
        if split is None:
            continue
        _, _, f, thr = split
        mask = X[rows, f] <= thr
        lrows, rrows = rows[mask], rows[~mask]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        # right pushed first so the left subtree is numbered first (preorder)
        stack.append((right[node], rrows))
        stack.append((left[node], lrows))
    return Tree(np.array(feature, dtype=np.intp), np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.intp), np.array(right, dtype=np.intp),
                np.array(counts, dtype=np.float64).reshape(-1, n_classes))


@lru_cache(maxsize=None)
def _z(confidence):
    return float(norm.ppf(1 - confidence))


def add_errors(n, e, confidence):
    """Extra errors added to ``e`` observed among ``n`` at upper confidence ``confidence``."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must be in (0, 1)")
    if e < 1:
        base = n * (1 - confidence ** (1 / n))
        if e == 0:
            return base
        return base + e * (add_errors(n, 1, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = _z(confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * np.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _leaf_errors(counts, confidence):
    n = counts.sum()
    if n == 0:
        return 0.0
    e = n - counts.max()
    return e + add_errors(n, e, confidence)


def prune(tree, confidence=0.25):
    """Collapse, then bottom-up pessimistic-error subtree replacement.

    A subtree is replaced by a leaf when the leaf's estimated errors do not
    exceed the subtree's by more than 0.1.
    """
    feature = tree.feature.copy()
    counts = tree.counts
    n = tree.n_nodes

    def training_errors(i):
        if feature[i] == LEAF:
            return counts[i].sum() - counts[i].max()
        return training_errors(tree.left[i]) + training_errors(tree.right[i])

    def collapse(i):
        if feature[i] == LEAF:
            return
        leaf_err = counts[i].sum() - counts[i].max()
        if training_errors(i) >= leaf_err - 1e-3:
            feature[i] = LEAF
            return
        collapse(tree.left[i])
        collapse(tree.right[i])

    def estimated(i):
        if feature[i] == LEAF:
            return _leaf_errors(counts[i], confidence)
        return estimated(tree.left[i]) + estimated(tree.right[i])

    def replace(i):
        if feature[i] == LEAF:
            return
        replace(tree.left[i])
        replace(tree.right[i])
        if _leaf_errors(counts[i], confidence) <= estimated(i) + 0.1:
            feature[i] = LEAF

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * n + 100))
    try:
        collapse(0)
        replace(0)
    finally:
        sys.setrecursionlimit(limit)
    return _compact(tree, feature)


def _compact(tree, feature):
    """Drop nodes unreachable after leaves were introduced."""
    keep = []
    stack = [0]
    while stack:
        i = stack.pop()
        keep.append(i)
        if feature[i] != LEAF:
            stack.append(tree.right[i])
            stack.append(tree.left[i])
    remap = {old: new for new, old in enumerate(keep)}
    keep = np.array(keep, dtype=np.intp)
    is_leaf = feature[keep] == LEAF
    left = np.array([LEAF if leaf else remap[tree.left[i]] for i, leaf in zip(keep, is_leaf)],
                    dtype=np.intp)
    right = np.array([LEAF if leaf else remap[tree.right[i]] for i, leaf in zip(keep, is_leaf)],
                     dtype=np.intp)
    return Tree(np.where(is_leaf, LEAF, feature[keep]).astype(np.intp),
                np.where(is_leaf, 0.0, tree.threshold[keep]), left, right,
                tree.counts[keep].copy())
