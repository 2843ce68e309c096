"""Log-odds models on error terms and their Shapley attributions.

The diagnosis model is a gradient-boosted ensemble of shallow regression
trees fit with the second-order logistic loss.  Attributions use
path-dependent TreeSHAP, where an absent feature is marginalized with the
training sample counts stored at each split.  Two brute-force references
enumerate every coalition: one with the same path-dependent expectation, one
with the interventional expectation over a background sample.
"""

from dataclasses import dataclass, field
from itertools import combinations
from math import factorial

import numpy as np
from scipy.special import expit, logit

__all__ = [
    "DegenerateLabel",
    "EnumerationBudget",
    "BoostConfig",
    "Tree",
    "BoostedEnsemble",
    "ShapleyMatrix",
    "fit_logodds",
    "tree_shap",
    "exact_shap",
    "exact_tree_shap",
    "shapley_from_value_function",
    "root_causes",
]

MAX_EXACT_FEATURES = 14


class DegenerateLabel(ValueError):
    pass


class EnumerationBudget(ValueError):
    pass


@dataclass(frozen=True)
class BoostConfig:
    rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    max_bins: int = 256


@dataclass
class Tree:
    """Binary regression tree in array form; ``feature == -1`` marks a leaf.

    A sample goes left when ``x[feature] < threshold``.  ``cover`` holds the
    number of training samples that reached each node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    @property
    def depth(self):
        def d(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(d(self.left[node]), d(self.right[node]))

        return d(0)

    def apply(self, X):
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                return node
            idx = np.flatnonzero(internal)
            goes_left = X[idx, f[idx]] < self.threshold[node[idx]]
            node[idx] = np.where(goes_left, self.left[node[idx]], self.right[node[idx]])

    def predict(self, X):
        return self.value[self.apply(X)]

    def expected_value(self):
        leaves = self.feature < 0
        return float(np.sum(self.value[leaves] * self.cover[leaves]) / self.cover[0])


@dataclass
class BoostedEnsemble:
    """``f(e) = base_score + learning_rate * sum(tree(e))`` on the log-odds scale."""

    trees: list
    learning_rate: float
    base_score: float
    n_features: int

    def predict_logodds(self, E):
        E = np.atleast_2d(np.asarray(E, dtype=float))
        out = np.full(E.shape[0], self.base_score)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(E)
        return out

    def predict_proba(self, E):
        return expit(self.predict_logodds(E))

    def expected_value(self):
        """Cover-weighted mean prediction; the baseline of TreeSHAP."""
        return self.base_score + self.learning_rate * sum(t.expected_value() for t in self.trees)

    def shifted(self, delta):
        """Copy with ``delta`` added to the base score."""
        return BoostedEnsemble(self.trees, self.learning_rate, self.base_score + delta,
                               self.n_features)


@dataclass
class ShapleyMatrix:
    """Per-row attributions; each row sums to ``prediction - base``."""

    values: np.ndarray
    base: float
    prediction: np.ndarray = field(default=None)

    def local_accuracy_gap(self):
        return np.abs(self.values.sum(axis=1) - (self.prediction - self.base))

    def to_csv(self, names=None):
        p = self.values.shape[1]
        names = [f"X{i + 1}" for i in range(p)] if names is None else list(names)
        lines = [",".join(names)]
        lines += [",".join(repr(float(v)) for v in row) for row in self.values]
        return "\n".join(lines) + "\n"


def _bin_cuts(col, max_bins):
    u = np.unique(col)
    if u.size <= 1:
        return np.empty(0)
    if u.size <= max_bins:
        return (u[:-1] + u[1:]) / 2.0
    q = np.quantile(col, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
    return np.unique(q)


class _Binned:
    def __init__(self, X, max_bins):
        n, p = X.shape
        self.cuts = [_bin_cuts(X[:, f], max_bins) for f in range(p)]
        sizes = np.array([c.size + 1 for c in self.cuts])
        self.offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        self.total = int(sizes.sum())
        self.sizes = sizes
        flat = np.empty((n, p), dtype=np.intp)
        for f in range(p):
            flat[:, f] = np.searchsorted(self.cuts[f], X[:, f], side="right") + self.offsets[f]
        self.flat = flat
        # owner feature and local bin index of every flat slot
        self.owner = np.repeat(np.arange(p), sizes)
        self.local = np.arange(self.total) - self.offsets[self.owner]
        self.last = self.local == (sizes[self.owner] - 1)


def _grow_tree(binned, g, h, cfg):
    feature, threshold, left, right, value, cover = [], [], [], [], [], []

    def new_node():
        for arr in (feature, threshold, left, right, value, cover):
            arr.append(0)
        feature[-1] = -1
        left[-1] = right[-1] = -1
        return len(feature) - 1

    def leaf(node, G, H, count):
        value[node] = -G / (H + cfg.reg_lambda)
        cover[node] = count

    def build(node, idx, depth):
        G, H = g[idx].sum(), h[idx].sum()
        if depth >= cfg.max_depth or idx.size < 2:
            leaf(node, G, H, idx.size)
            return
        rows = binned.flat[idx]
        p = rows.shape[1]
        slots = rows.ravel()
        Gh = np.bincount(slots, weights=np.repeat(g[idx], p), minlength=binned.total)
        Hh = np.bincount(slots, weights=np.repeat(h[idx], p), minlength=binned.total)
        Gc = np.cumsum(Gh)
        Hc = np.cumsum(Hh)
        start = binned.offsets[binned.owner]
        base_G = np.where(start > 0, Gc[start - 1], 0.0)
        base_H = np.where(start > 0, Hc[start - 1], 0.0)
        GL = Gc - base_G
        HL = Hc - base_H
        GR = G - GL
        HR = H - HL
        lam = cfg.reg_lambda
        valid = (~binned.last) & (HL >= cfg.min_child_weight) & (HR >= cfg.min_child_weight)
        gain = np.full(binned.total, -np.inf)
        gain[valid] = (GL[valid] ** 2 / (HL[valid] + lam) + GR[valid] ** 2 / (HR[valid] + lam)
                       - G ** 2 / (H + lam))
        best = int(np.argmax(gain))
        if not gain[best] > 1e-12:
            leaf(node, G, H, idx.size)
            return
        f = int(binned.owner[best])
        b = int(binned.local[best])
        go_left = binned.flat[idx, f] <= binned.offsets[f] + b
        feature[node] = f
        threshold[node] = float(binned.cuts[f][b])
        cover[node] = idx.size
        value[node] = -G / (H + lam)
        lnode = new_node()
        rnode = new_node()
        left[node], right[node] = lnode, rnode
        build(lnode, idx[go_left], depth + 1)
        build(rnode, idx[~go_left], depth + 1)

    root = new_node()
    build(root, np.arange(g.shape[0]), 0)
    return Tree(
        np.asarray(feature, dtype=np.intp),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.intp),
        np.asarray(right, dtype=np.intp),
        np.asarray(value, dtype=float),
        np.asarray(cover, dtype=float),
    )


def fit_logodds(E, d, config=None, **overrides):
    """Fit a boosted tree ensemble predicting the log-odds of ``d`` from ``E``.

    Each round grows one tree on the logistic-loss gradient and hessian with
    exact gain over histogram split candidates (at most ``max_bins`` per
    feature) and L2-regularized leaf weights.  The base score is the logit of
    the label mean.

    Raises
    ------
    DegenerateLabel
        If ``d`` contains a single class.
    """
    cfg = config or BoostConfig()
    if overrides:
        cfg = BoostConfig(**{**cfg.__dict__, **overrides})
    E = np.asarray(E, dtype=float)
    d = np.asarray(d, dtype=float).ravel()
    if E.ndim != 2 or E.shape[0] != d.shape[0]:
        raise ValueError("E must be (n, p) with one label per row")
    if not np.all((d == 0) | (d == 1)):
        raise ValueError("labels must be binary")
    prevalence = d.mean()
    if prevalence in (0.0, 1.0):
        raise DegenerateLabel("labels contain a single class")
    base = float(logit(prevalence))
    binned = _Binned(E, cfg.max_bins)
    F = np.full(d.shape[0], base)
    trees = []
    for _ in range(cfg.rounds):
        prob = expit(F)
        grad = prob - d
        hess = prob * (1.0 - prob)
        tree = _grow_tree(binned, grad, hess, cfg)
        trees.append(tree)
        F += cfg.learning_rate * tree.predict(E)
    return BoostedEnsemble(trees, cfg.learning_rate, base, E.shape[1])


# --- TreeSHAP -----------------------------------------------------------------
#
# Path-dependent TreeSHAP, evaluated for all rows at once.  The set of
# root-to-leaf paths visited is the same for every row; only the "one
# fractions" (does the row follow this branch) differ, so path weights are
# carried as arrays over rows.


class _Path:
    __slots__ = ("feat", "zero", "one", "pw")

    def __init__(self, feat, zero, one, pw):
        self.feat = feat
        self.zero = zero
        self.one = one
        self.pw = pw

    def copy(self):
        return _Path(list(self.feat), list(self.zero), list(self.one), list(self.pw))


def _extend(path, depth, zero, one, feat):
    path.feat.append(feat)
    path.zero.append(zero)
    path.one.append(one)
    path.pw.append(np.ones_like(one) if depth == 0 else np.zeros_like(one))
    for i in range(depth - 1, -1, -1):
        path.pw[i + 1] = path.pw[i + 1] + one * path.pw[i] * (i + 1) / (depth + 1)
        path.pw[i] = zero * path.pw[i] * (depth - i) / (depth + 1)


def _unwind(path, depth, k):
    one = path.one[k]
    zero = path.zero[k]
    nz = one != 0
    safe_one = np.where(nz, one, 1.0)
    nxt = path.pw[depth]
    for i in range(depth - 1, -1, -1):
        tmp = path.pw[i]
        a = nxt * (depth + 1) / ((i + 1) * safe_one)
        with np.errstate(divide="ignore", invalid="ignore"):
            b = tmp * (depth + 1) / (zero * (depth - i)) if zero != 0 else np.zeros_like(tmp)
        path.pw[i] = np.where(nz, a, b)
        nxt = np.where(nz, tmp - a * zero * (depth - i) / (depth + 1), nxt)
    del path.pw[depth]
    del path.feat[k], path.zero[k], path.one[k]


def _unwound_sum(path, depth, k):
    one = path.one[k]
    zero = path.zero[k]
    nz = one != 0
    safe_one = np.where(nz, one, 1.0)
    nxt = path.pw[depth]
    total = np.zeros_like(nxt)
    for i in range(depth - 1, -1, -1):
        a = nxt * (depth + 1) / ((i + 1) * safe_one)
        if zero != 0:
            b = path.pw[i] / zero / ((depth - i) / (depth + 1))
        else:
            b = np.zeros_like(a)
        total = total + np.where(nz, a, b)
        nxt = np.where(nz, path.pw[i] - a * zero * (depth - i) / (depth + 1), nxt)
    return total


def _shap_tree(tree, X, phi):
    n = X.shape[0]

    def recurse(node, path, depth, pzero, pone, pfeat):
        path = path.copy()
        _extend(path, depth, pzero, pone, pfeat)
        f = tree.feature[node]
        if f < 0:
            v = tree.value[node]
            for i in range(1, depth + 1):
                w = _unwound_sum(path, depth, i)
                phi[:, path.feat[i]] += w * (path.one[i] - path.zero[i]) * v
            return
        goes_left = (X[:, f] < tree.threshold[node]).astype(float)
        iz, io = 1.0, np.ones(n)
        for k in range(1, depth + 1):
            if path.feat[k] == f:
                iz, io = path.zero[k], path.one[k]
                _unwind(path, depth, k)
                depth -= 1
                break
        lc, rc = tree.left[node], tree.right[node]
        cov = tree.cover[node]
        recurse(lc, path, depth + 1, iz * tree.cover[lc] / cov, io * goes_left, f)
        recurse(rc, path, depth + 1, iz * tree.cover[rc] / cov, io * (1.0 - goes_left), f)

    recurse(0, _Path([], [], [], []), 0, 1.0, np.ones(n), -1)


def tree_shap(model, E):
    """Path-dependent TreeSHAP values of ``model`` at the rows of ``E``.

    A 1-D ``E`` returns a 1-D vector; a 2-D ``E`` returns a :class:`ShapleyMatrix`.
    """
    E = np.asarray(E, dtype=float)
    single = E.ndim == 1
    X = np.atleast_2d(E)
    phi = np.zeros((X.shape[0], model.n_features))
    for tree in model.trees:
        part = np.zeros_like(phi)
        _shap_tree(tree, X, part)
        phi += model.learning_rate * part
    if single:
        return phi[0]
    return ShapleyMatrix(phi, model.expected_value(), model.predict_logodds(X))


# --- brute-force references ----------------------------------------------------


def shapley_from_value_function(value, p):
    """Shapley values from a coalition value function by full enumeration.

    ``value`` maps a frozenset of feature indices to a real number.
    """
    if p > MAX_EXACT_FEATURES:
        raise EnumerationBudget(f"{p} features exceeds the enumeration budget")
    cache = {}

    def v(S):
        if S not in cache:
            cache[S] = value(S)
        return cache[S]

    phi = np.zeros(p)
    for i in range(p):
        others = [j for j in range(p) if j != i]
        for size in range(p):
            weight = factorial(size) * factorial(p - size - 1) / factorial(p)
            for W in combinations(others, size):
                S = frozenset(W)
                phi[i] += weight * (v(S | {i}) - v(S))
    return phi


def exact_shap(predict, background, e):
    """Interventional Shapley values by enumerating all coalitions.

    ``v(W)`` is the mean of ``predict`` over the background rows with the
    coordinates in ``W`` replaced by those of ``e``.
    """
    background = np.atleast_2d(np.asarray(background, dtype=float))
    e = np.asarray(e, dtype=float)
    p = e.shape[0]
    if p > MAX_EXACT_FEATURES:
        raise EnumerationBudget(f"{p} features exceeds the enumeration budget")

    def value(S):
        hybrid = background.copy()
        idx = sorted(S)
        hybrid[:, idx] = e[idx]
        return float(np.mean(predict(hybrid)))

    return shapley_from_value_function(value, p)


def _path_expectation(tree, e, S, node=0):
    f = tree.feature[node]
    if f < 0:
        return tree.value[node]
    if f in S:
        child = tree.left[node] if e[f] < tree.threshold[node] else tree.right[node]
        return _path_expectation(tree, e, S, child)
    lc, rc = tree.left[node], tree.right[node]
    return (tree.cover[lc] * _path_expectation(tree, e, S, lc)
            + tree.cover[rc] * _path_expectation(tree, e, S, rc)) / tree.cover[node]


def exact_tree_shap(model, e):
    """Enumerate coalitions with the cover-weighted (path-dependent) expectation."""
    e = np.asarray(e, dtype=float)

    def value(S):
        return model.base_score + model.learning_rate * sum(
            _path_expectation(t, e, S) for t in model.trees)

    return shapley_from_value_function(value, model.n_features)


def root_causes(S, exclude=()):
    """Per row, the variables with strictly positive attribution, largest first.

    ``S`` is a :class:`ShapleyMatrix` or an array.  Columns in ``exclude`` are
    never reported.
    """
    values = S.values if isinstance(S, ShapleyMatrix) else np.atleast_2d(S)
    excluded = set(exclude)
    report = []
    for row in values:
        pos = [(int(i), float(row[i])) for i in np.flatnonzero(row > 0) if i not in excluded]
        pos.sort(key=lambda t: (-t[1], t[0]))
        report.append(pos)
    return report
