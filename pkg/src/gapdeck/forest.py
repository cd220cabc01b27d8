"""Bootstrap random forest of histogram CART regression trees.

Squared-error splitting on binned feature values (at most 64 bins per
feature), bootstrap resampling per tree, a random feature subset per node.
Probabilities are fit by running the same regression machinery on 0/1
labels. Deterministic given (data, seed): tree t uses
``np.random.default_rng([seed, t])`` and multithreaded prediction reduces
trees in index order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_MAX_BINS = 64
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class _Bins:
    """Per-feature bin edges; code = searchsorted(edges, v, side='right')."""

    edges: tuple[np.ndarray, ...]

    def encode(self, X: np.ndarray) -> np.ndarray:
        codes = np.empty(X.shape, dtype=np.int32)
        for j, edges in enumerate(self.edges):
            codes[:, j] = np.searchsorted(edges, X[:, j], side="right")
        return codes


def _build_bins(X: np.ndarray) -> _Bins:
    edges = []
    for j in range(X.shape[1]):
        col = X[:, j]
        uniq = np.unique(col)
        if uniq.size <= _MAX_BINS:
            cuts = (uniq[:-1] + uniq[1:]) / 2.0 if uniq.size > 1 else np.empty(0)
        else:
            qs = np.quantile(col, np.linspace(0, 1, _MAX_BINS + 1)[1:-1])
            cuts = np.unique(qs)
        edges.append(np.ascontiguousarray(cuts, dtype=np.float64))
    return _Bins(edges=tuple(edges))


@dataclass
class _Tree:
    # flat arrays; node i splits on feature[i] at bin code <= threshold[i],
    # children at left[i]/right[i]; leaves have feature[i] == -1
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict_codes(self, codes: np.ndarray) -> np.ndarray:
        out = np.empty(codes.shape[0])
        feature = self.feature
        threshold = self.threshold
        left = self.left
        right = self.right
        value = self.value
        for i in range(codes.shape[0]):
            node = 0
            f = feature[node]
            while f >= 0:
                node = left[node] if codes[i, f] <= threshold[node] else right[node]
                f = feature[node]
            out[i] = value[node]
        return out


def _grow_tree(
    codes: np.ndarray,
    y: np.ndarray,
    n_bins: np.ndarray,
    rng: np.random.Generator,
    max_depth: int | None,
    min_leaf: int,
    mtry: int,
) -> _Tree:
    n, p = codes.shape
    sample = rng.integers(0, n, n)
    counts_boot = np.bincount(sample, minlength=n)

    feature = [0]
    threshold = [0]
    left = [0]
    right = [0]
    value = [0.0]

    def new_node() -> int:
        feature.append(0)
        threshold.append(0)
        left.append(0)
        right.append(0)
        value.append(0.0)
        return len(feature) - 1

    # stack of (node_id, row index array into the bootstrap sample, depth)
    stack = [(0, sample, 0)]
    while stack:
        node, rows, depth = stack.pop()
        y_node = y[rows]
        total = float(y_node.sum())
        n_node = rows.shape[0]
        value[node] = total / n_node
        feature[node] = -1
        if n_node < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            continue
        if np.all(y_node == y_node[0]):
            continue
        features = rng.permutation(p)[:mtry]
        best_gain = _MIN_GAIN
        best = None
        base = total * total / n_node
        for f in features:
            c = codes[rows, f]
            k = n_bins[f]
            if k < 2:
                continue
            cnt = np.bincount(c, minlength=k)
            wsum = np.bincount(c, weights=y_node, minlength=k)
            cnt_l = np.cumsum(cnt)[:-1]
            sum_l = np.cumsum(wsum)[:-1]
            cnt_r = n_node - cnt_l
            sum_r = total - sum_l
            ok = (cnt_l >= min_leaf) & (cnt_r >= min_leaf)
            if not np.any(ok):
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                score = np.where(
                    ok, sum_l * sum_l / cnt_l + sum_r * sum_r / cnt_r, -np.inf
                )
            t = int(np.argmax(score))
            gain = float(score[t]) - base
            if gain > best_gain:
                best_gain = gain
                best = (int(f), t)
        if best is None:
            continue
        f, t = best
        go_left = codes[rows, f] <= t
        li = new_node()
        ri = new_node()
        feature[node] = f
        threshold[node] = t
        left[node] = li
        right[node] = ri
        stack.append((ri, rows[~go_left], depth + 1))
        stack.append((li, rows[go_left], depth + 1))

    return _Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.int32),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value),
    )


@dataclass
class ForestModel:
    """Fitted forest; ``predict`` averages the per-tree leaf means."""

    trees: list
    bins: _Bins
    threads: int = 1

    def predict(self, X) -> np.ndarray:
        from .learners import _as_array

        Xa = _as_array(X)
        codes = self.bins.encode(Xa)
        if self.threads > 1 and len(self.trees) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(lambda t: t.predict_codes(codes), self.trees))
        else:
            parts = [t.predict_codes(codes) for t in self.trees]
        total = np.zeros(Xa.shape[0])
        for part in parts:  # fixed order: mean is reproducible bit for bit
            total += part
        return total / len(self.trees)


def forest_fit(
    X,
    y,
    trees: int = 200,
    max_depth: int | None = None,
    min_leaf: int = 20,
    mtry: int | None = None,
    seed: int = 0,
    threads: int = 1,
) -> ForestModel:
    """Fit a bootstrap forest of binned CART trees.

    Parameters
    ----------
    trees : int
        Number of bootstrap trees.
    max_depth : int or None
        Depth cap; None grows until min_leaf stops splitting. Depth 0 yields
        a single-leaf tree predicting its bootstrap-sample mean.
    min_leaf : int
        Minimum bootstrap rows on each side of a split.
    mtry : int or None
        Features considered per node; default ceil(sqrt(p)).
    seed : int
        Tree t draws from ``np.random.default_rng([seed, t])``.
    threads : int
        Worker threads for tree growing and prediction.
    """
    from .learners import _as_array

    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    if Xa.ndim != 2 or Xa.shape[0] != y.shape[0]:
        raise ValueError("X and y are misaligned")
    if Xa.shape[0] < 1 or trees < 1:
        raise ValueError("forest_fit needs rows and at least one tree")
    n, p = Xa.shape
    if mtry is None:
        mtry = int(np.ceil(np.sqrt(p)))
    mtry = max(1, min(mtry, p))
    bins = _build_bins(Xa)
    codes = bins.encode(Xa)
    n_bins = np.array([e.size + 1 for e in bins.edges], dtype=np.int64)

    def grow(t: int) -> _Tree:
        rng = np.random.default_rng([seed, t])
        return _grow_tree(codes, y, n_bins, rng, max_depth, min_leaf, mtry)

    if threads > 1 and trees > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(grow, range(trees)))
    else:
        fitted = [grow(t) for t in range(trees)]
    return ForestModel(trees=fitted, bins=bins, threads=threads)
