"""From-scratch CART regression trees.

Split criterion is the SSE reduction SSE(parent) - SSE(left) - SSE(right),
searched over midpoint thresholds between consecutive distinct sorted values
of every candidate feature. Because sum(y^2) cancels, candidate splits are
ranked by left_sum^2/n_l + right_sum^2/n_r computed from target prefix sums.
Ties break on (lowest feature index, lowest threshold); routing is
x[feature] <= threshold to the left child.

Two engines grow trees: a plain numpy reference implementation and a
numba-compiled twin (used by default when numba imports). Both follow the
exact same arithmetic, node order (preorder), stable sorts, and tie-breaks,
so they produce bit-identical trees; tests assert that equivalence.

Random feature subsets for forests are drawn *before* growth into a pool —
row t is the sorted first ``max_features`` entries of the t-th seeded random
permutation — and consumed one row per split search in preorder. That keeps
subset draws identical across engines and independent of recursion details.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    InvalidConfig,
    NonFiniteTarget,
)

try:
    from . import _fast
except ImportError:  # pragma: no cover - numba genuinely unavailable
    _fast = None


@dataclass(frozen=True)
class CartParams:
    max_depth: int = 8
    min_leaf: int = 2
    min_split: int = 4
    min_impurity_decrease: float = 0.0

    def __post_init__(self):
        if self.max_depth < 1:
            raise InvalidConfig(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_leaf < 1:
            raise InvalidConfig(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.min_split < 2 * self.min_leaf:
            raise InvalidConfig(
                f"min_split ({self.min_split}) must be >= 2*min_leaf "
                f"({2 * self.min_leaf})"
            )
        if self.min_impurity_decrease < 0.0:
            raise InvalidConfig("min_impurity_decrease must be >= 0")


@dataclass
class TreeNode:
    """Leaf (feature is None) or internal split node."""

    value: float
    n_samples: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = field(default=None, repr=False)
    right: "TreeNode | None" = field(default=None, repr=False)

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def subset_pool(
    rng: np.random.Generator, n: int, p: int, max_features: int, min_leaf: int
) -> np.ndarray:
    """Pre-drawn per-split feature subsets, one sorted row per potential split.

    Row t holds the indices of the ``max_features`` smallest entries of the
    t-th row of random keys — a uniform subset without replacement.
    """
    cap = 2 * (n // max(1, min_leaf)) + 3
    keys = rng.random((cap, p))
    part = np.argpartition(keys, max_features - 1, axis=1)
    return np.sort(part[:, :max_features], axis=1)


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    features: np.ndarray,
    min_leaf: int,
) -> tuple[float, int, float] | None:
    """(gain, feature, threshold) of the best valid split, or None.

    Vectorized over all candidate features: sort each column once, build
    target prefix sums, score every boundary, mask boundaries that repeat a
    value or violate min_leaf.
    """
    n = idx.size
    Xn = X[np.ix_(idx, features)]
    yn = y[idx]
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn[order]
    prefix = np.cumsum(ys, axis=0)
    total = prefix[-1]

    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    left_sum = prefix[:-1]
    right_sum = total[None, :] - left_sum
    score = left_sum * left_sum / n_left + right_sum * right_sum / (n - n_left)

    valid = xs[1:] > xs[:-1]
    half = np.zeros(n - 1, dtype=bool)
    half[min_leaf - 1 : n - min_leaf] = True
    valid &= half[:, None]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)

    # Feature-major flat argmax: first occurrence wins, giving the (lowest
    # feature index, lowest threshold) tie-break over sorted `features`.
    flat = np.argmax(score.T)
    j, pos = divmod(int(flat), n - 1)
    tj = float(total[j])
    gain = float(score[pos, j]) - tj * tj / n
    threshold = (float(xs[pos, j]) + float(xs[pos + 1, j])) / 2.0
    return gain, int(features[j]), threshold


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    depth: int,
    params: CartParams,
    pool: np.ndarray | None,
    pool_pos: list[int],
) -> TreeNode:
    yn = y[idx]
    # Sequential-sum mean (cumsum is sequential) so both engines agree bitwise.
    node = TreeNode(
        value=float(np.cumsum(yn)[-1] / yn.size), n_samples=int(idx.size)
    )
    if (
        depth >= params.max_depth
        or idx.size < params.min_split
        or np.ptp(yn) == 0.0
    ):
        return node

    if pool is not None:
        features = pool[pool_pos[0]]
        pool_pos[0] += 1
    else:
        features = np.arange(X.shape[1])

    found = _best_split(X, y, idx, features, params.min_leaf)
    if found is None:
        return node
    gain, feature, threshold = found
    if gain <= params.min_impurity_decrease:
        return node

    go_left = X[idx, feature] <= threshold
    node.feature = feature
    node.threshold = threshold
    node.left = _grow(X, y, idx[go_left], depth + 1, params, pool, pool_pos)
    node.right = _grow(X, y, idx[~go_left], depth + 1, params, pool, pool_pos)
    return node


def _build_from_arrays(arrays, node_id: int) -> TreeNode:
    feature, threshold, value, nsamp, left, right = arrays
    f = int(feature[node_id])
    node = TreeNode(value=float(value[node_id]), n_samples=int(nsamp[node_id]))
    if f >= 0:
        node.feature = f
        node.threshold = float(threshold[node_id])
        node.left = _build_from_arrays(arrays, int(left[node_id]))
        node.right = _build_from_arrays(arrays, int(right[node_id]))
    return node


def fit_tree_with_train_pred(
    X: np.ndarray,
    y: np.ndarray,
    params: CartParams,
    pool: np.ndarray | None = None,
    engine: str = "auto",
    presorted: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[TreeNode, np.ndarray]:
    """Grow a tree and return it with its predictions on the training rows.

    ``engine`` is "auto" (numba when available), "fast", or "reference".
    ``presorted`` lets a caller that refits on the same X (boosting) reuse
    the ``_fast.presort(X)`` result across rounds.
    """
    if engine not in ("auto", "fast", "reference"):
        raise InvalidConfig(f"unknown engine {engine!r}")
    if engine == "fast" and _fast is None:
        raise InvalidConfig("fast engine requested but numba is unavailable")
    use_fast = _fast is not None and engine != "reference"

    if use_fast:
        if pool is None:
            pool_arr = np.zeros((0, 1), dtype=np.int64)
            use_pool = False
        else:
            pool_arr = np.ascontiguousarray(pool, dtype=np.int64)
            use_pool = True
        XT, order0 = presorted if presorted is not None else _fast.presort(X)
        out = _fast.grow_tree(
            XT,
            np.ascontiguousarray(y),
            order0,
            params.max_depth,
            params.min_leaf,
            params.min_split,
            params.min_impurity_decrease,
            pool_arr,
            use_pool,
        )
        feature, threshold, value, nsamp, left, right, n_nodes, train_pred = out
        arrays = (
            feature[:n_nodes], threshold[:n_nodes], value[:n_nodes],
            nsamp[:n_nodes], left[:n_nodes], right[:n_nodes],
        )
        return _build_from_arrays(arrays, 0), train_pred

    root = _grow(X, y, np.arange(X.shape[0]), 0, params, pool, [0])
    return root, tree_predict_batch(root, X)


def cart_fit(
    X: np.ndarray,
    y: np.ndarray,
    params: CartParams | None = None,
    *,
    rng: np.random.Generator | None = None,
    max_features: int | None = None,
    engine: str = "auto",
) -> TreeNode:
    """Grow a regression tree; ``max_features`` (with ``rng``) considers a
    fresh random feature subset at every split, as the forest requires."""
    if params is None:
        params = CartParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise DimensionMismatch(
            f"y shape {y.shape} does not match {X.shape[0]} rows"
        )
    if X.shape[0] == 0:
        raise EmptyTrainingSet("no training rows")
    if not np.isfinite(y).all():
        raise NonFiniteTarget("targets contain nan or inf")

    pool = None
    if max_features is not None and max_features < X.shape[1]:
        if rng is None:
            raise InvalidConfig("feature subsampling requires an rng")
        pool = subset_pool(
            rng, X.shape[0], X.shape[1], max_features, params.min_leaf
        )
    root, _ = fit_tree_with_train_pred(X, y, params, pool, engine)
    return root


def max_feature_index(node: TreeNode) -> int:
    """Largest feature index referenced anywhere in the tree, -1 for a leaf."""
    best = -1
    stack = [node]
    while stack:
        cur = stack.pop()
        if not cur.is_leaf:
            best = max(best, cur.feature)
            stack.append(cur.left)
            stack.append(cur.right)
    return best


def tree_predict(node: TreeNode, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    while not node.is_leaf:
        if node.feature >= x.shape[0]:
            raise DimensionMismatch(
                f"input has {x.shape[0]} features, node needs index "
                f"{node.feature}"
            )
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.value


def tree_predict_batch(node: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    need = max_feature_index(node)
    if X.ndim != 2 or X.shape[1] <= need:
        raise DimensionMismatch(
            f"input shape {X.shape} too narrow for feature index {need}"
        )
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        cur, idx = stack.pop()
        if idx.size == 0:
            continue
        if cur.is_leaf:
            out[idx] = cur.value
        else:
            go_left = X[idx, cur.feature] <= cur.threshold
            stack.append((cur.left, idx[go_left]))
            stack.append((cur.right, idx[~go_left]))
    return out
