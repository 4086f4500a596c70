"""Bagged random forests and squared-loss gradient boosting over CART trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    DimensionMismatch,
    InvalidConfig,
    NonFiniteTarget,
    TooFewRows,
)
from .cart import (
    CartParams,
    TreeNode,
    _fast,
    cart_fit,
    fit_tree_with_train_pred,
    subset_pool,
    tree_predict_batch,
)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    bootstrap: bool = True
    max_features: int | None = None  # None -> max(1, p // 3) at fit time
    tree: CartParams = field(default_factory=CartParams)

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidConfig(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_features is not None and self.max_features < 1:
            raise InvalidConfig("max_features must be >= 1 or None")


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeNode, ...]
    tree_seeds: tuple[int, ...]
    max_features: int
    params: ForestParams


def forest_fit(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams | None = None,
    seed: int = 0,
    engine: str = "auto",
) -> ForestModel:
    """Bootstrap-bagged trees, a fresh random feature subset at every split.

    Per-tree seeds come from SeedSequence(seed) substreams, so tree t is the
    same no matter how many trees are built or in what order. Each tree's rng
    first draws its bootstrap rows, then feeds the per-split subsets.
    """
    if params is None:
        params = ForestParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise TooFewRows(f"forest needs >= 2 rows, got {n}")
    max_features = params.max_features
    if max_features is None:
        max_features = max(1, X.shape[1] // 3)
    max_features = min(max_features, X.shape[1])
    tree_seeds = np.random.SeedSequence(seed).generate_state(
        params.n_trees, np.uint64
    )
    trees = []
    for tree_seed in tree_seeds:
        rng = np.random.default_rng(tree_seed)
        if params.bootstrap:
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        trees.append(
            cart_fit(
                X[rows],
                y[rows],
                params.tree,
                rng=rng,
                max_features=max_features,
                engine=engine,
            )
        )
    return ForestModel(
        trees=tuple(trees),
        tree_seeds=tuple(int(s) for s in tree_seeds),
        max_features=int(max_features),
        params=params,
    )


def forest_predict(model: ForestModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    acc = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        acc += tree_predict_batch(tree, X)
    return acc / len(model.trees)


def forest_fit_predict(
    X: np.ndarray,
    y: np.ndarray,
    X_test: np.ndarray,
    params: ForestParams | None = None,
    seed: int = 0,
    engine: str = "auto",
) -> np.ndarray:
    """``forest_predict(forest_fit(X, y), X_test)`` fused into one pass.

    The fast path draws every tree's bootstrap rows and subset pool with the
    same per-tree generators as ``forest_fit``, then grows and evaluates all
    trees in a single kernel call without materializing TreeNode objects.
    Output is bitwise equal to the two-step route.
    """
    if params is None:
        params = ForestParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    X_test = np.ascontiguousarray(X_test, dtype=np.float64)
    n = X.shape[0]
    if X.ndim != 2 or X_test.ndim != 2 or X_test.shape[1] != X.shape[1]:
        raise DimensionMismatch(
            f"train shape {X.shape} vs test shape {X_test.shape}"
        )
    if engine == "reference" or _fast is None:
        model = forest_fit(X, y, params, seed=seed, engine=engine)
        return forest_predict(model, X_test)
    if n < 2:
        raise TooFewRows(f"forest needs >= 2 rows, got {n}")
    if not np.isfinite(y).all():
        raise NonFiniteTarget("targets contain nan or inf")

    p = X.shape[1]
    max_features = params.max_features
    if max_features is None:
        max_features = max(1, p // 3)
    max_features = min(max_features, p)
    tree_seeds = np.random.SeedSequence(seed).generate_state(
        params.n_trees, np.uint64
    )
    T = params.n_trees
    rows_all = np.empty((T, n), dtype=np.int64)
    use_pool = max_features < p
    if use_pool:
        cap = 2 * (n // max(1, params.tree.min_leaf)) + 3
        pools = np.empty((T, cap, max_features), dtype=np.int64)
    else:
        pools = np.zeros((T, 1, 1), dtype=np.int64)
    for t, tree_seed in enumerate(tree_seeds):
        rng = np.random.default_rng(tree_seed)
        if params.bootstrap:
            rows_all[t] = rng.integers(0, n, size=n)
        else:
            rows_all[t] = np.arange(n)
        if use_pool:
            pools[t] = subset_pool(
                rng, n, p, max_features, params.tree.min_leaf
            )
    XTall = np.ascontiguousarray(X[rows_all].transpose(0, 2, 1))
    order_all = np.argsort(XTall, axis=2, kind="stable")
    y_all = y[rows_all]
    return _fast.forest_kernel(
        XTall,
        order_all,
        y_all,
        pools,
        use_pool,
        X_test,
        params.tree.max_depth,
        params.tree.min_leaf,
        params.tree.min_split,
        params.tree.min_impurity_decrease,
    )


@dataclass(frozen=True)
class GbdtParams:
    n_trees: int = 200
    learning_rate: float = 0.1
    max_depth: int = 3
    min_leaf: int = 2
    min_split: int = 4

    def __post_init__(self):
        if self.n_trees < 0:
            raise InvalidConfig(f"n_trees must be >= 0, got {self.n_trees}")
        if self.learning_rate <= 0.0:
            raise InvalidConfig("learning_rate must be > 0")

    def tree_params(self) -> CartParams:
        return CartParams(
            max_depth=self.max_depth,
            min_leaf=self.min_leaf,
            min_split=self.min_split,
        )


@dataclass(frozen=True)
class GbdtModel:
    base: float
    trees: tuple[TreeNode, ...]
    learning_rate: float
    train_mse: tuple[float, ...]  # mse after round t; index 0 = base model


def gbdt_fit(
    X: np.ndarray,
    y: np.ndarray,
    params: GbdtParams | None = None,
    seed: int = 0,
    engine: str = "auto",
) -> GbdtModel:
    """Stagewise residual fitting: F_0 = mean(y), F_t = F_{t-1} + eta*tree_t.

    Deterministic: trees use every feature, so ``seed`` has no effect on the
    result (kept for interface symmetry). Training MSE after each round is
    recorded; with leaf values equal to residual means it never increases for
    learning rates in (0, 2].
    """
    if params is None:
        params = GbdtParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (n,):
        raise DimensionMismatch(f"y shape {y.shape} does not match {n} rows")
    if n < 2:
        raise TooFewRows(f"gbdt needs >= 2 rows, got {n}")
    if not np.isfinite(y).all():
        raise NonFiniteTarget("targets contain nan or inf")
    tree_params = params.tree_params()
    base = float(y.mean())
    current = np.full(n, base)
    trees = []
    mse = [float(((y - current) ** 2).mean())]
    # X never changes across rounds, so its column sort orders are shared.
    presorted = None
    if engine != "reference" and _fast is not None:
        presorted = _fast.presort(X)
    for _ in range(params.n_trees):
        residual = y - current
        tree, fitted = fit_tree_with_train_pred(
            X, residual, tree_params, engine=engine, presorted=presorted
        )
        current = current + params.learning_rate * fitted
        trees.append(tree)
        mse.append(float(((y - current) ** 2).mean()))
    return GbdtModel(
        base=base,
        trees=tuple(trees),
        learning_rate=params.learning_rate,
        train_mse=tuple(mse),
    )


def gbdt_predict(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    acc = np.full(X.shape[0], model.base, dtype=np.float64)
    for tree in model.trees:
        acc += model.learning_rate * tree_predict_batch(tree, X)
    return acc


def gbdt_fit_predict(
    X: np.ndarray,
    y: np.ndarray,
    X_test: np.ndarray,
    params: GbdtParams | None = None,
    seed: int = 0,
    engine: str = "auto",
) -> np.ndarray:
    """``gbdt_predict(gbdt_fit(X, y), X_test)`` fused into one kernel call,
    bitwise equal to the two-step route."""
    if params is None:
        params = GbdtParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    X_test = np.ascontiguousarray(X_test, dtype=np.float64)
    if X.ndim != 2 or X_test.ndim != 2 or X_test.shape[1] != X.shape[1]:
        raise DimensionMismatch(
            f"train shape {X.shape} vs test shape {X_test.shape}"
        )
    if engine == "reference" or _fast is None:
        model = gbdt_fit(X, y, params, seed=seed, engine=engine)
        return gbdt_predict(model, X_test)
    n = X.shape[0]
    if y.shape != (n,):
        raise DimensionMismatch(f"y shape {y.shape} does not match {n} rows")
    if n < 2:
        raise TooFewRows(f"gbdt needs >= 2 rows, got {n}")
    if not np.isfinite(y).all():
        raise NonFiniteTarget("targets contain nan or inf")
    tp = params.tree_params()
    XT, order0 = _fast.presort(X)
    return _fast.gbdt_kernel(
        XT,
        order0,
        np.ascontiguousarray(y),
        float(y.mean()),
        X_test,
        params.n_trees,
        params.learning_rate,
        tp.max_depth,
        tp.min_leaf,
        tp.min_split,
        tp.min_impurity_decrease,
    )
