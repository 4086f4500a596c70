"""R² scoring, 10-fold cross-validation, and the evaluation report.

The channel pipelines (filter/scale/PCA) are fitted inside every fold, on
that fold's training rows only, then the fused training matrix feeds the
model. Each fold keeps an audit record of exactly which row ids were used
for fitting so leakage can be asserted after the fact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..config import CHANNEL_ORDER
from ..errors import (
    ConstantTruth,
    DimensionMismatch,
    InvalidConfig,
    RowMismatch,
    TooFewRows,
)
from ..features.vectors import FeatureMatrix
from ..fusion import fit_pipeline, fuse
from .cart import cart_fit, tree_predict_batch
from .ensembles import (
    forest_fit,
    forest_fit_predict,
    forest_predict,
    gbdt_fit,
    gbdt_fit_predict,
    gbdt_predict,
)

MODEL_NAMES = ("cart", "forest", "gbdt")
MODEL_LABELS = {"cart": "CART", "forest": "Random Forest", "gbdt": "GBDT"}


def r2_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape:
        raise DimensionMismatch(
            f"shapes differ: {y_true.shape} vs {y_pred.shape}"
        )
    if y_true.shape[0] < 2:
        raise TooFewRows("R^2 needs >= 2 points")
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ConstantTruth("R^2 undefined for constant truth")
    ss_res = float(((y_true - y_pred) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def fit_model(name: str, X: np.ndarray, y: np.ndarray, seed: int = 0):
    if name == "cart":
        return cart_fit(X, y)
    if name == "forest":
        return forest_fit(X, y, seed=seed)
    if name == "gbdt":
        return gbdt_fit(X, y, seed=seed)
    raise InvalidConfig(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


def predict_model(name: str, model, X: np.ndarray) -> np.ndarray:
    if name == "cart":
        return tree_predict_batch(model, X)
    if name == "forest":
        return forest_predict(model, X)
    if name == "gbdt":
        return gbdt_predict(model, X)
    raise InvalidConfig(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


def fit_predict(
    name: str,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_test: np.ndarray,
    seed: int = 0,
) -> np.ndarray:
    """Fused fit-then-predict; equals fit_model + predict_model bitwise but
    lets the ensembles skip materializing per-tree objects."""
    if name == "cart":
        return tree_predict_batch(cart_fit(X_train, y_train), X_test)
    if name == "forest":
        return forest_fit_predict(X_train, y_train, X_test, seed=seed)
    if name == "gbdt":
        return gbdt_fit_predict(X_train, y_train, X_test, seed=seed)
    raise InvalidConfig(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


def kfold_assignments(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Row positions of each test fold; a partition with sizes differing <= 1.

    Rows are shuffled by numpy's PCG64 generator (np.random.default_rng) so
    the assignment is identical across platforms, then split contiguously.
    """
    if k < 2:
        raise InvalidConfig(f"k must be >= 2, got {k}")
    if n < k:
        raise TooFewRows(f"need >= {k} rows for {k}-fold CV, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


@dataclass(frozen=True)
class FoldRecord:
    """Audit trail of one fold: who was trained on, who was scored on."""

    fold: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    pipeline_fit_ids: dict[str, tuple[str, ...]]
    model_seed: int
    r2: float


@dataclass(frozen=True)
class CvResult:
    combo: tuple[str, ...]
    model: str
    k: int
    seed: int
    fold_r2: tuple[float, ...]
    folds: tuple[FoldRecord, ...]

    @property
    def combo_label(self) -> str:
        return "+".join(self.combo)

    @property
    def mean_r2(self) -> float:
        return float(np.mean(self.fold_r2))


def _check_aligned(channels: dict[str, FeatureMatrix], labels: np.ndarray):
    ids = None
    for channel, matrix in channels.items():
        if ids is None:
            ids = list(matrix.row_ids)
        elif list(matrix.row_ids) != ids:
            raise RowMismatch(f"row ids of channel {channel!r} differ")
    if ids is None:
        raise InvalidConfig("no channels given")
    if len(ids) != labels.shape[0]:
        raise RowMismatch(f"{len(ids)} rows vs {labels.shape[0]} labels")
    return ids


def _train_indices(folds: list[np.ndarray], fold_no: int) -> np.ndarray:
    test_set = set(folds[fold_no].tolist())
    return np.array(
        [i for f in folds for i in f.tolist() if i not in test_set]
    )


@dataclass(frozen=True)
class _FoldTransform:
    """One channel's fitted pipeline and reduced matrices for one fold."""

    fit_ids: tuple[str, ...]
    train: FeatureMatrix
    test: FeatureMatrix


def _fold_transforms(
    channels: dict[str, FeatureMatrix],
    labels: np.ndarray,
    folds: list[np.ndarray],
    alpha: float,
    retention: float,
) -> list[dict[str, _FoldTransform]]:
    """Per fold, per channel: pipeline fitted on training rows only, plus the
    transformed train/test matrices. Shared across every channel combination
    and model, since the per-channel fit never sees the other channels."""
    out: list[dict[str, _FoldTransform]] = []
    for fold_no, test_idx in enumerate(folds):
        train_idx = _train_indices(folds, fold_no)
        y_train = labels[train_idx]
        per_channel: dict[str, _FoldTransform] = {}
        for channel in (c for c in CHANNEL_ORDER if c in channels):
            matrix = channels[channel]
            train_fm = matrix.take_rows(train_idx)
            pipeline = fit_pipeline(channel, train_fm, y_train, alpha, retention)
            per_channel[channel] = _FoldTransform(
                fit_ids=pipeline.fit_row_ids,
                train=pipeline.transform(train_fm),
                test=pipeline.transform(matrix.take_rows(test_idx)),
            )
        out.append(per_channel)
    return out


def _cv_from_transforms(
    transforms: list[dict[str, _FoldTransform]],
    labels: np.ndarray,
    row_ids: list[str],
    folds: list[np.ndarray],
    combo: tuple[str, ...],
    model: str,
    k: int,
    seed: int,
) -> CvResult:
    model_seeds = np.random.SeedSequence(seed).generate_state(k, np.uint64)
    records = []
    for fold_no, test_idx in enumerate(folds):
        train_idx = _train_indices(folds, fold_no)
        y_train = labels[train_idx]
        y_test = labels[test_idx]
        parts = {c: transforms[fold_no][c] for c in combo}
        X_train = fuse({c: t.train for c, t in parts.items()})
        X_test = fuse({c: t.test for c, t in parts.items()})
        model_seed = int(model_seeds[fold_no])
        pred = fit_predict(model, X_train.data, y_train, X_test.data, model_seed)
        records.append(
            FoldRecord(
                fold=fold_no,
                train_ids=tuple(row_ids[i] for i in train_idx),
                test_ids=tuple(row_ids[i] for i in test_idx),
                pipeline_fit_ids={c: t.fit_ids for c, t in parts.items()},
                model_seed=model_seed,
                r2=r2_score(y_test, pred),
            )
        )
    return CvResult(
        combo=combo,
        model=model,
        k=k,
        seed=seed,
        fold_r2=tuple(r.r2 for r in records),
        folds=tuple(records),
    )


def kfold_cv(
    channels: dict[str, FeatureMatrix],
    labels: np.ndarray,
    model: str = "forest",
    k: int = 10,
    seed: int = 0,
    alpha: float = 0.05,
    retention: float = 0.95,
) -> CvResult:
    """Per-fold R² for one channel combination and one model."""
    labels = np.asarray(labels, dtype=np.float64)
    row_ids = _check_aligned(channels, labels)
    combo = tuple(c for c in CHANNEL_ORDER if c in channels)
    folds = kfold_assignments(len(row_ids), k, seed)
    transforms = _fold_transforms(channels, labels, folds, alpha, retention)
    return _cv_from_transforms(
        transforms, labels, row_ids, folds, combo, model, k, seed
    )


def channel_combinations(available) -> list[tuple[str, ...]]:
    """All non-empty subsets of the available channels: singles, pairs, then
    the full set, each in canonical (video, gaze, mouse) order."""
    present = [c for c in CHANNEL_ORDER if c in set(available)]
    out: list[tuple[str, ...]] = []
    for size in range(1, len(present) + 1):
        out.extend(combinations(present, size))
    return out


@dataclass(frozen=True)
class EvaluationReport:
    results: tuple[CvResult, ...]
    seed: int
    k: int
    alpha: float
    retention: float
    fold_ids: tuple[tuple[str, ...], ...]  # test unit ids per fold

    def to_csv(self) -> str:
        """Grid of mean R²: rows = channel combinations, columns = models."""
        models = [m for m in MODEL_NAMES if any(r.model == m for r in self.results)]
        combos: list[tuple[str, ...]] = []
        for r in self.results:
            if r.combo not in combos:
                combos.append(r.combo)
        cell = {(r.combo, r.model): r.mean_r2 for r in self.results}
        lines = ["combination," + ",".join(MODEL_LABELS[m] for m in models)]
        for combo in combos:
            row = ["+".join(combo)]
            for m in models:
                v = cell.get((combo, m))
                row.append("" if v is None else repr(v))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "k": self.k,
            "alpha": self.alpha,
            "retention": self.retention,
            "folds": [list(ids) for ids in self.fold_ids],
            "results": [
                {
                    "combination": r.combo_label,
                    "model": r.model,
                    "mean_r2": r.mean_r2,
                    "fold_r2": list(r.fold_r2),
                }
                for r in self.results
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2)


def evaluate_combinations(
    channels: dict[str, FeatureMatrix],
    labels: np.ndarray,
    combos: list[tuple[str, ...]] | None = None,
    models: tuple[str, ...] = MODEL_NAMES,
    k: int = 10,
    seed: int = 0,
    alpha: float = 0.05,
    retention: float = 0.95,
) -> EvaluationReport:
    labels = np.asarray(labels, dtype=np.float64)
    row_ids = _check_aligned(channels, labels)
    if combos is None:
        combos = channel_combinations(channels)
    for combo in combos:
        missing = [c for c in combo if c not in channels]
        if missing:
            raise InvalidConfig(f"combination {combo} needs channels {missing}")
    combos = [tuple(c for c in CHANNEL_ORDER if c in combo) for combo in combos]
    for m in models:
        if m not in MODEL_NAMES:
            raise InvalidConfig(f"unknown model {m!r}")
    folds = kfold_assignments(len(row_ids), k, seed)
    needed = {c for combo in combos for c in combo}
    transforms = _fold_transforms(
        {c: channels[c] for c in needed}, labels, folds, alpha, retention
    )
    results = []
    for combo in combos:
        for m in models:
            results.append(
                _cv_from_transforms(
                    transforms, labels, row_ids, folds, combo, m, k, seed
                )
            )
    fold_ids = tuple(tuple(row_ids[i] for i in f) for f in folds)
    return EvaluationReport(
        results=tuple(results),
        seed=seed,
        k=k,
        alpha=alpha,
        retention=retention,
        fold_ids=fold_ids,
    )
