"""Regression models and the cross-validation harness."""

from .cart import (
    CartParams,
    TreeNode,
    cart_fit,
    max_feature_index,
    tree_predict,
    tree_predict_batch,
)
from .ensembles import (
    ForestModel,
    ForestParams,
    GbdtModel,
    GbdtParams,
    forest_fit,
    forest_predict,
    gbdt_fit,
    gbdt_predict,
)
from .evaluate import (
    MODEL_LABELS,
    MODEL_NAMES,
    CvResult,
    EvaluationReport,
    FoldRecord,
    channel_combinations,
    evaluate_combinations,
    fit_model,
    kfold_assignments,
    kfold_cv,
    predict_model,
    r2_score,
)
from .serialize import SCHEMA_VERSION, deserialize_model, serialize_model

__all__ = [
    "CartParams",
    "TreeNode",
    "cart_fit",
    "max_feature_index",
    "tree_predict",
    "tree_predict_batch",
    "ForestModel",
    "ForestParams",
    "GbdtModel",
    "GbdtParams",
    "forest_fit",
    "forest_predict",
    "gbdt_fit",
    "gbdt_predict",
    "MODEL_LABELS",
    "MODEL_NAMES",
    "CvResult",
    "EvaluationReport",
    "FoldRecord",
    "channel_combinations",
    "evaluate_combinations",
    "fit_model",
    "kfold_assignments",
    "kfold_cv",
    "predict_model",
    "r2_score",
    "SCHEMA_VERSION",
    "deserialize_model",
    "serialize_model",
]
