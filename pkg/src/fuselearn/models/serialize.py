"""Versioned JSON round-trip for fitted models."""

from __future__ import annotations

import json

from ..errors import SchemaViolation
from .cart import TreeNode
from .ensembles import ForestModel, ForestParams, GbdtModel, GbdtParams

SCHEMA_VERSION = "fuselearn-model/1"


def _node_to_doc(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"value": node.value, "n": node.n_samples}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "n": node.n_samples,
        "left": _node_to_doc(node.left),
        "right": _node_to_doc(node.right),
    }


def _node_from_doc(doc: dict) -> TreeNode:
    if not isinstance(doc, dict) or "n" not in doc:
        raise SchemaViolation("tree node must be an object with an 'n' field")
    if "feature" in doc:
        for key in ("threshold", "left", "right"):
            if key not in doc:
                raise SchemaViolation(f"split node missing {key!r}")
        left = _node_from_doc(doc["left"])
        right = _node_from_doc(doc["right"])
        return TreeNode(
            value=(left.value * left.n_samples + right.value * right.n_samples)
            / (left.n_samples + right.n_samples),
            n_samples=int(doc["n"]),
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            left=left,
            right=right,
        )
    if "value" not in doc:
        raise SchemaViolation("leaf node missing 'value'")
    return TreeNode(value=float(doc["value"]), n_samples=int(doc["n"]))


def serialize_model(model) -> str:
    if isinstance(model, TreeNode):
        doc = {"kind": "cart", "tree": _node_to_doc(model)}
    elif isinstance(model, ForestModel):
        doc = {
            "kind": "forest",
            "trees": [_node_to_doc(t) for t in model.trees],
            "tree_seeds": list(model.tree_seeds),
            "max_features": model.max_features,
            "n_trees": model.params.n_trees,
            "bootstrap": model.params.bootstrap,
        }
    elif isinstance(model, GbdtModel):
        doc = {
            "kind": "gbdt",
            "base": model.base,
            "learning_rate": model.learning_rate,
            "trees": [_node_to_doc(t) for t in model.trees],
            "train_mse": list(model.train_mse),
        }
    else:
        raise SchemaViolation(f"cannot serialize {type(model).__name__}")
    doc["version"] = SCHEMA_VERSION
    return json.dumps(doc, sort_keys=True)


def deserialize_model(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaViolation("model document must be a JSON object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise SchemaViolation(
            f"version {version!r} unsupported, expected {SCHEMA_VERSION!r}"
        )
    kind = doc.get("kind")
    try:
        if kind == "cart":
            return _node_from_doc(doc["tree"])
        if kind == "forest":
            return ForestModel(
                trees=tuple(_node_from_doc(t) for t in doc["trees"]),
                tree_seeds=tuple(int(s) for s in doc["tree_seeds"]),
                max_features=int(doc["max_features"]),
                params=ForestParams(
                    n_trees=int(doc["n_trees"]), bootstrap=bool(doc["bootstrap"])
                ),
            )
        if kind == "gbdt":
            return GbdtModel(
                base=float(doc["base"]),
                trees=tuple(_node_from_doc(t) for t in doc["trees"]),
                learning_rate=float(doc["learning_rate"]),
                train_mse=tuple(float(v) for v in doc["train_mse"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"malformed {kind} document: {exc}") from exc
    raise SchemaViolation(f"unknown model kind {kind!r}")
