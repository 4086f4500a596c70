"""Feature vector / matrix containers and CSV serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InconsistentNames, NoWindows


@dataclass
class FeatureVector:
    """Ordered named feature values; NaN entries are flagged missing."""

    names: list[str]
    values: np.ndarray
    missing: np.ndarray
    provenance: str = ""

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.missing = np.asarray(self.missing, dtype=bool)
        if len(self.names) != self.values.size or self.values.size != self.missing.size:
            raise InconsistentNames("names, values and missing mask must align")
        if len(set(self.names)) != len(self.names):
            raise InconsistentNames("feature names must be unique")

    @classmethod
    def from_dict(
        cls,
        ordered_names: list[str],
        present: dict[str, float],
        provenance: str = "",
    ) -> "FeatureVector":
        """Build a vector over ``ordered_names``; absent names become missing."""
        values = np.full(len(ordered_names), np.nan)
        missing = np.ones(len(ordered_names), dtype=bool)
        for i, name in enumerate(ordered_names):
            v = present.get(name)
            if v is not None and np.isfinite(v):
                values[i] = v
                missing[i] = False
        return cls(list(ordered_names), values, missing, provenance)

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}


@dataclass
class FeatureMatrix:
    """Dense per-unit feature matrix with named columns.

    After :func:`assemble_matrix` the data is fully finite: missing entries
    are mean-imputed and all-missing columns dropped (recorded in
    ``warnings`` / ``imputed``).
    """

    columns: list[str]
    row_ids: list[str]
    data: np.ndarray
    imputed: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise InconsistentNames("matrix data must be 2-D")
        if self.data.shape != (len(self.row_ids), len(self.columns)):
            raise InconsistentNames(
                f"matrix shape {self.data.shape} does not match "
                f"{len(self.row_ids)} rows x {len(self.columns)} columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise InconsistentNames("column names must be unique")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def select(self, columns: list[str]) -> "FeatureMatrix":
        """Column subset, preserving the requested order."""
        index = {c: i for i, c in enumerate(self.columns)}
        try:
            idx = [index[c] for c in columns]
        except KeyError as exc:
            raise InconsistentNames(f"unknown column {exc.args[0]!r}") from None
        return FeatureMatrix(list(columns), list(self.row_ids), self.data[:, idx])

    def take_rows(self, indices: np.ndarray) -> "FeatureMatrix":
        ids = [self.row_ids[i] for i in indices]
        return FeatureMatrix(list(self.columns), ids, self.data[indices])

    def to_csv(self, path: str | Path) -> None:
        """Write the matrix (plus a JSON sidecar with imputation metadata)."""
        path = Path(path)
        lines = ["unit_id," + ",".join(self.columns)]
        for rid, row in zip(self.row_ids, self.data):
            lines.append(rid + "," + ",".join(repr(float(v)) for v in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        sidecar = {
            "imputed": self.imputed,
            "warnings": self.warnings,
            "n_rows": len(self.row_ids),
            "n_columns": len(self.columns),
        }
        path.with_suffix(path.suffix + ".meta.json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeatureMatrix":
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines:
            raise InconsistentNames(f"empty feature matrix file {path}")
        header = lines[0].split(",")
        if header[0] != "unit_id":
            raise InconsistentNames(f"bad feature matrix header in {path}")
        columns = header[1:]
        row_ids = []
        rows = []
        for line in lines[1:]:
            if not line.strip():
                continue
            parts = line.split(",")
            row_ids.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
        data = np.array(rows, dtype=np.float64).reshape(len(row_ids), len(columns))
        return cls(columns, row_ids, data)


def unit_features(window_vectors: list[FeatureVector], provenance: str = "") -> FeatureVector:
    """Aggregate per-window vectors to one unit vector (mean + std per feature).

    Missing window values are excluded; a feature missing in every window
    stays missing. Std uses the n-1 denominator, 0 for a single window.
    """
    if not window_vectors:
        raise NoWindows("unit has no window vectors")
    names = window_vectors[0].names
    for fv in window_vectors[1:]:
        if fv.names != names:
            raise InconsistentNames("window vectors carry different name lists")
    values = np.vstack([fv.values for fv in window_vectors])
    missing = np.vstack([fv.missing for fv in window_vectors])
    present = ~missing
    counts = present.sum(axis=0)

    out_names: list[str] = []
    out_values = np.empty(2 * len(names))
    out_missing = np.zeros(2 * len(names), dtype=bool)
    for j, name in enumerate(names):
        mean_i, std_i = 2 * j, 2 * j + 1
        out_names.append(f"{name}.wmean")
        out_names.append(f"{name}.wstd")
        n = counts[j]
        if n == 0:
            out_values[mean_i] = np.nan
            out_values[std_i] = np.nan
            out_missing[mean_i] = True
            out_missing[std_i] = True
            continue
        col = values[present[:, j], j]
        out_values[mean_i] = col.mean()
        out_values[std_i] = col.std(ddof=1) if n > 1 else 0.0
    return FeatureVector(out_names, out_values, out_missing, provenance)


def assemble_matrix(unit_vectors: list[tuple[str, FeatureVector]]) -> FeatureMatrix:
    """Stack unit vectors (already in unit start order) into a FeatureMatrix.

    Missing entries are imputed with the column mean over non-missing rows;
    all-missing columns are dropped with a warning.
    """
    if not unit_vectors:
        raise NoWindows("no unit vectors to assemble")
    names = unit_vectors[0][1].names
    for _, fv in unit_vectors[1:]:
        if fv.names != names:
            raise InconsistentNames("unit vectors carry different name lists")
    row_ids = [uid for uid, _ in unit_vectors]
    data = np.vstack([fv.values for _, fv in unit_vectors])
    missing = np.vstack([fv.missing for _, fv in unit_vectors])
    data = np.where(missing, np.nan, data)

    keep: list[int] = []
    imputed: dict[str, int] = {}
    warnings: list[str] = []
    for j, name in enumerate(names):
        col_missing = missing[:, j]
        n_missing = int(col_missing.sum())
        if n_missing == len(row_ids):
            warnings.append(f"dropped all-missing column {name!r}")
            continue
        if n_missing:
            fill = data[~col_missing, j].mean()
            data[col_missing, j] = fill
            imputed[name] = n_missing
        keep.append(j)
    return FeatureMatrix(
        [names[j] for j in keep], row_ids, data[:, keep], imputed, warnings
    )
