"""Per-channel feature filtering, standardization, PCA, and feature-level fusion.

Stage order per channel: hypothesis filter -> scaler -> PCA, fitted on
training rows only. Fusion concatenates the reduced channel matrices in the
fixed (video, gaze, mouse) order. All fitted artifacts are plain frozen
dataclasses; transform never mutates them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

from .config import CHANNEL_ORDER
from .errors import (
    ConstantTruth,
    DegenerateMatrix,
    DimensionMismatch,
    InvalidConfig,
    RowMismatch,
    TooFewRows,
    ZeroVarianceColumn,
)
from .features.vectors import FeatureMatrix

# Slack for cumulative-share >= retention comparisons: the shares are
# normalized so their exact sum is 1 only up to rounding.
_RETENTION_EPS = 1e-12


# --- hypothesis filter ------------------------------------------------------

@dataclass(frozen=True)
class FilterMask:
    """Columns kept by the per-channel correlation test."""

    channel: str
    kept: tuple[str, ...]
    p_values: dict[str, float]  # p per finite-variance column, kept or not
    alpha: float

    def apply(self, matrix: FeatureMatrix) -> FeatureMatrix:
        return matrix.select(list(self.kept))


def pearson_p_values(
    data: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Two-sided p of the Pearson-r t-test per column; also a defined mask.

    t = r * sqrt((n-2) / (1-r^2)) with n-2 degrees of freedom. Columns with
    zero variance have no defined r and come back masked with p = nan.
    """
    n = data.shape[0]
    if n < 3:
        raise TooFewRows(f"hypothesis test needs >= 3 rows, got {n}")
    yc = labels - labels.mean()
    sy = float(np.sqrt((yc**2).sum()))
    if sy == 0.0:
        raise ConstantTruth("labels have zero variance, correlation undefined")
    xc = data - data.mean(axis=0)
    sx = np.sqrt((xc**2).sum(axis=0))
    defined = sx > 0.0
    r = np.zeros(data.shape[1])
    np.divide(xc.T @ yc, sx * sy, out=r, where=defined)
    r = np.clip(r, -1.0, 1.0)
    df = n - 2
    one_minus_r2 = 1.0 - r * r
    ok = one_minus_r2 > 0.0
    t = np.full(data.shape[1], np.inf)
    np.divide(float(df), one_minus_r2, out=t, where=ok)
    np.sqrt(t, out=t, where=ok)
    t *= np.abs(r)
    p = np.where(np.isinf(t), 0.0, 2.0 * _sps.t.sf(t, df))
    p = np.where(defined, p, np.nan)
    return p, defined


def hypothesis_filter(
    matrix: FeatureMatrix, labels: np.ndarray, alpha: float, channel: str = ""
) -> FilterMask:
    """Keep columns whose Pearson correlation with the labels has p <= alpha.

    Zero-variance columns are always dropped. If nothing survives, the single
    smallest-p column is kept so the pipeline never goes empty (its p may
    then exceed alpha).
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidConfig(f"alpha must be in (0, 1), got {alpha!r}")
    labels = np.asarray(labels, dtype=np.float64)
    if matrix.data.shape[0] != labels.shape[0]:
        raise RowMismatch(
            f"{matrix.data.shape[0]} rows vs {labels.shape[0]} labels"
        )
    p, defined = pearson_p_values(matrix.data, labels)
    if not defined.any():
        raise DegenerateMatrix("every column has zero variance")
    keep = defined & (p <= alpha)
    if not keep.any():
        fallback = int(np.nanargmin(p))
        keep[fallback] = True
    kept = tuple(c for c, k in zip(matrix.columns, keep) if k)
    p_values = {
        c: float(pv) for c, pv, d in zip(matrix.columns, p, defined) if d
    }
    return FilterMask(channel=channel, kept=kept, p_values=p_values, alpha=alpha)


# --- scaler -----------------------------------------------------------------

@dataclass(frozen=True)
class Scaler:
    """Stored column moments (mean, std with n-1) from the fitting matrix."""

    columns: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray


def scaler_fit(matrix: FeatureMatrix) -> Scaler:
    n = matrix.data.shape[0]
    if n < 2:
        raise TooFewRows(f"scaler needs >= 2 rows, got {n}")
    mean = matrix.data.mean(axis=0)
    std = matrix.data.std(axis=0, ddof=1)
    dead = np.flatnonzero(std == 0.0)
    if dead.size:
        raise ZeroVarianceColumn(
            f"zero-variance column(s) reached the scaler: "
            f"{[matrix.columns[i] for i in dead[:5]]}"
        )
    return Scaler(columns=tuple(matrix.columns), mean=mean, std=std)


def scaler_apply(scaler: Scaler, matrix: FeatureMatrix) -> FeatureMatrix:
    if tuple(matrix.columns) != scaler.columns:
        raise DimensionMismatch("matrix columns do not match the fitted scaler")
    return FeatureMatrix(
        columns=list(matrix.columns),
        row_ids=list(matrix.row_ids),
        data=(matrix.data - scaler.mean) / scaler.std,
    )


# --- PCA --------------------------------------------------------------------

@dataclass(frozen=True)
class PcaModel:
    """Top right-singular directions of the centered fit matrix.

    ``components`` is (k, p) with orthonormal rows; ``shares`` are the
    squared-singular-value fractions of the k retained components; k is the
    smallest prefix whose cumulative share reaches ``retention``. Sign
    convention: each component's largest-magnitude entry is positive.
    """

    columns: tuple[str, ...]
    mean: np.ndarray
    components: np.ndarray
    shares: np.ndarray
    retention: float

    @property
    def k(self) -> int:
        return self.components.shape[0]


def pca_fit(matrix: FeatureMatrix, retention: float) -> PcaModel:
    if not 0.0 < retention <= 1.0:
        raise InvalidConfig(f"retention must be in (0, 1], got {retention!r}")
    n = matrix.data.shape[0]
    if n < 2:
        raise TooFewRows(f"PCA needs >= 2 rows, got {n}")
    mean = matrix.data.mean(axis=0)
    centered = matrix.data - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    total = float((s**2).sum())
    if total == 0.0:
        raise DegenerateMatrix("centered matrix has rank 0")
    shares = s**2 / total
    cumulative = np.cumsum(shares)
    k = int(np.searchsorted(cumulative, retention - _RETENTION_EPS)) + 1
    components = vt[:k].copy()
    # Deterministic sign: flip rows whose largest-|entry| is negative.
    anchor = np.take_along_axis(
        components,
        np.abs(components).argmax(axis=1, keepdims=True),
        axis=1,
    ).ravel()
    components[anchor < 0.0] *= -1.0
    return PcaModel(
        columns=tuple(matrix.columns),
        mean=mean,
        components=components,
        shares=shares[:k].copy(),
        retention=retention,
    )


def pca_transform(model: PcaModel, matrix: FeatureMatrix) -> FeatureMatrix:
    if tuple(matrix.columns) != model.columns:
        raise DimensionMismatch("matrix columns do not match the fitted PCA")
    projected = (matrix.data - model.mean) @ model.components.T
    return FeatureMatrix(
        columns=[f"pc{i + 1}" for i in range(model.k)],
        row_ids=list(matrix.row_ids),
        data=projected,
    )


# --- channel pipeline -------------------------------------------------------

@dataclass(frozen=True)
class ChannelPipeline:
    """Filter + scaler + PCA for one channel, fitted on training rows only.

    ``fit_row_ids`` records exactly which rows the stages were fitted on so
    evaluation can audit train/test separation.
    """

    channel: str
    mask: FilterMask
    scaler: Scaler
    pca: PcaModel
    fit_row_ids: tuple[str, ...]

    def transform(self, matrix: FeatureMatrix) -> FeatureMatrix:
        filtered = self.mask.apply(matrix)
        scaled = scaler_apply(self.scaler, filtered)
        return pca_transform(self.pca, scaled)

    def to_json(self) -> str:
        doc = {
            "channel": self.channel,
            "mask": {
                "kept": list(self.mask.kept),
                "p_values": self.mask.p_values,
                "alpha": self.mask.alpha,
            },
            "scaler": {
                "columns": list(self.scaler.columns),
                "mean": self.scaler.mean.tolist(),
                "std": self.scaler.std.tolist(),
            },
            "pca": {
                "columns": list(self.pca.columns),
                "mean": self.pca.mean.tolist(),
                "components": self.pca.components.tolist(),
                "shares": self.pca.shares.tolist(),
                "retention": self.pca.retention,
            },
            "fit_row_ids": list(self.fit_row_ids),
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ChannelPipeline":
        doc = json.loads(text)
        mask = FilterMask(
            channel=doc["channel"],
            kept=tuple(doc["mask"]["kept"]),
            p_values=doc["mask"]["p_values"],
            alpha=doc["mask"]["alpha"],
        )
        scaler = Scaler(
            columns=tuple(doc["scaler"]["columns"]),
            mean=np.array(doc["scaler"]["mean"]),
            std=np.array(doc["scaler"]["std"]),
        )
        pca = PcaModel(
            columns=tuple(doc["pca"]["columns"]),
            mean=np.array(doc["pca"]["mean"]),
            components=np.array(doc["pca"]["components"]),
            shares=np.array(doc["pca"]["shares"]),
            retention=doc["pca"]["retention"],
        )
        return cls(
            channel=doc["channel"],
            mask=mask,
            scaler=scaler,
            pca=pca,
            fit_row_ids=tuple(doc["fit_row_ids"]),
        )


def fit_pipeline(
    channel: str,
    matrix: FeatureMatrix,
    labels: np.ndarray,
    alpha: float,
    retention: float,
) -> ChannelPipeline:
    mask = hypothesis_filter(matrix, labels, alpha, channel=channel)
    filtered = mask.apply(matrix)
    scaler = scaler_fit(filtered)
    scaled = scaler_apply(scaler, filtered)
    pca = pca_fit(scaled, retention)
    return ChannelPipeline(
        channel=channel,
        mask=mask,
        scaler=scaler,
        pca=pca,
        fit_row_ids=tuple(matrix.row_ids),
    )


# --- fusion -----------------------------------------------------------------

def fuse(channel_matrices: dict[str, FeatureMatrix]) -> FeatureMatrix:
    """Concatenate reduced channel matrices in the fixed (video, gaze, mouse)
    order; column names get the channel prefix."""
    if not channel_matrices:
        raise InvalidConfig("no channel matrices to fuse")
    unknown = set(channel_matrices) - set(CHANNEL_ORDER)
    if unknown:
        raise InvalidConfig(f"unknown channel(s): {sorted(unknown)}")
    order = [c for c in CHANNEL_ORDER if c in channel_matrices]
    first = channel_matrices[order[0]]
    columns: list[str] = []
    blocks: list[np.ndarray] = []
    for channel in order:
        m = channel_matrices[channel]
        if list(m.row_ids) != list(first.row_ids):
            raise RowMismatch(
                f"row ids of channel {channel!r} differ from {order[0]!r}"
            )
        columns.extend(f"{channel}.{c}" for c in m.columns)
        blocks.append(m.data)
    return FeatureMatrix(
        columns=columns,
        row_ids=list(first.row_ids),
        data=np.concatenate(blocks, axis=1),
    )


# --- cross-channel correlation ----------------------------------------------

@dataclass(frozen=True)
class CorrelationSummary:
    """Pearson correlation matrix over fused columns plus pair summaries."""

    columns: tuple[str, ...]
    matrix: np.ndarray
    pairs: dict[str, float]  # "video~gaze" -> mean |r| over cross entries

    def to_csv(self) -> str:
        lines = ["," + ",".join(self.columns)]
        for name, row in zip(self.columns, self.matrix):
            lines.append(name + "," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"pairs": self.pairs}, sort_keys=True)


def correlation_matrix(data: np.ndarray) -> np.ndarray:
    """Pearson r between columns; 0 where undefined, diagonal forced to 1."""
    centered = data - data.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    denom = np.outer(norms, norms)
    corr = np.zeros((data.shape[1], data.shape[1]))
    np.divide(centered.T @ centered, denom, out=corr, where=denom > 0.0)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def cross_channel_correlation(
    fused: FeatureMatrix, spans: dict[str, tuple[int, int]] | None = None
) -> CorrelationSummary:
    """Mean |r| between the columns of every channel pair.

    ``spans`` maps channel -> half-open column range in the fused matrix;
    by default it is recovered from the channel prefix of each column name.
    """
    if fused.data.shape[0] < 3:
        raise TooFewRows(
            f"correlation summary needs >= 3 rows, got {fused.data.shape[0]}"
        )
    if spans is None:
        spans = {}
        for i, name in enumerate(fused.columns):
            channel = name.split(".", 1)[0]
            lo, hi = spans.get(channel, (i, i))
            spans[channel] = (min(lo, i), i + 1)
    channels = [c for c in CHANNEL_ORDER if c in spans]
    channels += [c for c in spans if c not in CHANNEL_ORDER]
    if len(channels) < 2:
        raise InvalidConfig("correlation summary needs >= 2 channels")
    corr = correlation_matrix(fused.data)
    pairs: dict[str, float] = {}
    for i, a in enumerate(channels):
        for b in channels[i + 1:]:
            (a0, a1), (b0, b1) = spans[a], spans[b]
            block = corr[a0:a1, b0:b1]
            pairs[f"{a}~{b}"] = float(np.abs(block).mean())
    return CorrelationSummary(
        columns=tuple(fused.columns), matrix=corr, pairs=pairs
    )
