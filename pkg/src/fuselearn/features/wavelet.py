"""Orthonormal Haar analysis filter bank and derived energy features.

Analysis filters are (1/sqrt(2), 1/sqrt(2)) for the approximation and
(1/sqrt(2), -1/sqrt(2)) for the detail. An odd-length signal at any level is
extended by reflecting its last sample before pairing, so any level count is
reachable for any non-empty input. On power-of-two lengths no extension
happens and the transform is exactly orthonormal (Parseval holds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptySeries
from .vectors import FeatureVector

_SQRT2 = math.sqrt(2.0)

LOG_ENERGY_EPS = 1e-12


@dataclass
class HaarPyramid:
    """Per-level detail coefficients (finest first) plus final approximation."""

    details: list[np.ndarray]
    approx: np.ndarray

    @property
    def levels(self) -> int:
        return len(self.details)

    def coefficient_energy(self) -> float:
        total = float(np.sum(self.approx**2))
        for d in self.details:
            total += float(np.sum(d**2))
        return total


def default_levels(n: int) -> int:
    """min(5, floor(log2(n))) for n >= 1."""
    if n < 1:
        raise EmptySeries("cannot choose levels for an empty series")
    return min(5, int(math.floor(math.log2(n))))


def _haar_step(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if x.size % 2:
        x = np.append(x, x[-1])
    even = x[0::2]
    odd = x[1::2]
    return (even + odd) / _SQRT2, (even - odd) / _SQRT2


def haar_dwt(series: np.ndarray, levels: int | None = None) -> HaarPyramid:
    """Multi-level Haar decomposition of a non-empty series."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise EmptySeries("cannot transform an empty series")
    if levels is None:
        levels = default_levels(x.size)
    details: list[np.ndarray] = []
    approx = x
    for _ in range(levels):
        approx, detail = _haar_step(approx)
        details.append(detail)
    return HaarPyramid(details, approx)


def wavelet_feature_names(levels: int) -> list[str]:
    names = []
    for i in range(1, levels + 1):
        names.append(f"wl_d{i}_energy")
        names.append(f"wl_d{i}_log_energy")
    names.append("wl_approx_energy")
    names.append("wl_finest_ratio")
    return names


def wavelet_values(series: np.ndarray, levels: int) -> dict[str, float]:
    """Energy features of the Haar pyramid (2 * levels + 2 values).

    Per detail level: energy and log(energy + eps). Plus the approximation
    energy and the finest detail level's share of the total pyramid energy.
    """
    pyramid = haar_dwt(series, levels)
    out: dict[str, float] = {}
    for i, d in enumerate(pyramid.details, start=1):
        e = float(np.sum(d**2))
        out[f"wl_d{i}_energy"] = e
        out[f"wl_d{i}_log_energy"] = math.log(e + LOG_ENERGY_EPS)
    approx_energy = float(np.sum(pyramid.approx**2))
    out["wl_approx_energy"] = approx_energy
    total = pyramid.coefficient_energy()
    finest = out["wl_d1_energy"]
    out["wl_finest_ratio"] = finest / total if total > 0.0 else 0.0
    return out


def wavelet_features(
    series: np.ndarray, levels: int | None = None, provenance: str = ""
) -> FeatureVector:
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise EmptySeries("cannot transform an empty series")
    if levels is None:
        levels = default_levels(x.size)
    values = wavelet_values(x, levels)
    names = wavelet_feature_names(levels)
    return FeatureVector(
        names,
        np.array([values[n] for n in names]),
        np.zeros(len(names), dtype=bool),
        provenance,
    )
