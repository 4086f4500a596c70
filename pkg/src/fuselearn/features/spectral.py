"""One-sided power spectrum features.

The spectrum is P_k = |X_k|^2 / n for k = 0..floor(n/2), with X the
unnormalized DFT of the series. Besides total/DC/AC power and the dominant
non-DC bin, the battery reports the AC spectral centroid, base-2 spectral
entropy of the non-DC bins, and four log-spaced band energies with edges
(0, r/16, r/8, r/4, r/2] for sample rate r. Entropy and centroid fall back
to 0 when the AC power is 0 (a constant series).
"""

from __future__ import annotations

import numpy as np

from ..errors import SeriesTooShort
from .vectors import FeatureVector

N_BANDS = 4

FOURIER_FEATURE_NAMES = (
    "total_power",
    "dc_power",
    "ac_power",
    "dominant_freq_hz",
    "dominant_power",
    "spectral_centroid_hz",
    "spectral_entropy",
    "band1_energy",
    "band2_energy",
    "band3_energy",
    "band4_energy",
)


def power_spectrum(series: np.ndarray) -> np.ndarray:
    """One-sided power values P_k = |X_k|^2 / n, k = 0..floor(n/2)."""
    x = np.asarray(series, dtype=np.float64)
    if x.size < 2:
        raise SeriesTooShort("power spectrum needs at least 2 samples")
    spectrum = np.fft.rfft(x)
    return np.abs(spectrum) ** 2 / x.size


def band_edges(rate_hz: float) -> np.ndarray:
    """Octave edges (0, r/16, r/8, r/4, r/2] splitting the AC range."""
    nyquist = rate_hz / 2.0
    return np.array([0.0, nyquist / 8.0, nyquist / 4.0, nyquist / 2.0, nyquist])


def fourier_values(series: np.ndarray, rate_hz: float) -> dict[str, float]:
    x = np.asarray(series, dtype=np.float64)
    power = power_spectrum(x)
    n = x.size
    freqs = np.fft.rfftfreq(n, d=1.0 / rate_hz)

    total = float(power.sum())
    dc = float(power[0])
    ac = power[1:]
    ac_total = float(ac.sum())

    k_star = 1 + int(np.argmax(ac))
    dominant_freq = float(freqs[k_star])
    dominant_power = float(power[k_star])

    if ac_total > 0.0:
        centroid = float(np.sum(freqs[1:] * ac)) / ac_total
        p = ac / ac_total
        nz = p[p > 0.0]
        entropy = float(-np.sum(nz * np.log2(nz)))
    else:
        centroid = 0.0
        entropy = 0.0

    out = {
        "total_power": total,
        "dc_power": dc,
        "ac_power": total - dc,
        "dominant_freq_hz": dominant_freq,
        "dominant_power": dominant_power,
        "spectral_centroid_hz": centroid,
        "spectral_entropy": entropy,
    }
    edges = band_edges(rate_hz)
    for b in range(N_BANDS):
        lo, hi = edges[b], edges[b + 1]
        mask = (freqs > lo) & (freqs <= hi)
        out[f"band{b + 1}_energy"] = float(power[mask].sum())
    return out


def fourier_features(
    series: np.ndarray, rate_hz: float, provenance: str = ""
) -> FeatureVector:
    values = fourier_values(series, rate_hz)
    return FeatureVector(
        list(FOURIER_FEATURE_NAMES),
        np.array([values[n] for n in FOURIER_FEATURE_NAMES]),
        np.zeros(len(FOURIER_FEATURE_NAMES), dtype=bool),
        provenance,
    )
