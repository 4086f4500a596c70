"""Window-level feature extraction: stats, wavelet, Fourier, channel batteries."""

from .battery import (
    GAZE_EXTRAS,
    GAZE_SERIES,
    MOUSE_EXTRAS,
    MOUSE_SERIES,
    VIDEO_EXTRAS,
    VIDEO_SERIES,
    channel_feature_names,
    channel_features,
    gaze_subjective,
)
from .spectral import (
    FOURIER_FEATURE_NAMES,
    band_edges,
    fourier_features,
    fourier_values,
    power_spectrum,
)
from .stats import STAT_FEATURE_NAMES, stat_features, stat_values
from .vectors import FeatureMatrix, FeatureVector, assemble_matrix, unit_features
from .wavelet import (
    HaarPyramid,
    default_levels,
    haar_dwt,
    wavelet_feature_names,
    wavelet_features,
    wavelet_values,
)

__all__ = [
    "GAZE_EXTRAS",
    "GAZE_SERIES",
    "MOUSE_EXTRAS",
    "MOUSE_SERIES",
    "VIDEO_EXTRAS",
    "VIDEO_SERIES",
    "channel_feature_names",
    "channel_features",
    "gaze_subjective",
    "FOURIER_FEATURE_NAMES",
    "band_edges",
    "fourier_features",
    "fourier_values",
    "power_spectrum",
    "STAT_FEATURE_NAMES",
    "stat_features",
    "stat_values",
    "FeatureMatrix",
    "FeatureVector",
    "assemble_matrix",
    "unit_features",
    "HaarPyramid",
    "default_levels",
    "haar_dwt",
    "wavelet_feature_names",
    "wavelet_features",
    "wavelet_values",
]
