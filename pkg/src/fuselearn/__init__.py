"""fuselearn: multi-channel learning-unit-state recognition pipeline.

Ingests synchronized gaze, mouse, and video-frame streams, extracts
statistical / wavelet / Fourier features per fixed window, filters and
reduces them per channel (hypothesis test, standardization, PCA), fuses the
channels at feature level, and evaluates CART / Random Forest / GBDT
regressors against automatically constructed learning-unit-state labels
under 10-fold cross-validation.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    config,
    errors,
    features,
    fusion,
    ingest,
    labeling,
    models,
    pipeline,
    synth,
)

__all__ = [
    "config",
    "errors",
    "features",
    "fusion",
    "ingest",
    "labeling",
    "models",
    "pipeline",
    "synth",
    "__version__",
]
