"""Per-window channel feature batteries.

Each channel derives a set of base series from its events. Statistics run on
the raw event-indexed series; wavelet and Fourier features run on the same
series resampled onto the window's uniform grid. Channel-specific extras
(the two subjective gaze features, mouse event counts, per-emotion
summaries) are appended after the general battery. Features that cannot be
computed for a window (empty window, too few events, series too short for a
spectrum) are marked missing and imputed later at matrix assembly.
"""

from __future__ import annotations

import numpy as np

from ..config import CHANNEL_ORDER, FeatureConfig
from ..errors import InvalidConfig
from ..ingest import EMOTION_NAMES, Window, event_time, resample_series
from .spectral import FOURIER_FEATURE_NAMES, fourier_values
from .stats import STAT_FEATURE_NAMES, stat_values
from .vectors import FeatureVector
from .wavelet import wavelet_feature_names, wavelet_values

GAZE_SERIES = ("x", "y", "step_distance", "speed")
MOUSE_SERIES = ("x", "y", "step_distance", "speed", "wheel_cum")
VIDEO_SERIES = ("yaw", "pitch", "roll") + tuple(f"e_{n}" for n in EMOTION_NAMES)

GAZE_EXTRAS = ("subjective.avg_move_dist", "subjective.horizontal_mobility")
MOUSE_EXTRAS = (
    "events.n_moves",
    "events.n_left_clicks",
    "events.n_right_clicks",
    "events.n_wheel",
    "events.mean_inter_click_ms",
)
VIDEO_EXTRAS = (
    tuple(f"emotion.{n}_mean" for n in EMOTION_NAMES)
    + tuple(f"emotion.{n}_max" for n in EMOTION_NAMES)
    + tuple(f"emotion.argmax_hist_{n}" for n in EMOTION_NAMES)
)

_SERIES = {"gaze": GAZE_SERIES, "mouse": MOUSE_SERIES, "video": VIDEO_SERIES}
_EXTRAS = {"gaze": GAZE_EXTRAS, "mouse": MOUSE_EXTRAS, "video": VIDEO_EXTRAS}


def channel_feature_names(channel: str, config: FeatureConfig) -> list[str]:
    """Full ordered feature name list for a channel.

    Depends only on (channel, config) so every window and every run yields
    the same list.
    """
    if channel not in CHANNEL_ORDER:
        raise InvalidConfig(f"unknown channel {channel!r}")
    battery = (
        list(STAT_FEATURE_NAMES)
        + wavelet_feature_names(config.wavelet_levels)
        + list(FOURIER_FEATURE_NAMES)
    )
    names = [
        f"{channel}.{series}.{feat}"
        for series in _SERIES[channel]
        for feat in battery
    ]
    names.extend(f"{channel}.{extra}" for extra in _EXTRAS[channel])
    return names


def gaze_subjective(window_events: tuple) -> FeatureVector:
    """Average gaze-point move distance and horizontal path fraction.

    horizontal_mobility = sum|dx| / sum(step length), in [0, 1], 0 when the
    path length is 0. With fewer than 2 events both values are 0 and flagged
    missing.
    """
    names = ["avg_move_dist", "horizontal_mobility"]
    if len(window_events) < 2:
        return FeatureVector(
            names, np.zeros(2), np.ones(2, dtype=bool), "gaze_subjective"
        )
    x = np.array([e.x for e in window_events])
    y = np.array([e.y for e in window_events])
    dx = np.diff(x)
    dy = np.diff(y)
    steps = np.hypot(dx, dy)
    path = float(steps.sum())
    avg_move = float(steps.mean())
    mobility = float(np.abs(dx).sum()) / path if path > 0.0 else 0.0
    return FeatureVector(
        names, np.array([avg_move, mobility]), np.zeros(2, dtype=bool),
        "gaze_subjective",
    )


def _step_series(times: np.ndarray, x: np.ndarray, y: np.ndarray):
    """Consecutive move distance and speed (px/s), stamped at the later event."""
    steps = np.hypot(np.diff(x), np.diff(y))
    dt_ms = np.diff(times)
    speed = np.zeros_like(steps)
    np.divide(steps * 1000.0, dt_ms, out=speed, where=dt_ms > 0)
    return times[1:], steps, speed


def _gaze_base_series(events) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    times = np.array([e.timestamp for e in events], dtype=np.float64)
    x = np.array([e.x for e in events])
    y = np.array([e.y for e in events])
    step_t, steps, speed = _step_series(times, x, y)
    return {
        "x": (times, x),
        "y": (times, y),
        "step_distance": (step_t, steps),
        "speed": (step_t, speed),
    }


def _mouse_base_series(events) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    times = np.array([e.time for e in events], dtype=np.float64)
    x = np.array([e.x for e in events])
    y = np.array([e.y for e in events])
    wheel = np.array([e.wheel for e in events], dtype=np.float64)
    step_t, steps, speed = _step_series(times, x, y)
    return {
        "x": (times, x),
        "y": (times, y),
        "step_distance": (step_t, steps),
        "speed": (step_t, speed),
        "wheel_cum": (times, np.cumsum(wheel)),
    }


def _video_base_series(samples) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    times = np.array([s.timestamp for s in samples], dtype=np.float64)
    out = {
        "yaw": (times, np.array([s.yaw for s in samples])),
        "pitch": (times, np.array([s.pitch for s in samples])),
        "roll": (times, np.array([s.roll for s in samples])),
    }
    emotions = np.array([s.emotion for s in samples])
    for j, name in enumerate(EMOTION_NAMES):
        out[f"e_{name}"] = (times, emotions[:, j])
    return out


def _mouse_extras(events) -> dict[str, float]:
    messages = [e.message for e in events]
    out = {
        "events.n_moves": float(messages.count("move")),
        "events.n_left_clicks": float(messages.count("left_down")),
        "events.n_right_clicks": float(messages.count("right_down")),
        "events.n_wheel": float(messages.count("wheel")),
    }
    clicks = [e.time for e in events if e.message in ("left_down", "right_down")]
    if len(clicks) >= 2:
        out["events.mean_inter_click_ms"] = float(np.diff(clicks).mean())
    return out


def _video_extras(samples) -> dict[str, float]:
    emotions = np.array([s.emotion for s in samples])
    out: dict[str, float] = {}
    argmax = emotions.argmax(axis=1)
    for j, name in enumerate(EMOTION_NAMES):
        out[f"emotion.{name}_mean"] = float(emotions[:, j].mean())
        out[f"emotion.{name}_max"] = float(emotions[:, j].max())
        out[f"emotion.argmax_hist_{name}"] = float(
            np.count_nonzero(argmax == j)
        ) / len(samples)
    return out


def channel_features(
    window: Window, channel: str, config: FeatureConfig
) -> FeatureVector:
    """Feature vector of one window; empty windows yield all-missing values."""
    names = channel_feature_names(channel, config)
    provenance = f"{channel}/{window.start}"
    if not window.events:
        return FeatureVector.from_dict(names, {}, provenance)

    if channel == "gaze":
        base = _gaze_base_series(window.events)
    elif channel == "mouse":
        base = _mouse_base_series(window.events)
    else:
        base = _video_base_series(window.events)

    rate = config.rate(channel)
    present: dict[str, float] = {}
    for series_name, (times, values) in base.items():
        prefix = f"{channel}.{series_name}."
        if values.size:
            for feat, v in stat_values(values).items():
                present[prefix + feat] = v
            resampled = resample_series(
                times, values, window.start, window.end, rate
            )
            for feat, v in wavelet_values(
                resampled.values, config.wavelet_levels
            ).items():
                present[prefix + feat] = v
            if resampled.values.size >= 2:
                for feat, v in fourier_values(resampled.values, rate).items():
                    present[prefix + feat] = v

    if channel == "gaze":
        subj = gaze_subjective(window.events)
        for name, value, miss in zip(subj.names, subj.values, subj.missing):
            if not miss:
                present[f"gaze.subjective.{name}"] = float(value)
    elif channel == "mouse":
        for name, value in _mouse_extras(window.events).items():
            present[f"mouse.{name}"] = value
    else:
        for name, value in _video_extras(window.events).items():
            present[f"video.{name}"] = value

    return FeatureVector.from_dict(names, present, provenance)
