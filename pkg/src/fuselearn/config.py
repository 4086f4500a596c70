"""Pipeline-wide configuration and channel constants."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidConfig

# Canonical channel ids and fusion order: video-derived frames first, then
# eye (gaze) and mouse. The frames CSV referenced by the manifest carries the
# video channel.
CHANNEL_ORDER = ("video", "gaze", "mouse")

# Friendly aliases accepted on the CLI.
CHANNEL_ALIASES = {
    "video": "video",
    "image": "video",
    "frames": "video",
    "eye": "gaze",
    "gaze": "gaze",
    "mouse": "mouse",
}

# Manifest file key per channel id.
CHANNEL_FILE_KEY = {"video": "frames", "gaze": "gaze", "mouse": "mouse"}

DEFAULT_INTERVAL_MS = 60_000
DEFAULT_RATES = {"gaze": 30.0, "mouse": 20.0, "video": 15.0}
DEFAULT_WAVELET_LEVELS = 5


@dataclass
class FeatureConfig:
    """Windowing and per-channel feature extraction settings.

    ``wavelet_levels`` is fixed (not data-dependent) so that feature name
    lists stay identical across windows of different lengths.
    """

    interval_ms: int = DEFAULT_INTERVAL_MS
    rates: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_RATES))
    wavelet_levels: int = DEFAULT_WAVELET_LEVELS

    def __post_init__(self) -> None:
        if self.interval_ms <= 0:
            raise InvalidConfig(f"interval_ms must be positive, got {self.interval_ms}")
        if self.wavelet_levels < 1:
            raise InvalidConfig(
                f"wavelet_levels must be >= 1, got {self.wavelet_levels}"
            )
        for channel in CHANNEL_ORDER:
            rate = self.rates.get(channel)
            if rate is None or rate <= 0:
                raise InvalidConfig(f"missing or non-positive rate for {channel!r}")

    def rate(self, channel: str) -> float:
        return self.rates[channel]


def canonical_channel(token: str) -> str:
    """Map a CLI/user channel token to its canonical id."""
    try:
        return CHANNEL_ALIASES[token.strip().lower()]
    except KeyError:
        raise InvalidConfig(f"unknown channel {token!r}") from None
