"""End-to-end glue: dataset loading, per-unit featurization, label vectors.

This is the in-memory spine the CLI subcommands (and tests) share: slice each
unit's events per channel, tile windows, run the channel battery, aggregate
window vectors to unit vectors, and assemble one FeatureMatrix per channel
with rows aligned to the manifest's unit order.
"""

from __future__ import annotations

import os

import numpy as np

from .config import CHANNEL_FILE_KEY, CHANNEL_ORDER, FeatureConfig
from .errors import MissingChannelFile
from .features.battery import channel_features
from .features.vectors import FeatureMatrix, assemble_matrix, unit_features
from .ingest import (
    FrameSample,
    GazeEvent,
    MouseEvent,
    Session,
    cut_windows,
    event_time,
    load_manifest,
    parse_frames,
    parse_gaze,
    parse_mouse,
)
from .labeling import LabelWeights, lus_label


def load_dataset(manifest_path: str) -> tuple[Session, dict[str, list]]:
    """Parse the manifest plus the three channel files it references.

    Channel file paths are resolved relative to the manifest's directory.
    Returns the session and a {video,gaze,mouse} -> event-list map.
    """
    if not os.path.exists(manifest_path):
        raise MissingChannelFile(f"manifest not found: {manifest_path}")
    with open(manifest_path) as fh:
        session = load_manifest(fh.read())
    base = os.path.dirname(os.path.abspath(manifest_path))
    streams: dict[str, list] = {}
    parsers = {"gaze": parse_gaze, "mouse": parse_mouse, "frames": parse_frames}
    for channel in CHANNEL_ORDER:
        file_key = CHANNEL_FILE_KEY[channel]
        rel = session.channel_files[file_key]
        path = rel if os.path.isabs(rel) else os.path.join(base, rel)
        if not os.path.exists(path):
            raise MissingChannelFile(f"{file_key} file not found: {path}")
        with open(path) as fh:
            parsed = parsers[file_key](fh.read())
        streams[channel] = parsed.events if file_key == "gaze" else parsed
    return session, streams


def streams_from_events(
    gaze: list[GazeEvent], mouse: list[MouseEvent], frames: list[FrameSample]
) -> dict[str, list]:
    """Arrange raw event lists under canonical channel ids."""
    return {"video": list(frames), "gaze": list(gaze), "mouse": list(mouse)}


def featurize_session(
    session: Session,
    streams: dict[str, list],
    config: FeatureConfig | None = None,
    channels: tuple[str, ...] | None = None,
) -> dict[str, FeatureMatrix]:
    """One unit-level FeatureMatrix per channel, rows in manifest unit order."""
    if config is None:
        config = FeatureConfig()
    if channels is None:
        channels = tuple(c for c in CHANNEL_ORDER if c in streams)
    matrices: dict[str, FeatureMatrix] = {}
    for channel in channels:
        # Sort the stream once and slice units by binary search; equivalent
        # to ingest.slice_unit per unit but linear in the stream length.
        stream = sorted(streams[channel], key=event_time)
        times = np.fromiter(
            (event_time(e) for e in stream), dtype=np.int64, count=len(stream)
        )
        rows = []
        for unit in session.units:
            lo = int(np.searchsorted(times, unit.start, side="left"))
            hi = int(np.searchsorted(times, unit.end, side="left"))
            windows = cut_windows(stream[lo:hi], unit, config.interval_ms, channel)
            vectors = [channel_features(w, channel, config) for w in windows]
            rows.append(
                (unit.unit_id, unit_features(vectors, f"{channel}/{unit.unit_id}"))
            )
        matrices[channel] = assemble_matrix(rows)
    return matrices


def label_vector(
    session: Session, weights: LabelWeights | None = None
) -> tuple[list[str], np.ndarray]:
    """LUS labels aligned with the manifest's unit order."""
    ids = [u.unit_id for u in session.units]
    values = np.array(
        [lus_label(u, weights).value for u in session.units], dtype=np.float64
    )
    return ids, values
