"""Channel file parsing, session manifests, unit slicing and windowing.

File formats (CSV, UTF-8, LF or CRLF, optional single header line):

* gaze:   ``timestamp,event_type,x,y``
* mouse:  ``message,time,x,y,wheel``
* frames: ``timestamp,yaw,pitch,roll,e_happiness,...,e_neutral`` (7 emotions)

The manifest is a JSON object with ``learner``, ``channels`` and ``units``
keys; see :func:`load_manifest`.

All timestamps are integer milliseconds on one shared epoch. Windows are
half-open ``[start, end)`` so that tiling a unit is exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    EmotionNotSimplex,
    EvalOutOfRange,
    InvalidConfig,
    InvalidManifest,
    MalformedLine,
    MissingChannelFile,
    OverlappingUnits,
    PoseOutOfRange,
)

GAZE_EVENT_TYPES = ("fixation", "saccade", "unclassified")
MOUSE_MESSAGES = ("move", "left_down", "left_up", "right_down", "right_up", "wheel")
EMOTION_NAMES = (
    "happiness",
    "sadness",
    "surprise",
    "fear",
    "anger",
    "disgust",
    "neutral",
)

# Manifest keys for the three channel files.
CHANNEL_FILE_KEYS = ("gaze", "mouse", "frames")


@dataclass(frozen=True)
class GazeEvent:
    timestamp: int
    event_type: str
    x: float
    y: float


@dataclass(frozen=True)
class MouseEvent:
    message: str
    time: int
    x: float
    y: float
    wheel: int

    @property
    def timestamp(self) -> int:
        return self.time


@dataclass(frozen=True)
class FrameSample:
    timestamp: int
    yaw: float
    pitch: float
    roll: float
    emotion: tuple[float, ...]


@dataclass(frozen=True)
class LearningUnit:
    unit_id: str
    start: int
    end: int
    self_eval: float
    class_eval: float
    mastery: float

    @property
    def duration_ms(self) -> int:
        return self.end - self.start


@dataclass
class Learner:
    name: str
    major: str
    sex: str
    age: int
    mastery: float


@dataclass
class Session:
    learner: Learner
    units: list[LearningUnit]
    channel_files: dict[str, str]


@dataclass
class Window:
    """Events of one channel falling in ``[start, end)``."""

    channel: str
    start: int
    end: int
    events: tuple

    @property
    def duration_ms(self) -> int:
        return self.end - self.start


@dataclass
class UniformSeries:
    """Uniformly resampled values over a window grid."""

    values: np.ndarray
    rate_hz: float
    start: int

    @property
    def is_empty(self) -> bool:
        return self.values.size == 0


@dataclass
class GazeParse:
    """Parsed gaze events plus a counter of unknown event_type tokens."""

    events: list[GazeEvent]
    unknown_event_types: int = 0


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _parse_int(token: str, line_no: int, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise MalformedLine(line_no, f"non-integer {what} {token!r}") from None
    if value < 0:
        raise MalformedLine(line_no, f"negative {what} {token!r}")
    return value


def _parse_float(token: str, line_no: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MalformedLine(line_no, f"non-numeric {what} {token!r}") from None
    if not math.isfinite(value):
        raise MalformedLine(line_no, f"non-finite {what} {token!r}")
    return value


def _csv_lines(text: str) -> Iterable[tuple[int, list[str]]]:
    """Yield (1-based line number, fields) for non-blank lines."""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        yield line_no, [f.strip() for f in line.split(",")]


def parse_gaze(text: str) -> GazeParse:
    """Parse gaze CSV text into events.

    Unknown event_type tokens are mapped to ``unclassified`` and counted
    rather than rejected (tracker vendors vary).
    """
    events: list[GazeEvent] = []
    unknown = 0
    first = True
    for line_no, fields in _csv_lines(text):
        if len(fields) != 4:
            raise MalformedLine(line_no, f"expected 4 fields, got {len(fields)}")
        if first:
            first = False
            if not _is_number(fields[0]):
                continue  # header line
        t = _parse_int(fields[0], line_no, "timestamp")
        etype = fields[1].lower()
        if etype not in GAZE_EVENT_TYPES:
            etype = "unclassified"
            unknown += 1
        x = _parse_float(fields[2], line_no, "x")
        y = _parse_float(fields[3], line_no, "y")
        events.append(GazeEvent(t, etype, x, y))
    return GazeParse(events, unknown)


def parse_mouse(text: str) -> list[MouseEvent]:
    """Parse mouse CSV text into events."""
    events: list[MouseEvent] = []
    first = True
    for line_no, fields in _csv_lines(text):
        if len(fields) != 5:
            raise MalformedLine(line_no, f"expected 5 fields, got {len(fields)}")
        if first:
            first = False
            if not _is_number(fields[1]):
                continue  # header line (non-numeric time field)
        message = fields[0].lower()
        if message not in MOUSE_MESSAGES:
            raise MalformedLine(line_no, f"unknown message {fields[0]!r}")
        t = _parse_int(fields[1], line_no, "time")
        x = _parse_float(fields[2], line_no, "x")
        y = _parse_float(fields[3], line_no, "y")
        try:
            wheel = int(fields[4])
        except ValueError:
            raise MalformedLine(line_no, f"non-integer wheel {fields[4]!r}") from None
        if message != "wheel" and wheel != 0:
            raise MalformedLine(line_no, f"wheel delta on {message!r} event")
        events.append(MouseEvent(message, t, x, y, wheel))
    return events


def parse_frames(text: str) -> list[FrameSample]:
    """Parse per-frame head-pose + emotion CSV text.

    The 7-component emotion vector is renormalized when its sum is within
    1e-3 of 1 (beyond float dust); larger deviations raise
    :class:`EmotionNotSimplex`.
    """
    samples: list[FrameSample] = []
    first = True
    for line_no, fields in _csv_lines(text):
        if len(fields) != 11:
            raise MalformedLine(line_no, f"expected 11 fields, got {len(fields)}")
        if first:
            first = False
            if not _is_number(fields[0]):
                continue
        t = _parse_int(fields[0], line_no, "timestamp")
        angles = []
        for name, token in zip(("yaw", "pitch", "roll"), fields[1:4]):
            v = _parse_float(token, line_no, name)
            if abs(v) > 1.0:
                raise PoseOutOfRange(line_no, v)
            angles.append(v)
        emotion = [_parse_float(tok, line_no, "emotion") for tok in fields[4:11]]
        if any(e < 0.0 for e in emotion):
            raise EmotionNotSimplex(line_no, sum(emotion))
        total = sum(emotion)
        if abs(total - 1.0) > 1e-3:
            raise EmotionNotSimplex(line_no, total)
        if abs(total - 1.0) > 1e-9:
            emotion = [e / total for e in emotion]
        samples.append(FrameSample(t, angles[0], angles[1], angles[2], tuple(emotion)))
    return samples


# --- serialization (round-trip counterparts of the parsers) -----------------

def format_gaze(events: Sequence[GazeEvent]) -> str:
    lines = ["timestamp,event_type,x,y"]
    for e in events:
        lines.append(f"{e.timestamp},{e.event_type},{e.x!r},{e.y!r}")
    return "\n".join(lines) + "\n"


def format_mouse(events: Sequence[MouseEvent]) -> str:
    lines = ["message,time,x,y,wheel"]
    for e in events:
        lines.append(f"{e.message},{e.time},{e.x!r},{e.y!r},{e.wheel}")
    return "\n".join(lines) + "\n"


def format_frames(samples: Sequence[FrameSample]) -> str:
    header = "timestamp,yaw,pitch,roll," + ",".join(f"e_{n}" for n in EMOTION_NAMES)
    lines = [header]
    for s in samples:
        emo = ",".join(repr(e) for e in s.emotion)
        lines.append(f"{s.timestamp},{s.yaw!r},{s.pitch!r},{s.roll!r},{emo}")
    return "\n".join(lines) + "\n"


def load_manifest(text: str) -> Session:
    """Parse and validate a session manifest (JSON)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidManifest(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InvalidManifest("manifest root must be a JSON object")

    try:
        learner_obj = obj["learner"]
        channels_obj = obj["channels"]
        units_obj = obj["units"]
    except KeyError as exc:
        raise InvalidManifest(f"manifest missing key {exc.args[0]!r}") from None

    try:
        learner = Learner(
            name=str(learner_obj["name"]),
            major=str(learner_obj["major"]),
            sex=str(learner_obj["sex"]),
            age=int(learner_obj["age"]),
            mastery=float(learner_obj["mastery"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidManifest(f"bad learner record: {exc}") from None
    if not 0.0 <= learner.mastery <= 100.0:
        raise EvalOutOfRange(f"mastery {learner.mastery} outside [0, 100]")

    channel_files: dict[str, str] = {}
    for key in CHANNEL_FILE_KEYS:
        value = channels_obj.get(key) if isinstance(channels_obj, dict) else None
        if not value or not isinstance(value, str):
            raise MissingChannelFile(f"manifest channels missing {key!r} file")
        channel_files[key] = value

    units: list[LearningUnit] = []
    if not isinstance(units_obj, list) or not units_obj:
        raise InvalidManifest("manifest must list at least one unit")
    for entry in units_obj:
        try:
            unit = LearningUnit(
                unit_id=str(entry["unit_id"]),
                start=int(entry["start_ms"]),
                end=int(entry["end_ms"]),
                self_eval=float(entry["self_eval"]),
                class_eval=float(entry["class_eval"]),
                mastery=learner.mastery,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidManifest(f"bad unit record: {exc}") from None
        if unit.start >= unit.end:
            raise InvalidManifest(
                f"unit {unit.unit_id!r} has start {unit.start} >= end {unit.end}"
            )
        if not 10.0 <= unit.self_eval <= 100.0:
            raise EvalOutOfRange(
                f"unit {unit.unit_id!r} self_eval {unit.self_eval} outside [10, 100]"
            )
        if not 0.0 <= unit.class_eval <= 100.0:
            raise EvalOutOfRange(
                f"unit {unit.unit_id!r} class_eval {unit.class_eval} outside [0, 100]"
            )
        units.append(unit)

    units.sort(key=lambda u: u.start)
    for prev, cur in zip(units, units[1:]):
        if cur.start < prev.end:
            raise OverlappingUnits(
                f"units {prev.unit_id!r} and {cur.unit_id!r} overlap"
            )
    return Session(learner=learner, units=units, channel_files=channel_files)


def format_manifest(session: Session) -> str:
    obj = {
        "learner": {
            "name": session.learner.name,
            "major": session.learner.major,
            "sex": session.learner.sex,
            "age": session.learner.age,
            "mastery": session.learner.mastery,
        },
        "channels": dict(session.channel_files),
        "units": [
            {
                "unit_id": u.unit_id,
                "start_ms": u.start,
                "end_ms": u.end,
                "self_eval": u.self_eval,
                "class_eval": u.class_eval,
            }
            for u in session.units
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


def event_time(event) -> int:
    """Timestamp of any channel event (mouse events store it as ``time``)."""
    return event.timestamp


def slice_unit(stream: Iterable, unit: LearningUnit) -> list:
    """Events with ``unit.start <= t < unit.end``, stably sorted by time."""
    kept = [e for e in stream if unit.start <= event_time(e) < unit.end]
    kept.sort(key=event_time)  # stable
    return kept


def cut_windows(
    unit_stream: Sequence,
    unit: LearningUnit,
    interval_ms: int,
    channel: str = "",
) -> list[Window]:
    """Tile ``[unit.start, unit.end)`` into fixed windows, last one may be short."""
    if interval_ms <= 0:
        raise InvalidConfig(f"interval_ms must be positive, got {interval_ms}")
    span = unit.end - unit.start
    count = -(-span // interval_ms)  # ceil
    buckets: list[list] = [[] for _ in range(count)]
    for e in unit_stream:
        k = (event_time(e) - unit.start) // interval_ms
        buckets[k].append(e)
    windows = []
    for k in range(count):
        w_start = unit.start + k * interval_ms
        w_end = min(w_start + interval_ms, unit.end)
        windows.append(Window(channel, w_start, w_end, tuple(buckets[k])))
    return windows


def resample_series(
    times: np.ndarray,
    values: np.ndarray,
    start: int,
    end: int,
    rate_hz: float,
) -> UniformSeries:
    """Linear-interpolation resampling of an irregular series onto a uniform grid.

    Grid spacing is ``1000 / rate_hz`` ms starting at ``start``; length is
    ``floor(duration_s * rate_hz) + 1``. Values before the first / after the
    last sample hold the nearest value. Empty input yields an empty series.
    """
    if rate_hz <= 0:
        raise InvalidConfig(f"rate_hz must be positive, got {rate_hz}")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return UniformSeries(np.empty(0), rate_hz, start)
    times = np.asarray(times, dtype=np.float64)
    length = int(math.floor((end - start) * rate_hz / 1000.0)) + 1
    grid = start + np.arange(length) * (1000.0 / rate_hz)
    out = np.interp(grid, times, values)
    return UniformSeries(out, rate_hz, start)


def resample_uniform(
    window: Window, rate_hz: float, value_selector: Callable[[object], float]
) -> UniformSeries:
    """Resample one value per event of a window onto a uniform grid."""
    times = np.array([event_time(e) for e in window.events], dtype=np.float64)
    values = np.array([value_selector(e) for e in window.events], dtype=np.float64)
    return resample_series(times, values, window.start, window.end, rate_hz)
