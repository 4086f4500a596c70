"""Seeded synthetic sessions with a known latent state per learning unit.

Each unit draws a latent L ~ Uniform[0.2, 0.95]. Every channel sees its own
noisy view L_c = clip(L + eps_c, 0, 1) and its generative parameters scale
with the coupling v_c = (1 - L_c) * beta_c, so beta_c = 0 makes the channel
statistically independent of L. Distributions are deliberately plain
(Gaussian walks, Poisson counts, Dirichlet emotion draws): the point is a
controllable oracle with ground truth, not behavioral realism.

View noise is smallest for video and largest for gaze, so single-channel
recoverability orders video > mouse > gaze and fusing all three beats any
subset — the qualitative shape the evaluation is expected to reproduce.

All randomness flows from one np.random.default_rng(seed) consumed in a
fixed documented order (latents; mastery; then per unit: view noises, eval
noises, gaze block, mouse block, video block), so identical configs yield
byte-identical files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidConfig
from .ingest import (
    FrameSample,
    GazeEvent,
    Learner,
    LearningUnit,
    MouseEvent,
    Session,
    format_frames,
    format_gaze,
    format_manifest,
    format_mouse,
)

SCREEN_W = 1920.0
SCREEN_H = 1080.0
FRAME_INTERVAL_NUM = 1000  # frame i at start + i*1000//15 (15 FPS)
FRAME_INTERVAL_DEN = 15

GROUND_TRUTH_HEADER = "unit_id,latent"


@dataclass(frozen=True)
class SynthConfig:
    n_units: int = 200
    duration_range_ms: tuple[int, int] = (30_000, 75_000)
    gap_ms: int = 2_000
    seed: int = 0
    beta_video: float = 1.0
    beta_gaze: float = 1.0
    beta_mouse: float = 1.0
    view_noise_video: float = 0.15
    view_noise_gaze: float = 0.18
    view_noise_mouse: float = 0.17
    eval_noise: float = 0.04  # self/class evaluation noise, in latent units

    def __post_init__(self):
        if self.n_units < 1:
            raise InvalidConfig(f"n_units must be >= 1, got {self.n_units}")
        lo, hi = self.duration_range_ms
        if not 0 < lo <= hi:
            raise InvalidConfig(f"bad duration range {self.duration_range_ms}")
        if self.gap_ms < 0:
            raise InvalidConfig("gap_ms must be >= 0")
        for name in ("beta_video", "beta_gaze", "beta_mouse"):
            b = getattr(self, name)
            if not 0.0 <= b <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1], got {b!r}")
        for name in (
            "view_noise_video", "view_noise_gaze", "view_noise_mouse",
            "eval_noise",
        ):
            if getattr(self, name) < 0.0:
                raise InvalidConfig(f"{name} must be >= 0")


@dataclass
class SynthResult:
    session: Session
    gaze: list[GazeEvent]
    mouse: list[MouseEvent]
    frames: list[FrameSample]
    latents: dict[str, float]  # unit_id -> ground-truth L


def _clip01(x):
    return float(np.clip(x, 0.0, 1.0))


def _gaze_block(
    rng: np.random.Generator, start: int, end: int, v: float
) -> list[GazeEvent]:
    """Scanpath whose step scale and saccade rate both grow with v."""
    dur_s = (end - start) / 1000.0
    n = max(2, int(rng.poisson((2.5 + 3.0 * v) * dur_s)))
    times = np.sort(rng.integers(start, end, size=n)).tolist()
    p_saccade = 0.25 + 0.5 * v
    is_saccade = (rng.random(n) < p_saccade).tolist()
    step = 30.0 + 250.0 * v
    dx = rng.normal(0.0, step, size=n)
    dy = rng.normal(0.0, step * 0.7, size=n)
    x = np.round(np.clip(SCREEN_W / 2 + np.cumsum(dx), 0.0, SCREEN_W), 2).tolist()
    y = np.round(np.clip(SCREEN_H / 2 + np.cumsum(dy), 0.0, SCREEN_H), 2).tolist()
    return [
        GazeEvent(
            timestamp=int(t),
            event_type="saccade" if s else "fixation",
            x=px,
            y=py,
        )
        for t, s, px, py in zip(times, is_saccade, x, y)
    ]


def _mouse_block(
    rng: np.random.Generator, start: int, end: int, v: float
) -> list[MouseEvent]:
    """Moves thinned by an idle fraction, click pairs, and wheel bursts —
    idleness and wheel burstiness both grow with v."""
    dur_s = (end - start) / 1000.0
    idle = 0.15 + 0.55 * v
    n_moves = max(2, int(rng.poisson(3.5 * dur_s * (1.0 - idle))))
    move_t = np.sort(rng.integers(start, end, size=n_moves))
    step = 25.0 + 60.0 * v
    x = np.round(np.clip(
        SCREEN_W / 2 + np.cumsum(rng.normal(0, step, n_moves)), 0, SCREEN_W), 2)
    y = np.round(np.clip(
        SCREEN_H / 2 + np.cumsum(rng.normal(0, step * 0.8, n_moves)), 0, SCREEN_H), 2)
    events = [
        MouseEvent("move", int(t), px, py, 0)
        for t, px, py in zip(move_t.tolist(), x.tolist(), y.tolist())
    ]

    def _pos_at(t: int) -> tuple[float, float]:
        i = int(np.searchsorted(move_t, t, side="right")) - 1
        if i < 0:
            return SCREEN_W / 2, SCREEN_H / 2
        return float(x[i]), float(y[i])

    for kind, rate in (("left", 0.04 + 0.08 * v), ("right", 0.01 + 0.02 * v)):
        n_pairs = int(rng.poisson(rate * dur_s))
        for _ in range(n_pairs):
            t_down = int(rng.integers(start, end))
            t_up = min(end - 1, t_down + int(rng.integers(80, 200)))
            px, py = _pos_at(t_down)
            events.append(MouseEvent(f"{kind}_down", t_down, px, py, 0))
            events.append(MouseEvent(f"{kind}_up", t_up, px, py, 0))

    n_bursts = int(rng.poisson((0.5 + 6.0 * v) * dur_s / 60.0))
    for _ in range(n_bursts):
        t0 = int(rng.integers(start, end))
        k = 1 + int(rng.poisson(3.0))
        sign = -1 if rng.random() < 0.5 else 1
        for j in range(k):
            t = min(end - 1, t0 + 50 * j)
            px, py = _pos_at(t)
            delta = sign * 120 * (1 + int(rng.poisson(1.0)))
            events.append(MouseEvent("wheel", t, px, py, delta))

    events.sort(key=lambda e: e.time)
    return events


def _video_block(
    rng: np.random.Generator, start: int, end: int, v: float
) -> list[FrameSample]:
    """15 FPS head-pose wander (AR(1), amplitude grows with v) and Dirichlet
    emotion draws biased away from happiness toward sad/negative as v grows."""
    n = ((end - start) * FRAME_INTERVAL_DEN) // FRAME_INTERVAL_NUM
    times = (
        start + (np.arange(n) * FRAME_INTERVAL_NUM) // FRAME_INTERVAL_DEN
    ).tolist()
    amp = 0.03 + 0.45 * v
    state = rng.normal(0.0, amp, size=3)
    innovations = rng.normal(0.0, 0.30 * amp, size=(n, 3))
    # AR(1): pose_i = 0.95*pose_{i-1} + innovation_i, seeded with `state`.
    pose, _ = lfilter(
        [1.0], [1.0, -0.95], innovations, axis=0, zi=(0.95 * state)[None, :]
    )
    pose = np.round(np.clip(pose, -0.95, 0.95), 6).tolist()
    # (happiness, sadness, surprise, fear, anger, disgust, neutral)
    alpha = np.array([
        3.0 - 2.6 * v,
        0.4 + 2.0 * v,
        0.4,
        0.3 + 1.0 * v,
        0.3 + 1.0 * v,
        0.3 + 0.6 * v,
        4.0 + 1.0 * v,
    ])
    emotion = np.round(rng.dirichlet(alpha, size=n), 6).tolist()
    return [
        FrameSample(
            timestamp=int(t), yaw=p[0], pitch=p[1], roll=p[2], emotion=tuple(e)
        )
        for t, p, e in zip(times, pose, emotion)
    ]


def generate_session(config: SynthConfig) -> SynthResult:
    rng = np.random.default_rng(config.seed)
    latents = rng.uniform(0.2, 0.95, size=config.n_units)
    mastery = float(
        np.clip(100.0 * (latents.mean() + rng.normal(0.0, config.eval_noise)),
                0.0, 100.0)
    )
    lo, hi = config.duration_range_ms

    units: list[LearningUnit] = []
    gaze: list[GazeEvent] = []
    mouse: list[MouseEvent] = []
    frames: list[FrameSample] = []
    truth: dict[str, float] = {}

    cursor = 0
    for i, latent in enumerate(latents):
        unit_id = f"u{i + 1:03d}"
        duration = int(rng.integers(lo, hi + 1))
        start, end = cursor, cursor + duration
        cursor = end + config.gap_ms

        view_v = _clip01(latent + rng.normal(0.0, config.view_noise_video))
        view_g = _clip01(latent + rng.normal(0.0, config.view_noise_gaze))
        view_m = _clip01(latent + rng.normal(0.0, config.view_noise_mouse))
        self_eval = float(
            np.clip(10.0 + 90.0 * (latent + rng.normal(0.0, config.eval_noise)),
                    10.0, 100.0)
        )
        class_eval = float(
            np.clip(100.0 * (latent + rng.normal(0.0, config.eval_noise)),
                    0.0, 100.0)
        )

        gaze.extend(
            _gaze_block(rng, start, end, (1.0 - view_g) * config.beta_gaze)
        )
        mouse.extend(
            _mouse_block(rng, start, end, (1.0 - view_m) * config.beta_mouse)
        )
        frames.extend(
            _video_block(rng, start, end, (1.0 - view_v) * config.beta_video)
        )
        units.append(
            LearningUnit(
                unit_id=unit_id,
                start=start,
                end=end,
                self_eval=self_eval,
                class_eval=class_eval,
                mastery=mastery,
            )
        )
        truth[unit_id] = float(latent)

    learner = Learner(
        name=f"synth-{config.seed}", major="synthetic", sex="n/a", age=21,
        mastery=mastery,
    )
    session = Session(
        learner=learner,
        units=units,
        channel_files={
            "gaze": "gaze.csv", "mouse": "mouse.csv", "frames": "frames.csv"
        },
    )
    return SynthResult(
        session=session, gaze=gaze, mouse=mouse, frames=frames, latents=truth
    )


def format_ground_truth(latents: dict[str, float]) -> str:
    lines = [GROUND_TRUTH_HEADER]
    lines.extend(f"{uid},{repr(v)}" for uid, v in latents.items())
    return "\n".join(lines) + "\n"


def parse_ground_truth(text: str) -> dict[str, float]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != GROUND_TRUTH_HEADER:
        raise InvalidConfig("ground truth file missing its header")
    out = {}
    for line in lines[1:]:
        uid, value = line.split(",", 1)
        out[uid] = float(value)
    return out


def write_dataset(result: SynthResult, out_dir: str) -> dict[str, str]:
    """Write manifest + channel CSVs + ground_truth.csv; returns path map."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "manifest": os.path.join(out_dir, "manifest.json"),
        "gaze": os.path.join(out_dir, "gaze.csv"),
        "mouse": os.path.join(out_dir, "mouse.csv"),
        "frames": os.path.join(out_dir, "frames.csv"),
        "ground_truth": os.path.join(out_dir, "ground_truth.csv"),
    }
    contents = {
        "manifest": format_manifest(result.session),
        "gaze": format_gaze(result.gaze),
        "mouse": format_mouse(result.mouse),
        "frames": format_frames(result.frames),
        "ground_truth": format_ground_truth(result.latents),
    }
    for key, path in paths.items():
        with open(path, "w") as fh:
            fh.write(contents[key])
    return paths
