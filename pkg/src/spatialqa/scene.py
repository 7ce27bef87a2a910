"""Scene composition: pick events, paths and onsets, then render and annotate."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .events import EventPool
from .files import read_wav, resample
from .render import RenderConfig, StereoBuffer, render_moving_source
from .room import MicArray, RoomSpec, stereo_pair
from .trajectory import (
    DEFAULT_TRAJECTORY_CONFIG,
    OutsideRoomError,
    Trajectory,
    TrajectoryConfig,
    make_trajectory,
    polar_to_cartesian,
    sample_positions,
    track_arrays,
)

ONSET_ATTEMPTS = 1000
TRAJECTORY_ATTEMPTS = 100
FADE_OUT_S = 0.01


class CompositionError(RuntimeError):
    pass


class SceneRenderError(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneConfig:
    duration_s: float = 10.0
    max_events: int = 3
    overlap_budget: float = 0.3
    p_static: float = 0.25
    min_span_s: float = 3.0
    max_span_s: float = 8.0
    frame_rate_hz: float = 10.0
    trajectory: TrajectoryConfig = DEFAULT_TRAJECTORY_CONFIG
    room: RoomSpec = field(default_factory=RoomSpec)
    mics: MicArray = field(default_factory=stereo_pair)

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if not 1 <= self.max_events <= 3:
            raise ValueError("max_events must be 1, 2 or 3")
        if not 0.0 <= self.overlap_budget <= 1.0:
            raise ValueError("overlap_budget must lie in [0, 1]")
        if not 0.0 <= self.p_static <= 1.0:
            raise ValueError("p_static must lie in [0, 1]")
        if not 0 < self.min_span_s <= self.max_span_s <= self.duration_s:
            raise ValueError("need 0 < min_span_s <= max_span_s <= duration_s")
        if self.frame_rate_hz <= 0:
            raise ValueError("frame_rate_hz must be > 0")


@dataclass(frozen=True)
class Placement:
    event_id: str
    onset_s: float
    clip_span_s: float
    trajectory: Trajectory

    @property
    def offset_s(self) -> float:
        return self.onset_s + self.clip_span_s


@dataclass(frozen=True)
class SceneSpec:
    scene_id: str
    duration_s: float
    placements: tuple[Placement, ...]
    overlap_budget: float

    def __post_init__(self):
        if not 1 <= len(self.placements) <= 3:
            raise ValueError("a scene holds one to three placements")
        for p in self.placements:
            if p.onset_s < 0 or p.offset_s > self.duration_s + 1e-9:
                raise ValueError(f"placement {p.event_id!r} does not fit in the scene")
        for a, b in combinations(self.placements, 2):
            if overlap_ratio((a.onset_s, a.offset_s), (b.onset_s, b.offset_s)) > self.overlap_budget + 1e-12:
                raise ValueError(f"placements {a.event_id!r} and {b.event_id!r} exceed the overlap budget")


def overlap_seconds(a: tuple[float, float], b: tuple[float, float]) -> float:
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def overlap_ratio(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Shared active time divided by the shorter interval's length."""
    shorter = min(a[1] - a[0], b[1] - b[0])
    return overlap_seconds(a, b) / shorter if shorter > 0 else 0.0


def place_onsets(spans, duration_s: float, budget: float, rng, attempts: int = ONSET_ATTEMPTS) -> list[float]:
    """Rejection-sample onsets so every pair's overlap ratio stays within ``budget``."""
    spans = list(spans)
    for _ in range(attempts):
        onsets = [float(rng.uniform(0.0, duration_s - s)) for s in spans]
        iv = [(o, o + s) for o, s in zip(onsets, spans)]
        if all(overlap_ratio(a, b) <= budget for a, b in combinations(iv, 2)):
            return onsets
    raise CompositionError(
        f"no onsets within overlap budget {budget} for spans {[round(s, 2) for s in spans]} "
        f"after {attempts} attempts"
    )


def path_inside_room(traj: Trajectory, cfg: SceneConfig, checks: int = 200) -> bool:
    listener = cfg.mics.center
    fracs = np.linspace(0.0, 1.0, checks)
    positions = [traj.position_at(f) for f in fracs] + sample_positions(traj, cfg.frame_rate_hz)
    try:
        for p in positions:
            polar_to_cartesian(p, listener, cfg.room.dimensions_m)
    except OutsideRoomError:
        return False
    return True


def fitted_trajectory(kind: str, rng, duration_s: float, cfg: SceneConfig) -> Trajectory:
    """Draw a trajectory of ``kind`` that stays inside the room, redrawing if needed."""
    for _ in range(TRAJECTORY_ATTEMPTS):
        traj = make_trajectory(kind, rng, duration_s, cfg.trajectory)
        if path_inside_room(traj, cfg):
            return traj
    raise OutsideRoomError(f"no {kind} trajectory fits the room after {TRAJECTORY_ATTEMPTS} attempts")


def compose_scene(pool: EventPool, rng_seed, cfg: SceneConfig = SceneConfig(), scene_id: str = "scene") -> SceneSpec:
    """Choose events, motion and onsets for one scene; deterministic per seed.

    Events in one scene carry distinct labels so questions can name them
    unambiguously.
    """
    if len(pool) == 0:
        raise CompositionError("event pool is empty")
    rng = np.random.default_rng(rng_seed)
    labels = sorted({ev.label for ev in pool})
    n_events = int(rng.integers(1, min(cfg.max_events, len(labels)) + 1))
    chosen_labels = rng.choice(len(labels), size=n_events, replace=False)
    events = []
    for li in chosen_labels:
        candidates = [ev for ev in pool if ev.label == labels[li]]
        events.append(candidates[int(rng.integers(len(candidates)))])

    spans = [min(ev.duration_s, float(rng.uniform(cfg.min_span_s, cfg.max_span_s)), cfg.duration_s) for ev in events]
    dynamic = cfg.trajectory.dynamic_kinds()
    kinds = ["static" if rng.random() < cfg.p_static else dynamic[int(rng.integers(len(dynamic)))] for _ in events]
    trajs = [fitted_trajectory(k, rng, s, cfg) for k, s in zip(kinds, spans)]
    onsets = place_onsets(spans, cfg.duration_s, cfg.overlap_budget, rng)
    placements = tuple(Placement(ev.id, o, s, t) for ev, o, s, t in zip(events, onsets, spans, trajs))
    return SceneSpec(scene_id, cfg.duration_s, placements, cfg.overlap_budget)


@dataclass
class EventTrack:
    event_id: str
    label: str
    onset_s: float
    offset_s: float
    trajectory_kind: str
    azimuth_deg: list[float]
    distance_m: list[float]
    trajectory: dict | None = None


@dataclass
class SceneMetadata:
    scene_id: str
    duration_s: float
    sample_rate_hz: int
    frame_rate_hz: float
    events: list[EventTrack]
    overlap_flag: bool
    pairwise_overlap: list[dict]

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.events]

    def event(self, label: str) -> EventTrack:
        for e in self.events:
            if e.label == label:
                return e
        raise KeyError(f"label {label!r} not in scene {self.scene_id}")

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
            "frame_rate_hz": self.frame_rate_hz,
            "overlap_flag": self.overlap_flag,
            "pairwise_overlap": self.pairwise_overlap,
            "events": [vars(e).copy() for e in self.events],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneMetadata":
        events = [EventTrack(**e) for e in d["events"]]
        return cls(
            d["scene_id"], d["duration_s"], d["sample_rate_hz"], d["frame_rate_hz"],
            events, d["overlap_flag"], d.get("pairwise_overlap", []),
        )


def pairwise_overlaps(events: list[EventTrack]) -> list[dict]:
    out = []
    for a, b in combinations(events, 2):
        ia, ib = (a.onset_s, a.offset_s), (b.onset_s, b.offset_s)
        out.append({
            "a": a.label, "b": b.label,
            "overlap_s": overlap_seconds(ia, ib),
            "ratio": overlap_ratio(ia, ib),
        })
    return out


def build_metadata(spec: SceneSpec, pool: EventPool, sample_rate_hz: int, frame_rate_hz: float) -> SceneMetadata:
    tracks = []
    for p in spec.placements:
        az, dist = track_arrays(sample_positions(p.trajectory, frame_rate_hz))
        tracks.append(EventTrack(
            p.event_id, pool.get(p.event_id).label, p.onset_s, p.offset_s,
            p.trajectory.kind, az.tolist(), dist.tolist(), p.trajectory.to_dict(),
        ))
    pairs = pairwise_overlaps(tracks)
    return SceneMetadata(
        spec.scene_id, spec.duration_s, sample_rate_hz, frame_rate_hz, tracks,
        any(pr["overlap_s"] > 0 for pr in pairs), pairs,
    )


def load_clip(path, span_s: float, rate: int) -> np.ndarray:
    x, src_rate = read_wav(path)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValueError(f"{path}: expected mono audio, got {x.shape[1]} channels")
        x = x[:, 0]
    x = resample(x, src_rate, rate)
    return x[:int(round(span_s * rate))]


def realize_scene(
    spec: SceneSpec,
    pool: EventPool,
    room: RoomSpec,
    mics: MicArray,
    render_cfg: RenderConfig = RenderConfig(),
    frame_rate_hz: float = 10.0,
    solo_sink: dict | None = None,
    skip: frozenset = frozenset(),
) -> tuple[StereoBuffer, SceneMetadata]:
    """Render every placement, mix at its onset and annotate the scene.

    ``solo_sink`` (if given) receives each event's own contribution to the
    mix, keyed by label and scaled like the final scene. Event ids in
    ``skip`` are left out of the mix but still annotated.
    """
    fs = room.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    fade = np.linspace(1.0, 0.0, max(1, int(round(FADE_OUT_S * fs))))
    mix = np.zeros((n, 2))
    solos = {}
    for p in spec.placements:
        if p.event_id in skip:
            continue
        ev = pool.get(p.event_id)
        try:
            x = load_clip(ev.audio_path, p.clip_span_s, fs)
            peak = np.abs(x).max() if len(x) else 0.0
            if render_cfg.normalize and peak > 0:
                x = x * (render_cfg.event_peak / peak)
            rendered = render_moving_source(x, p.trajectory, room, mics, render_cfg.hop_s, render_cfg.xfade_s, render_cfg.method)
        except Exception as exc:
            raise SceneRenderError(f"scene {spec.scene_id}: event {p.event_id!r}: {exc}") from exc
        start = int(round(p.onset_s * fs))
        y = rendered.as_array()
        if start + len(y) > n:
            y = y[:n - start].copy()
            k = min(len(fade), len(y))
            y[len(y) - k:] *= fade[len(fade) - k:, None]
        mix[start:start + len(y)] += y
        if solo_sink is not None:
            solo = np.zeros((n, 2))
            solo[start:start + len(y)] = y
            solos[ev.label] = solo
    gain = 1.0
    if render_cfg.normalize:
        peak = np.abs(mix).max() if n else 0.0
        if peak > 0:
            gain = render_cfg.scene_peak / peak
    if solo_sink is not None:
        for label, solo in solos.items():
            solo_sink[label] = StereoBuffer.from_array(solo * gain, fs)
    meta = build_metadata(spec, pool, fs, frame_rate_hz)
    return StereoBuffer.from_array(mix * gain, fs), meta


def scene_seed(master_seed: int, index: int) -> int:
    """Per-scene seed that depends only on the master seed and the scene index."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, dtype=np.uint64)[0])
