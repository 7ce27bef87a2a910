"""Pipeline configuration loaded from a sectioned TOML file.

Every key is optional; omitted keys keep the library defaults. Problems are
collected and reported together.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .events import DEFAULT_MIN_DURATION_S, DEFAULT_MIN_SCORE
from .masking import MaskMode
from .qa import MixConstraints
from .render import RenderConfig
from .room import DEFAULT_LISTENER, MicArray, RoomSpec, stereo_pair, validate_mics
from .scene import SceneConfig
from .trajectory import Point3, TrajectoryConfig
from .trends import TrendThresholds


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass(frozen=True)
class EventFilterConfig:
    min_duration_s: float = DEFAULT_MIN_DURATION_S
    min_score: float = DEFAULT_MIN_SCORE


@dataclass(frozen=True)
class MicConfig:
    listener: tuple[float, float, float] = tuple(DEFAULT_LISTENER)
    spacing_m: float = 0.18

    def array(self) -> MicArray:
        return stereo_pair(Point3(*self.listener), self.spacing_m)


@dataclass(frozen=True)
class MaskConfig:
    mode: str = "no_mask"
    threshold: float = 0.8
    median_window_s: float = 0.3


@dataclass(frozen=True)
class JudgeConfig:
    min_similarity: float = 4.0
    min_factual: float = 4.0


@dataclass(frozen=True)
class RunConfig:
    master_seed: int = 0
    scenes: int = 20
    out_dir: str = "out"
    manifest: str | None = None
    jobs: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    room: RoomSpec = field(default_factory=RoomSpec)
    mics: MicConfig = field(default_factory=MicConfig)
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    trends: TrendThresholds = field(default_factory=TrendThresholds)
    events: EventFilterConfig = field(default_factory=EventFilterConfig)
    mask: MaskConfig = field(default_factory=MaskConfig)
    qa: MixConstraints = field(default_factory=MixConstraints)
    judge: JudgeConfig = field(default_factory=JudgeConfig)
    run: RunConfig = field(default_factory=RunConfig)

    @property
    def sample_rate_hz(self) -> int:
        return self.room.sample_rate_hz

    @property
    def frame_rate_hz(self) -> float:
        return self.scene.frame_rate_hz

    def mask_mode(self, kind: str | None = None) -> MaskMode:
        return MaskMode(kind or self.mask.mode, self.mask.threshold, self.mask.median_window_s, self.frame_rate_hz)


_SECTIONS = {
    "room": RoomSpec,
    "mics": MicConfig,
    "trajectory": TrajectoryConfig,
    "scene": SceneConfig,
    "render": RenderConfig,
    "trends": TrendThresholds,
    "events": EventFilterConfig,
    "mask": MaskConfig,
    "qa": MixConstraints,
    "judge": JudgeConfig,
    "run": RunConfig,
}
# Scene fields that come from their own sections.
_NESTED_SCENE = ("trajectory", "room", "mics")


def _coerce(value, default):
    if isinstance(default, tuple) and isinstance(value, list):
        return tuple(value)
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _build(name: str, cls, table, problems: list[str]):
    if not isinstance(table, dict):
        problems.append(f"[{name}] must be a table")
        return cls()
    fields = {f.name: f for f in dataclasses.fields(cls)}
    allowed = set(fields) - (set(_NESTED_SCENE) if name == "scene" else set())
    kwargs = {}
    for key, value in table.items():
        if key not in allowed:
            problems.append(f"[{name}] unknown key {key!r}")
            continue
        f = fields[key]
        default = f.default if f.default is not dataclasses.MISSING else None
        kwargs[key] = _coerce(value, default)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        problems.append(f"[{name}] {exc}")
        return cls()


def config_from_dict(data: dict) -> PipelineConfig:
    problems: list[str] = []
    unknown = sorted(set(data) - set(_SECTIONS))
    problems += [f"unknown section [{s}]" for s in unknown]
    built = {name: _build(name, cls, data.get(name, {}), problems) for name, cls in _SECTIONS.items()}
    mics = built["mics"].array()
    try:
        validate_mics(built["room"], mics)
    except ValueError as exc:
        problems.append(f"[mics] {exc}")
    scene_kwargs = {k: getattr(built["scene"], k) for k in
                    (f.name for f in dataclasses.fields(SceneConfig)) if k not in _NESTED_SCENE}
    try:
        built["scene"] = SceneConfig(**scene_kwargs, trajectory=built["trajectory"], room=built["room"], mics=mics)
    except ValueError as exc:
        problems.append(f"[scene] {exc}")
    try:
        m = built["mask"]
        MaskMode(m.mode, m.threshold, m.median_window_s, built["scene"].frame_rate_hz)
    except ValueError as exc:
        problems.append(f"[mask] {exc}")
    if built["run"].jobs < 1:
        problems.append("[run] jobs must be >= 1")
    if problems:
        raise ConfigError(problems)
    return PipelineConfig(**built)


def load_config(path=None) -> PipelineConfig:
    if path is None:
        return config_from_dict({})
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError([f"config file {path} not found"]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from None
    return config_from_dict(data)
