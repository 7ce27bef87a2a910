"""Motion patterns in the listener's frontal half-plane.

Azimuth is in degrees, 0 straight ahead, negative to the left and positive to
the right. Paths are linear in (azimuth, distance) over time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

STATIC_KINDS = ("static",)
DYNAMIC_KINDS = ("approach", "recede", "lateral_lr", "lateral_rl", "arc_lr", "arc_rl")
# Lateral sweep with a simultaneous distance change; only drawn when enabled.
COMBINED_KINDS = ("sweep_lr", "sweep_rl")
ALL_KINDS = STATIC_KINDS + DYNAMIC_KINDS + COMBINED_KINDS


class Point3(NamedTuple):
    x: float
    y: float
    z: float


class OutsideRoomError(ValueError):
    pass


@dataclass(frozen=True)
class TrajectoryConfig:
    min_azimuth_deg: float = -90.0
    max_azimuth_deg: float = 90.0
    min_distance_m: float = 0.3
    max_distance_m: float = 6.0
    min_radial_change_m: float = 1.5
    min_azimuth_change_deg: float = 40.0
    allow_combined: bool = False

    def __post_init__(self):
        if not self.min_azimuth_deg < self.max_azimuth_deg:
            raise ValueError("azimuth range is empty")
        if not 0 < self.min_distance_m < self.max_distance_m:
            raise ValueError("distance range must satisfy 0 < min < max")
        if self.max_distance_m - self.min_distance_m < self.min_radial_change_m:
            raise ValueError("distance range narrower than the required radial change")
        if self.max_azimuth_deg - self.min_azimuth_deg < self.min_azimuth_change_deg:
            raise ValueError("azimuth range narrower than the required azimuth change")

    def dynamic_kinds(self) -> tuple[str, ...]:
        return DYNAMIC_KINDS + (COMBINED_KINDS if self.allow_combined else ())


DEFAULT_TRAJECTORY_CONFIG = TrajectoryConfig()


@dataclass(frozen=True)
class PolarPos:
    azimuth_deg: float
    distance_m: float

    def validate(self, cfg: TrajectoryConfig = DEFAULT_TRAJECTORY_CONFIG) -> None:
        if not cfg.min_azimuth_deg <= self.azimuth_deg <= cfg.max_azimuth_deg:
            raise ValueError(f"azimuth {self.azimuth_deg} outside [{cfg.min_azimuth_deg}, {cfg.max_azimuth_deg}]")
        if not cfg.min_distance_m <= self.distance_m <= cfg.max_distance_m:
            raise ValueError(f"distance {self.distance_m} outside [{cfg.min_distance_m}, {cfg.max_distance_m}]")


@dataclass(frozen=True)
class Trajectory:
    kind: str
    start: PolarPos
    end: PolarPos
    duration_s: float

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be > 0")
        s, e = self.start, self.end
        d_az = e.azimuth_deg - s.azimuth_deg
        d_r = e.distance_m - s.distance_m
        ok = {
            "static": s == e,
            "approach": d_r < 0 and d_az == 0,
            "recede": d_r > 0 and d_az == 0,
            "lateral_lr": d_az > 0 and d_r == 0,
            "lateral_rl": d_az < 0 and d_r == 0,
            "arc_lr": d_az > 0 and d_r == 0,
            "arc_rl": d_az < 0 and d_r == 0,
            "sweep_lr": d_az > 0 and d_r != 0,
            "sweep_rl": d_az < 0 and d_r != 0,
        }[self.kind]
        if not ok:
            raise ValueError(f"endpoints {s} -> {e} inconsistent with kind {self.kind!r}")

    def position_at(self, fraction: float) -> PolarPos:
        """Position at ``fraction`` of the way through the path (clamped to [0, 1])."""
        f = min(max(fraction, 0.0), 1.0)
        if f == 1.0:
            return self.end
        s, e = self.start, self.end
        return PolarPos(
            s.azimuth_deg + (e.azimuth_deg - s.azimuth_deg) * f,
            s.distance_m + (e.distance_m - s.distance_m) * f,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "start": {"azimuth_deg": self.start.azimuth_deg, "distance_m": self.start.distance_m},
            "end": {"azimuth_deg": self.end.azimuth_deg, "distance_m": self.end.distance_m},
            "duration_s": self.duration_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        return cls(
            d["kind"],
            PolarPos(d["start"]["azimuth_deg"], d["start"]["distance_m"]),
            PolarPos(d["end"]["azimuth_deg"], d["end"]["distance_m"]),
            d["duration_s"],
        )


def frame_count(duration_s: float, frame_rate_hz: float) -> int:
    """``ceil(duration * rate)``, ignoring float noise below 1e-9 frames."""
    return max(1, math.ceil(round(duration_s * frame_rate_hz, 9)))


def _ordered_pair(rng, lo: float, hi: float, min_gap: float) -> tuple[float, float]:
    # Uniform over {(a, b) in [lo, hi]^2 : b - a >= min_gap}.
    while True:
        a, b = rng.uniform(lo, hi, size=2)
        if b - a >= min_gap:
            return float(a), float(b)


def make_trajectory(
    kind: str,
    rng_seed,
    duration_s: float,
    cfg: TrajectoryConfig = DEFAULT_TRAJECTORY_CONFIG,
) -> Trajectory:
    """Draw endpoints for ``kind`` uniformly within its admissible region.

    ``rng_seed`` may be an int or a ``numpy.random.Generator``.
    """
    if kind not in ALL_KINDS:
        raise ValueError(f"unknown trajectory kind {kind!r}")
    if kind in COMBINED_KINDS and not cfg.allow_combined:
        raise ValueError(f"trajectory kind {kind!r} requires allow_combined")
    if not duration_s > 0:
        raise ValueError("duration_s must be > 0")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    az_lo, az_hi = cfg.min_azimuth_deg, cfg.max_azimuth_deg
    d_lo, d_hi = cfg.min_distance_m, cfg.max_distance_m

    if kind == "static":
        p = PolarPos(float(rng.uniform(az_lo, az_hi)), float(rng.uniform(d_lo, d_hi)))
        return Trajectory(kind, p, p, duration_s)
    if kind in ("approach", "recede"):
        az = float(rng.uniform(az_lo, az_hi))
        near, far = _ordered_pair(rng, d_lo, d_hi, cfg.min_radial_change_m)
        d0, d1 = (far, near) if kind == "approach" else (near, far)
        return Trajectory(kind, PolarPos(az, d0), PolarPos(az, d1), duration_s)

    a, b = _ordered_pair(rng, az_lo, az_hi, cfg.min_azimuth_change_deg)
    a0, a1 = (a, b) if kind.endswith("_lr") else (b, a)
    if kind in COMBINED_KINDS:
        near, far = _ordered_pair(rng, d_lo, d_hi, cfg.min_radial_change_m)
        d0, d1 = (far, near) if rng.random() < 0.5 else (near, far)
    else:
        d0 = d1 = float(rng.uniform(d_lo, d_hi))
    return Trajectory(kind, PolarPos(a0, d0), PolarPos(a1, d1), duration_s)


def sample_positions(traj: Trajectory, frame_rate_hz: float) -> list[PolarPos]:
    """Per-frame positions; first and last frames equal the endpoints exactly."""
    if not frame_rate_hz > 0:
        raise ValueError("frame_rate_hz must be > 0")
    n = frame_count(traj.duration_s, frame_rate_hz)
    if n == 1:
        return [traj.start]
    return [traj.position_at(i / (n - 1)) for i in range(n)]


def track_arrays(positions: list[PolarPos]) -> tuple[np.ndarray, np.ndarray]:
    az = np.array([p.azimuth_deg for p in positions], dtype=float)
    dist = np.array([p.distance_m for p in positions], dtype=float)
    return az, dist


def polar_to_cartesian(pos: PolarPos, listener_origin: Point3, room_dims=None) -> Point3:
    """Listener-centric polar position to room coordinates.

    The listener faces +y and +x is to their right. When ``room_dims`` is
    given, points not strictly inside the box raise :class:`OutsideRoomError`.
    """
    az = math.radians(pos.azimuth_deg)
    p = Point3(
        listener_origin.x + pos.distance_m * math.sin(az),
        listener_origin.y + pos.distance_m * math.cos(az),
        listener_origin.z,
    )
    if room_dims is not None and not all(0.0 < c < L for c, L in zip(p, room_dims)):
        raise OutsideRoomError(f"position {tuple(round(c, 3) for c in p)} outside room {tuple(room_dims)}")
    return p
