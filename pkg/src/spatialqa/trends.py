"""Qualitative motion descriptors derived from per-frame azimuth/distance tracks."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .scene import SceneMetadata

DIRECTIONS = ("static", "left->right", "right->left", "arc left->right", "arc right->left")
SPANS = ("narrow", "moderate", "wide")
SIDES = ("left", "center", "right")
PROFILES = ("steady", "approach", "recede", "approach->recede", "recede->approach")
VARIATIONS = ("none", "slight", "moderate", "strong")


@dataclass(frozen=True)
class TrendThresholds:
    center_band_deg: float = 15.0
    static_azimuth_deg: float = 5.0
    span_moderate_deg: float = 30.0
    span_wide_deg: float = 80.0
    variation_slight_m: float = 0.5
    variation_moderate_m: float = 1.5
    variation_strong_m: float = 3.0


DEFAULT_THRESHOLDS = TrendThresholds()


@dataclass(frozen=True)
class AzimuthTrends:
    direction: str
    span_category: str
    crosses_center: bool
    start_side: str
    end_side: str
    is_arc: bool

    @property
    def lateral(self) -> str:
        """Direction with any ``arc`` prefix removed."""
        return self.direction.replace("arc ", "")


@dataclass(frozen=True)
class DistanceTrends:
    trend_profile: str
    variation_category: str


@dataclass(frozen=True)
class TemporalTrends:
    start_time_s: float
    end_time_s: float
    duration_s: float


@dataclass(frozen=True)
class FrameTrends:
    azimuth: AzimuthTrends
    distance: DistanceTrends
    temporal: TemporalTrends | None
    summary_text: str

    def to_json(self) -> dict:
        out = {"azimuth": asdict(self.azimuth), "distance": asdict(self.distance)}
        if self.temporal is not None:
            t = self.temporal
            out["temporal"] = {"start_time": t.start_time_s, "end_time": t.end_time_s, "duration": t.duration_s}
        out["summary_text"] = self.summary_text
        return out

    @classmethod
    def from_json(cls, d: dict) -> "FrameTrends":
        t = d.get("temporal")
        temporal = TemporalTrends(t["start_time"], t["end_time"], t["duration"]) if t else None
        return cls(AzimuthTrends(**d["azimuth"]), DistanceTrends(**d["distance"]), temporal, d["summary_text"])


def trends_to_json(trends: dict[str, FrameTrends]) -> dict:
    return {label: tr.to_json() for label, tr in trends.items()}


def trends_from_json(d: dict) -> dict[str, FrameTrends]:
    return {label: FrameTrends.from_json(v) for label, v in d.items()}


def side_of(azimuth_deg: float, th: TrendThresholds = DEFAULT_THRESHOLDS) -> str:
    if azimuth_deg < -th.center_band_deg:
        return "left"
    if azimuth_deg > th.center_band_deg:
        return "right"
    return "center"


def span_category(range_deg: float, th: TrendThresholds = DEFAULT_THRESHOLDS) -> str:
    if range_deg < th.span_moderate_deg:
        return "narrow"
    if range_deg <= th.span_wide_deg:
        return "moderate"
    return "wide"


def variation_category(range_m: float, th: TrendThresholds = DEFAULT_THRESHOLDS) -> str:
    if range_m < th.variation_slight_m:
        return "none"
    if range_m < th.variation_moderate_m:
        return "slight"
    if range_m <= th.variation_strong_m:
        return "moderate"
    return "strong"


def lateral_direction(az: np.ndarray, th: TrendThresholds = DEFAULT_THRESHOLDS) -> str:
    """``static``, ``left->right`` or ``right->left`` from the net change.

    Out-and-back paths with a small net change take the sign of the first
    excursion larger than the static tolerance.
    """
    eps = th.static_azimuth_deg
    if az.max() - az.min() < eps:
        return "static"
    net = az[-1] - az[0]
    if abs(net) < eps:
        dev = az - az[0]
        net = dev[np.argmax(np.abs(dev) >= eps)]
    return "left->right" if net > 0 else "right->left"


def distance_profile(dist: np.ndarray, th: TrendThresholds = DEFAULT_THRESHOLDS) -> str:
    """Radial trend: split at the global extremes and require a slight change on each side."""
    need = th.variation_slight_m
    if dist.max() - dist.min() < need:
        return "steady"
    i_min, i_max = int(np.argmin(dist)), int(np.argmax(dist))
    dip = dist[0] - dist[i_min] >= need and dist[-1] - dist[i_min] >= need
    bump = dist[i_max] - dist[0] >= need and dist[i_max] - dist[-1] >= need
    if dip and bump:
        return "approach->recede" if i_min < i_max else "recede->approach"
    if dip:
        return "approach->recede"
    if bump:
        return "recede->approach"
    net = dist[-1] - dist[0]
    if net <= -need:
        return "approach"
    if net >= need:
        return "recede"
    return "steady"


def event_trends(
    label: str,
    azimuth_deg,
    distance_m,
    kind: str | None = None,
    temporal: TemporalTrends | None = None,
    th: TrendThresholds = DEFAULT_THRESHOLDS,
) -> FrameTrends:
    """Trends for one event's tracks.

    ``kind`` is the generating trajectory kind when known; ``arc`` direction
    labels then follow it. Without it, a moving source at a steady distance
    is taken to be on an arc.
    """
    az = np.asarray(azimuth_deg, dtype=float)
    dist = np.asarray(distance_m, dtype=float)
    if az.size == 0 or dist.size == 0:
        raise ValueError(f"{label}: empty track")
    variation = variation_category(float(dist.max() - dist.min()), th)
    base = lateral_direction(az, th)
    if base == "static":
        arc = False
    elif kind is not None:
        arc = kind.startswith("arc")
    else:
        arc = variation == "none"
    direction = f"arc {base}" if arc else base
    band = th.center_band_deg
    azimuth = AzimuthTrends(
        direction=direction,
        span_category="narrow" if base == "static" else span_category(float(az.max() - az.min()), th),
        crosses_center=bool((az < -band).any() and (az > band).any()),
        start_side=side_of(float(az[0]), th),
        end_side=side_of(float(az[-1]), th),
        is_arc=arc,
    )
    distance = DistanceTrends(distance_profile(dist, th), variation)
    return FrameTrends(azimuth, distance, temporal, summarize_parts(azimuth, distance, label))


def extract_frame_trends(meta: SceneMetadata, th: TrendThresholds = DEFAULT_THRESHOLDS) -> dict[str, FrameTrends]:
    out = {}
    for ev in meta.events:
        temporal = TemporalTrends(ev.onset_s, ev.offset_s, ev.offset_s - ev.onset_s)
        out[ev.label] = event_trends(ev.label, ev.azimuth_deg, ev.distance_m, ev.trajectory_kind, temporal, th)
    return out


# Listener-centric phrasing shared with the question generator.

def place_name(side: str) -> str:
    return "middle" if side == "center" else side


def where(side: str) -> str:
    return "in the middle" if side == "center" else f"on the {side}"


def lateral_phrase(az: AzimuthTrends) -> str:
    if az.lateral == "static":
        return f"stays {where(az.start_side)}"
    toward = "right" if az.lateral == "left->right" else "left"
    verb = "curves around the listener in an arc" if az.is_arc else "moves"
    if az.start_side != az.end_side:
        path = f"{verb} from the {place_name(az.start_side)} to the {place_name(az.end_side)}"
    else:
        path = f"{verb} toward the {toward} while staying {where(az.start_side)}"
    text = f"{path} in a {az.span_category} sweep"
    if az.crosses_center:
        text += ", passing through the middle"
    return text


RADIAL_PHRASES = {
    "steady": "at a steady distance",
    "approach": "while getting closer",
    "recede": "while moving farther away",
    "approach->recede": "while coming closer and then moving farther away",
    "recede->approach": "while moving farther away and then coming closer",
}

RADIAL_VERBS = {
    "steady": "keeps a steady distance",
    "approach": "gets closer",
    "recede": "moves farther away",
    "approach->recede": "comes closer and then moves farther away",
    "recede->approach": "moves farther away and then comes closer",
}


def summarize_parts(az: AzimuthTrends, dist: DistanceTrends, label: str) -> str:
    lateral = lateral_phrase(az)
    radial = RADIAL_PHRASES[dist.trend_profile]
    sep = " " if az.lateral == "static" else ", "
    return f"The {label} {lateral}{sep}{radial}."


def summarize(trends: FrameTrends, label: str) -> str:
    """One deterministic listener-centric sentence for an event."""
    return summarize_parts(trends.azimuth, trends.distance, label)
