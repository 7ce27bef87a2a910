"""Event pool: load a manifest of labeled mono clips and apply quality filters."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .files import atomic_path, wav_channels

MANIFEST_COLUMNS = (
    "id",
    "label",
    "audio_path",
    "duration_s",
    "quality_score",
    "onset_in_source_s",
    "offset_in_source_s",
)

# Paper defaults: events must last at least 3 s and score at least 0.45.
DEFAULT_MIN_DURATION_S = 3.0
DEFAULT_MIN_SCORE = 0.45

_DURATION_TOL_S = 1e-3


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class EventClip:
    id: str
    label: str
    audio_path: Path
    duration_s: float
    quality_score: float | None
    onset_in_source_s: float
    offset_in_source_s: float


@dataclass(frozen=True)
class EventPool:
    events: tuple[EventClip, ...]
    source_manifest: Path | None = None
    _by_id: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for ev in self.events:
            if ev.id in by_id:
                raise ManifestError(f"duplicate event id {ev.id!r}")
            by_id[ev.id] = ev
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __contains__(self, event_id: str) -> bool:
        return event_id in self._by_id

    def get(self, event_id: str) -> EventClip:
        try:
            return self._by_id[event_id]
        except KeyError:
            raise KeyError(f"event id {event_id!r} not in pool") from None


def _parse_float(row: dict, col: str, lineno: int) -> float:
    raw = (row.get(col) or "").strip()
    try:
        value = float(raw)
    except ValueError:
        raise ManifestError(f"row {lineno}: column {col!r} is not a number: {raw!r}") from None
    if not np.isfinite(value):
        raise ManifestError(f"row {lineno}: column {col!r} is not finite")
    return value


def load_manifest(path, require_score: bool = True, check_audio: bool = True) -> EventPool:
    """Read a CSV manifest into an :class:`EventPool`.

    Rows are validated in order and errors name the 1-based file line. With
    ``require_score=False`` the ``quality_score`` column may be absent or
    empty and the clip's score is left as ``None``.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        required = [c for c in MANIFEST_COLUMNS if require_score or c != "quality_score"]
        if not header:
            return EventPool((), path)
        missing = [c for c in required if c not in header]
        if missing:
            raise ManifestError(f"{path}: header missing columns {missing}")
        reader.fieldnames = header
        events: list[EventClip] = []
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if None in row or any(row.get(c) is None for c in required):
                raise ManifestError(f"row {lineno}: wrong number of fields")
            ev_id = row["id"].strip()
            label = row["label"].strip()
            if not ev_id or not label:
                raise ManifestError(f"row {lineno}: empty id or label")
            if ev_id in seen:
                raise ManifestError(f"row {lineno}: duplicate id {ev_id!r}")
            seen.add(ev_id)
            duration = _parse_float(row, "duration_s", lineno)
            onset = _parse_float(row, "onset_in_source_s", lineno)
            offset = _parse_float(row, "offset_in_source_s", lineno)
            if duration <= 0:
                raise ManifestError(f"row {lineno}: duration_s must be > 0")
            if abs((offset - onset) - duration) > _DURATION_TOL_S:
                raise ManifestError(
                    f"row {lineno}: duration_s {duration} != offset - onset {offset - onset:.6f}"
                )
            score = None
            if (row.get("quality_score") or "").strip():
                score = _parse_float(row, "quality_score", lineno)
                if not 0.0 <= score <= 1.0:
                    raise ManifestError(f"row {lineno}: quality_score {score} outside [0, 1]")
            elif require_score:
                raise ManifestError(f"row {lineno}: quality_score is empty")
            audio = Path(row["audio_path"].strip())
            if not audio.is_absolute():
                audio = path.parent / audio
            if check_audio:
                if not audio.is_file():
                    raise ManifestError(f"row {lineno}: audio file not found: {audio}")
                try:
                    channels = wav_channels(audio)
                except ValueError as exc:
                    raise ManifestError(f"row {lineno}: unreadable WAV {audio}: {exc}") from None
                if channels != 1:
                    raise ManifestError(f"row {lineno}: {audio} has {channels} channels, expected mono")
            events.append(EventClip(ev_id, label, audio, duration, score, onset, offset))
    return EventPool(tuple(events), path)


def write_manifest(pool: EventPool | list[EventClip], path) -> None:
    path = Path(path)
    with atomic_path(path) as tmp:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(MANIFEST_COLUMNS)
            for ev in pool:
                audio = ev.audio_path
                try:
                    audio = audio.resolve().relative_to(path.parent.resolve())
                except ValueError:
                    pass
                writer.writerow([
                    ev.id, ev.label, str(audio), repr(ev.duration_s),
                    "" if ev.quality_score is None else repr(ev.quality_score),
                    repr(ev.onset_in_source_s), repr(ev.offset_in_source_s),
                ])


def filter_events(
    pool: EventPool,
    min_duration_s: float = DEFAULT_MIN_DURATION_S,
    min_score: float = DEFAULT_MIN_SCORE,
) -> EventPool:
    """Keep events with ``duration_s >= min_duration_s`` and ``quality_score >= min_score``.

    Both thresholds are inclusive. A clip without a score counts as 0, so it
    only survives a ``min_score`` of 0.
    """
    if min_duration_s < 0:
        raise ValueError("min_duration_s must be >= 0")
    if not 0.0 <= min_score <= 1.0:
        raise ValueError("min_score must lie in [0, 1]")
    kept = tuple(
        ev for ev in pool.events
        if ev.duration_s >= min_duration_s
        and (ev.quality_score if ev.quality_score is not None else 0.0) >= min_score
    )
    return EventPool(kept, pool.source_manifest)


def sample_events(pool: EventPool, rng_seed, count: int) -> list[EventClip]:
    """Draw ``count`` distinct events uniformly without replacement."""
    if not 0 <= count <= len(pool):
        raise ValueError(f"cannot sample {count} events from a pool of {len(pool)}")
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(len(pool), size=count, replace=False)
    return [pool.events[i] for i in idx]
