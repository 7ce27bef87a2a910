"""Scene metadata for QA tests, composed without rendering audio."""

from spatialqa.desk import DESK_EVENTS
from spatialqa.events import EventClip, EventPool
from spatialqa.scene import CompositionError, SceneConfig, build_metadata, compose_scene

POOL = EventPool(tuple(
    EventClip(f"ev{i:02d}", label, None, 9.0, 0.9, 0.0, 9.0) for i, (label, _, _) in enumerate(DESK_EVENTS)
))
CFG = SceneConfig()


def scene_metas(count, min_events=1, start=0):
    """First ``count`` composable scenes with at least ``min_events`` events."""
    out, seed = [], start
    while len(out) < count:
        try:
            spec = compose_scene(POOL, seed, CFG, f"sc{seed:04d}")
        except CompositionError:
            seed += 1
            continue
        seed += 1
        if len(spec.placements) >= min_events:
            out.append(build_metadata(spec, POOL, 16000, CFG.frame_rate_hz))
    return out
