import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialqa.trajectory import (
    ALL_KINDS,
    DYNAMIC_KINDS,
    OutsideRoomError,
    Point3,
    PolarPos,
    Trajectory,
    TrajectoryConfig,
    make_trajectory,
    polar_to_cartesian,
    sample_positions,
    track_arrays,
)

ORIGIN = Point3(5.0, 1.5, 1.5)


@pytest.mark.parametrize("seed", range(20))
def test_endpoint_rules_per_kind(seed):
    cfg = TrajectoryConfig()
    arc = make_trajectory("arc_lr", seed, 5.0)
    assert arc.start.distance_m == arc.end.distance_m
    assert arc.end.azimuth_deg - arc.start.azimuth_deg >= cfg.min_azimuth_change_deg
    static = make_trajectory("static", seed, 5.0)
    assert static.start == static.end
    app = make_trajectory("approach", seed, 5.0)
    assert app.start.distance_m - app.end.distance_m >= cfg.min_radial_change_m
    assert app.start.azimuth_deg == app.end.azimuth_deg
    rec = make_trajectory("recede", seed, 5.0)
    assert rec.end.distance_m - rec.start.distance_m >= cfg.min_radial_change_m
    rl = make_trajectory("lateral_rl", seed, 5.0)
    assert rl.start.azimuth_deg - rl.end.azimuth_deg >= cfg.min_azimuth_change_deg
    for t in (arc, static, app, rec, rl):
        t.start.validate(cfg)
        t.end.validate(cfg)


def test_combined_kinds_need_opt_in():
    with pytest.raises(ValueError, match="allow_combined"):
        make_trajectory("sweep_lr", 0, 5.0)
    t = make_trajectory("sweep_lr", 0, 5.0, TrajectoryConfig(allow_combined=True))
    assert t.end.azimuth_deg > t.start.azimuth_deg and t.end.distance_m != t.start.distance_m


def test_inconsistent_endpoints_rejected():
    with pytest.raises(ValueError, match="inconsistent"):
        Trajectory("approach", PolarPos(0, 2), PolarPos(0, 3), 1.0)
    with pytest.raises(ValueError, match="unknown"):
        Trajectory("spiral", PolarPos(0, 2), PolarPos(0, 2), 1.0)


def test_static_track_is_constant():
    t = Trajectory("static", PolarPos(30, 2), PolarPos(30, 2), 10.0)
    pos = sample_positions(t, 10)
    assert len(pos) == 100
    assert all(p == PolarPos(30, 2) for p in pos)


def test_arc_track_keeps_distance_and_decreases_azimuth():
    t = Trajectory("arc_rl", PolarPos(60, 3), PolarPos(-60, 3), 4.0)
    az, dist = track_arrays(sample_positions(t, 10))
    assert np.all(dist == 3.0)
    assert np.all(np.diff(az) < 0)
    assert az[0] == 60 and az[-1] == -60


def test_approach_matches_linear_interpolation():
    t = Trajectory("approach", PolarPos(0, 6), PolarPos(0, 1), 5.0)
    _, dist = track_arrays(sample_positions(t, 10))
    expected = 6 + (1 - 6) * np.arange(50) / 49
    assert np.allclose(dist, expected, rtol=0, atol=1e-12)
    assert np.all(np.diff(dist) < 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 20), st.sampled_from([1.0, 10.0, 16.0, 20.0]), st.sampled_from(ALL_KINDS), st.integers(0, 10**6))
def test_sample_count_and_bounds(duration, rate, kind, seed):
    cfg = TrajectoryConfig(allow_combined=True)
    t = make_trajectory(kind, seed, duration, cfg)
    pos = sample_positions(t, rate)
    assert len(pos) == max(1, math.ceil(round(duration * rate, 9)))
    for p in pos:
        p.validate(cfg)
    if kind.startswith("arc") or kind.startswith("lateral"):
        assert max(abs(p.distance_m - t.start.distance_m) for p in pos) == 0


@pytest.mark.parametrize("seed", range(10))
def test_mirrored_laterals_are_mirror_images(seed):
    lr = make_trajectory("lateral_lr", seed, 3.0)
    rl = Trajectory("lateral_rl", PolarPos(-lr.start.azimuth_deg, lr.start.distance_m),
                    PolarPos(-lr.end.azimuth_deg, lr.end.distance_m), 3.0)
    a, _ = track_arrays(sample_positions(lr, 10))
    b, _ = track_arrays(sample_positions(rl, 10))
    assert np.array_equal(a, -b)


def test_polar_to_cartesian_axes():
    assert np.allclose(polar_to_cartesian(PolarPos(0, 2), ORIGIN), (5, 3.5, 1.5))
    assert np.allclose(polar_to_cartesian(PolarPos(-90, 1), ORIGIN), (4, 1.5, 1.5))
    assert np.allclose(polar_to_cartesian(PolarPos(45, math.sqrt(2)), ORIGIN), (6, 2.5, 1.5))


def test_outside_room_raises():
    with pytest.raises(OutsideRoomError):
        polar_to_cartesian(PolarPos(90, 6), ORIGIN, (10, 8, 3))


def test_round_trip_dict():
    for kind in DYNAMIC_KINDS:
        t = make_trajectory(kind, 1, 2.0)
        assert Trajectory.from_dict(t.to_dict()) == t
