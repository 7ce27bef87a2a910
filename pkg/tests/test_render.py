import numpy as np
import pytest
from scipy.signal import resample
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialqa.render import (
    StereoBuffer,
    crossfade_stitch,
    crossfade_weights,
    render_moving_source,
    render_static,
)
from spatialqa.room import DEFAULT_LISTENER, RoomSpec, compute_rir, stereo_pair
from spatialqa.trajectory import PolarPos, Trajectory, polar_to_cartesian

ROOM = RoomSpec()
MICS = stereo_pair()
FS = ROOM.sample_rate_hz


def static(az, d, dur=1.0):
    return Trajectory("static", PolarPos(az, d), PolarPos(az, d), dur)


def rel_rms(a, b):
    return np.sqrt(np.mean((a - b) ** 2)) / np.sqrt(np.mean(b ** 2))


def noise(seconds, seed=0):
    return np.random.default_rng(seed).standard_normal(int(seconds * FS))


def test_silence_in_silence_out():
    out = render_moving_source(np.zeros(FS // 2), static(20, 2, 0.5), ROOM, MICS)
    assert not out.left.any() and not out.right.any()


def test_static_hop_render_equals_whole_convolution():
    x = noise(1.3)
    out = render_moving_source(x, static(-35, 2.5, 1.3), ROOM, MICS)
    src = polar_to_cartesian(PolarPos(-35, 2.5), DEFAULT_LISTENER)
    ref = render_static(x, compute_rir(ROOM, src, MICS.left), compute_rir(ROOM, src, MICS.right))
    assert len(out) == len(ref)
    assert rel_rms(out.left, ref.left) < 1e-4 and rel_rms(out.right, ref.right) < 1e-4


def test_fft_matches_direct_on_moving_source():
    x = noise(0.8, 1)
    t = Trajectory("arc_lr", PolarPos(-50, 2), PolarPos(40, 2), 0.8)
    a = render_moving_source(x, t, ROOM, MICS, method="fft")
    b = render_moving_source(x, t, ROOM, MICS, method="direct")
    assert rel_rms(a.left, b.left) < 1e-6 and rel_rms(a.right, b.right) < 1e-6


def test_left_source_is_louder_and_earlier_on_left():
    x = noise(0.5, 2)
    out = render_moving_source(x, static(-90, 2, 0.5), ROOM, MICS)
    assert np.sqrt(np.mean(out.left ** 2)) > np.sqrt(np.mean(out.right ** 2))
    src = polar_to_cartesian(PolarPos(-90, 2), DEFAULT_LISTENER)
    hl = compute_rir(RoomSpec(max_order=0), src, MICS.left).taps
    hr = compute_rir(RoomSpec(max_order=0), src, MICS.right).taps
    d_left = np.linalg.norm(np.subtract(src, MICS.left))
    d_right = np.linalg.norm(np.subtract(src, MICS.right))
    assert d_left < d_right
    assert np.argmax(hl) < np.argmax(hr)
    # Sample peaks depend on the fractional delay; compare band-limited peaks instead.
    peak_l = resample(hl, 16 * len(hl)).max()
    peak_r = resample(hr, 16 * len(hr)).max()
    assert peak_l / peak_r == pytest.approx(d_right / d_left, rel=0.02)


def test_frontal_source_is_balanced():
    out = render_moving_source(noise(0.5, 3), static(0, 2, 0.5), ROOM, MICS)
    peak = out.peak()
    assert np.max(np.abs(out.left - out.right)) / peak < 1e-3


@pytest.mark.parametrize("theta", [20, 55, 80])
def test_mirror_positions_swap_channels(theta):
    x = noise(0.4, 4)
    a = render_moving_source(x, static(theta, 2, 0.4), ROOM, MICS)
    b = render_moving_source(x, static(-theta, 2, 0.4), ROOM, MICS)
    assert rel_rms(a.left, b.right) < 1e-3 and rel_rms(a.right, b.left) < 1e-3


def test_linearity_and_finiteness():
    x = noise(0.6, 5)
    t = Trajectory("approach", PolarPos(30, 4), PolarPos(30, 1), 0.6)
    a = render_moving_source(x, t, ROOM, MICS)
    b = render_moving_source(2.5 * x, t, ROOM, MICS)
    assert rel_rms(b.left, 2.5 * a.left) < 1e-6
    assert np.all(np.isfinite(a.as_array()))


def test_slow_motion_has_no_clicks():
    n = 2 * FS
    x = np.sin(2 * np.pi * 220 * np.arange(n) / FS)
    t = Trajectory("lateral_lr", PolarPos(-10, 2), PolarPos(10, 2), 2.0)
    moving = render_moving_source(x, t, ROOM, MICS)
    mid = polar_to_cartesian(t.position_at(0.5), DEFAULT_LISTENER)
    ref = render_static(x, compute_rir(ROOM, mid, MICS.left), compute_rir(ROOM, mid, MICS.right))
    for ch in ("left", "right"):
        jump = np.max(np.abs(np.diff(getattr(moving, ch))))
        ref_jump = np.max(np.abs(np.diff(getattr(ref, ch))))
        assert jump < 10 * ref_jump


def test_crossfade_preserves_constants():
    H, X = 1600, 320
    blocks = [StereoBuffer(np.ones(H + X), np.ones(H + X), FS) for _ in range(3)]
    blocks[-1] = StereoBuffer(np.ones(H), np.ones(H), FS)
    out = crossfade_stitch(blocks, H / FS, X / FS)
    assert len(out) == 3 * H
    assert np.max(np.abs(out.left - 1)) < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 400))
def test_crossfade_weights_complementary(n):
    w = crossfade_weights(n)
    assert np.allclose(w + w[::-1], 1.0)
    assert np.all((w > 0) & (w < 1))
    assert np.all(np.diff(w) > 0) or n == 1


def test_single_block_unchanged_and_bad_blocks_rejected():
    b = StereoBuffer(np.arange(5.0), -np.arange(5.0), FS)
    out = crossfade_stitch([b], 0.1, 0.02)
    assert np.array_equal(out.left, b.left) and out.left is not b.left
    short = StereoBuffer(np.ones(10), np.ones(10), FS)
    with pytest.raises(ValueError):
        crossfade_stitch([short, short], 0.1, 0.02)
    with pytest.raises(ValueError):
        crossfade_stitch([StereoBuffer(np.ones(1920), np.ones(1920), 8000), StereoBuffer(np.ones(5), np.ones(5), FS)],
                         0.1, 0.02)
