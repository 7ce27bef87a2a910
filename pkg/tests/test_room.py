import numpy as np
import pytest
from oracles import lattice_count, mirror_images

from spatialqa.room import (
    DEFAULT_LISTENER,
    RoomGeometryError,
    RoomSpec,
    compute_rir,
    image_sources,
    stereo_pair,
    validate_mics,
)
from spatialqa.trajectory import Point3


@pytest.mark.parametrize("order, count", [(0, 1), (1, 7), (2, 25), (3, 63)])
def test_image_count_matches_lattice_and_mirroring(order, count):
    room = RoomSpec(dimensions_m=(7.3, 5.1, 2.9), max_order=order)
    src = (2.2, 1.7, 1.1)
    images = image_sources(room, src)
    assert len(images) == count == lattice_count(order)
    ours = sorted((tuple(np.round(p, 6)), k) for p, k in images)
    ref = sorted((tuple(np.round(p, 6)), k) for p, k in mirror_images(room.dimensions_m, src, order))
    assert ours == ref


def test_order_zero_is_the_source():
    (p, k), = image_sources(RoomSpec(max_order=0), (1.0, 2.0, 1.0))
    assert p == Point3(1.0, 2.0, 1.0) and k == 0


def test_direct_tap_position():
    room = RoomSpec(max_order=0)
    mic = Point3(2.0, 2.0, 1.5)
    src = Point3(2.0 + 3.43, 2.0, 1.5)
    h = compute_rir(room, src, mic).taps
    assert int(np.argmax(np.abs(h))) == 160
    assert h[160] == pytest.approx(1 / 3.43, rel=1e-9)


def test_equidistant_mics_give_identical_rirs():
    room = RoomSpec()
    mics = stereo_pair(DEFAULT_LISTENER)
    src = Point3(5.0, 4.0, 1.5)
    a = compute_rir(room, src, mics.left).taps
    b = compute_rir(room, src, mics.right).taps
    assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_full_absorption_leaves_direct_path_only():
    src, mic = Point3(3, 3, 1.2), Point3(6, 4, 1.5)
    full = compute_rir(RoomSpec(absorption=1.0), src, mic)
    direct = compute_rir(RoomSpec(absorption=1.0, max_order=0), src, mic)
    assert RoomSpec(absorption=1.0).reflection_coefficient == 0
    n = len(direct.taps)
    assert np.allclose(full.taps[:n], direct.taps, rtol=0, atol=1e-15)
    assert np.all(full.taps[n:] == 0)


def test_energy_non_increasing_in_absorption():
    src, mic = Point3(3, 3, 1.2), Point3(6, 4, 1.5)
    energies = [np.sum(compute_rir(RoomSpec(absorption=a), src, mic, length=4000).taps ** 2)
                for a in (0.05, 0.25, 0.5, 0.75, 1.0)]
    assert all(e1 >= e2 for e1, e2 in zip(energies, energies[1:]))


def test_geometry_errors():
    room = RoomSpec()
    with pytest.raises(RoomGeometryError):
        compute_rir(room, Point3(11, 1, 1), Point3(5, 1.5, 1.5))
    with pytest.raises(RoomGeometryError):
        compute_rir(room, Point3(5, 1.5, 1.5), Point3(5, 1.5, 1.5))
    with pytest.raises(RoomGeometryError):
        validate_mics(room, stereo_pair(Point3(0.05, 1, 1)))
    with pytest.raises(ValueError):
        RoomSpec(absorption=0.0)


def test_length_pads_and_truncates():
    src, mic = Point3(3, 3, 1.2), Point3(6, 4, 1.5)
    assert len(compute_rir(RoomSpec(), src, mic, length=50).taps) == 50
    assert len(compute_rir(RoomSpec(), src, mic, length=20000).taps) == 20000
