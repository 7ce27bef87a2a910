"""Shoebox image-source simulation of room impulse responses."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .trajectory import Point3

FRACTIONAL_DELAY_TAPS = 81


class RoomGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class RoomSpec:
    dimensions_m: tuple[float, float, float] = (10.0, 8.0, 3.0)
    absorption: float = 0.25
    max_order: int = 2
    speed_of_sound_mps: float = 343.0
    sample_rate_hz: int = 16000

    def __post_init__(self):
        object.__setattr__(self, "dimensions_m", tuple(float(v) for v in self.dimensions_m))
        if len(self.dimensions_m) != 3 or min(self.dimensions_m) <= 0:
            raise ValueError("room dimensions must be three positive lengths")
        if not 0.0 < self.absorption <= 1.0:
            raise ValueError("absorption must lie in (0, 1]")
        if self.max_order < 0 or int(self.max_order) != self.max_order:
            raise ValueError("max_order must be a non-negative integer")
        if self.speed_of_sound_mps <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("speed of sound and sample rate must be positive")

    @property
    def reflection_coefficient(self) -> float:
        # Energy-absorption convention: pressure reflection = sqrt(1 - alpha).
        return float(np.sqrt(1.0 - self.absorption))

    def contains(self, p) -> bool:
        return all(0.0 < c < L for c, L in zip(p, self.dimensions_m))


@dataclass(frozen=True)
class MicArray:
    left: Point3
    right: Point3

    @property
    def center(self) -> Point3:
        return Point3(*((a + b) / 2 for a, b in zip(self.left, self.right)))


DEFAULT_LISTENER = Point3(5.0, 1.5, 1.5)


def stereo_pair(listener: Point3 = DEFAULT_LISTENER, spacing_m: float = 0.18) -> MicArray:
    """Two omni mics on the x axis, centred on the listener (who faces +y)."""
    h = spacing_m / 2
    return MicArray(Point3(listener.x - h, listener.y, listener.z), Point3(listener.x + h, listener.y, listener.z))


def validate_mics(room: RoomSpec, mics: MicArray) -> None:
    if not (room.contains(mics.left) and room.contains(mics.right)):
        raise RoomGeometryError("microphones must lie inside the room")
    if not mics.left.x < mics.right.x:
        raise RoomGeometryError("left microphone must have the smaller x coordinate")


@dataclass(frozen=True)
class RIR:
    taps: np.ndarray
    sample_rate_hz: int


def _lattice(max_order: int) -> np.ndarray:
    rng = range(-max_order, max_order + 1)
    idx = [m for m in itertools.product(rng, rng, rng) if sum(map(abs, m)) <= max_order]
    return np.array(idx, dtype=int).reshape(-1, 3)


def image_sources(room: RoomSpec, src, max_order: int | None = None) -> list[tuple[Point3, int]]:
    """All mirror images whose per-axis reflection counts sum to at most ``max_order``.

    Along an axis of length L, image index m sits at ``m*L + s`` for even m and
    ``m*L + (L - s)`` for odd m, having bounced |m| times.
    """
    if max_order is None:
        max_order = room.max_order
    if not room.contains(src):
        raise RoomGeometryError(f"source {tuple(src)} is not strictly inside the room")
    pos, counts = _image_arrays(room, np.asarray(src, dtype=float), max_order)
    return [(Point3(*map(float, p)), int(c)) for p, c in zip(pos, counts)]


def _image_arrays(room: RoomSpec, src: np.ndarray, max_order: int) -> tuple[np.ndarray, np.ndarray]:
    m = _lattice(max_order)
    L = np.asarray(room.dimensions_m)
    odd = (m % 2).astype(bool)
    pos = m * L + np.where(odd, L - src, src)
    return pos, np.abs(m).sum(axis=1)


def _hann_sinc(offsets: np.ndarray, taps: int = FRACTIONAL_DELAY_TAPS) -> np.ndarray:
    # offsets = n - tau; Hann window spans `taps` samples centred on the delay.
    w = 0.5 * (1.0 + np.cos(2.0 * np.pi * offsets / taps))
    w[np.abs(offsets) > taps / 2] = 0.0
    return w * np.sinc(offsets)


def compute_rir(room: RoomSpec, src, mic, length: int | None = None) -> RIR:
    """Impulse response from ``src`` to an omni receiver at ``mic``.

    Each image contributes ``beta**k / d`` (k reflections, d metres) at delay
    ``d / c * fs`` samples, realised with an 81-tap Hann-windowed sinc.
    Taps falling before sample 0 are dropped. ``length`` pads or truncates.
    """
    src = np.asarray(src, dtype=float)
    mic = np.asarray(mic, dtype=float)
    if not room.contains(src) or not room.contains(mic):
        raise RoomGeometryError("source and microphone must lie strictly inside the room")
    if np.allclose(src, mic, rtol=0, atol=1e-9):
        raise RoomGeometryError("source coincides with the microphone")
    pos, counts = _image_arrays(room, src, room.max_order)
    dist = np.linalg.norm(pos - mic, axis=1)
    beta = room.reflection_coefficient
    amp = beta ** counts / dist
    keep = amp > 0
    dist, amp = dist[keep], amp[keep]
    fs = room.sample_rate_hz
    tau = dist / room.speed_of_sound_mps * fs
    half = FRACTIONAL_DELAY_TAPS // 2
    centre = np.round(tau).astype(int)
    n = centre[:, None] + np.arange(-half, half + 1)[None, :]
    vals = amp[:, None] * _hann_sinc(n - tau[:, None])
    n_out = int(centre.max()) + half + 1
    if length is None:
        length = n_out
    taps = np.zeros(max(length, n_out))
    ok = n >= 0
    np.add.at(taps, n[ok], vals[ok])
    return RIR(taps[:length], fs)
