"""Time-varying stereo rendering of a moving point source.

The source signal is convolved block by block with the impulse responses at
each hop's position. Output blocks overlap by the crossfade length and are
blended with complementary raised-cosine weights, so a source that does not
move renders exactly like one long convolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import oaconvolve

from .room import RIR, MicArray, RoomSpec, compute_rir
from .trajectory import Trajectory, polar_to_cartesian


@dataclass
class StereoBuffer:
    left: np.ndarray
    right: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=float)
        self.right = np.asarray(self.right, dtype=float)
        if self.left.shape != self.right.shape or self.left.ndim != 1:
            raise ValueError("left and right channels must be 1-D and equally long")

    def __len__(self) -> int:
        return len(self.left)

    @property
    def duration_s(self) -> float:
        return len(self.left) / self.sample_rate_hz

    def as_array(self) -> np.ndarray:
        """Samples as an (n, 2) array, left first."""
        return np.stack([self.left, self.right], axis=1)

    @classmethod
    def from_array(cls, data: np.ndarray, rate: int) -> "StereoBuffer":
        data = np.asarray(data)
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError(f"expected (n, 2) samples, got shape {data.shape}")
        return cls(data[:, 0].copy(), data[:, 1].copy(), rate)

    @classmethod
    def zeros(cls, n: int, rate: int) -> "StereoBuffer":
        return cls(np.zeros(n), np.zeros(n), rate)

    def peak(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(max(np.abs(self.left).max(), np.abs(self.right).max()))

    def scaled(self, gain: float) -> "StereoBuffer":
        return StereoBuffer(self.left * gain, self.right * gain, self.sample_rate_hz)


@dataclass(frozen=True)
class RenderConfig:
    hop_s: float = 0.1
    xfade_s: float = 0.02
    method: str = "fft"
    event_peak: float = 0.5
    scene_peak: float = 0.9
    normalize: bool = True

    def __post_init__(self):
        if not self.hop_s > self.xfade_s > 0:
            raise ValueError("need hop_s > xfade_s > 0")
        if self.method not in ("fft", "direct"):
            raise ValueError("method must be 'fft' or 'direct'")


def convolve(x: np.ndarray, h: np.ndarray, mode: str = "full", method: str = "fft") -> np.ndarray:
    if method == "fft":
        return oaconvolve(x, h, mode=mode)
    if method == "direct":
        return np.convolve(x, h, mode=mode)
    raise ValueError(f"unknown convolution method {method!r}")


def crossfade_weights(n: int) -> np.ndarray:
    """Fade-in ramp ``w``; ``w`` and ``1 - w`` sum to one, ``sqrt`` of each is equal-power."""
    t = (np.arange(n) + 0.5) / n
    return np.sin(0.5 * np.pi * t) ** 2


def _samples(seconds: float, rate: int) -> int:
    return int(round(seconds * rate))


def crossfade_stitch(blocks: list[StereoBuffer], hop_s: float, xfade_s: float) -> StereoBuffer:
    """Overlap-add output blocks that start one hop apart.

    Block ``j`` starts at ``j * hop``. Where block ``j`` runs past the next
    block's start (by at most the crossfade length) the two are mixed with
    weights ``1 - w`` and ``w``; elsewhere samples pass through.
    """
    if not blocks:
        raise ValueError("no blocks to stitch")
    rate = blocks[0].sample_rate_hz
    if any(b.sample_rate_hz != rate for b in blocks):
        raise ValueError("blocks have inconsistent sample rates")
    if len(blocks) == 1:
        b = blocks[0]
        return StereoBuffer(b.left.copy(), b.right.copy(), rate)
    H, X = _samples(hop_s, rate), _samples(xfade_s, rate)
    if not H > X > 0:
        raise ValueError("need hop > crossfade > 0 samples")
    for j, b in enumerate(blocks[:-1]):
        if not H <= len(b) <= H + X:
            raise ValueError(f"block {j} has {len(b)} samples; expected between {H} and {H + X}")
    total = max(j * H + len(b) for j, b in enumerate(blocks))
    out = np.zeros((total, 2))
    ramp = crossfade_weights(X)
    last = len(blocks) - 1
    for j, b in enumerate(blocks):
        g = np.ones(len(b))
        if j > 0:
            k = min(X, len(b))
            g[:k] *= ramp[:k]
        if j < last:
            tail = len(b) - H
            g[H:] *= 1.0 - ramp[:tail]
        out[j * H:j * H + len(b)] += g[:, None] * b.as_array()
    return StereoBuffer.from_array(out, rate)


def hop_rirs(
    traj: Trajectory,
    n_blocks: int,
    room: RoomSpec,
    mics: MicArray,
) -> list[tuple[RIR, RIR]]:
    """(left, right) impulse responses at each hop, padded to a common length."""
    listener = mics.center
    cache: dict = {}
    pairs = []
    for j in range(n_blocks):
        pos = traj.position_at(j / (n_blocks - 1) if n_blocks > 1 else 0.0)
        if pos not in cache:
            src = polar_to_cartesian(pos, listener, room.dimensions_m)
            cache[pos] = (compute_rir(room, src, mics.left), compute_rir(room, src, mics.right))
        pairs.append(cache[pos])
    n = max(max(len(a.taps), len(b.taps)) for a, b in pairs)
    padded = {}
    out = []
    for a, b in pairs:
        key = (id(a), id(b))
        if key not in padded:
            padded[key] = (
                RIR(np.pad(a.taps, (0, n - len(a.taps))), a.sample_rate_hz),
                RIR(np.pad(b.taps, (0, n - len(b.taps))), b.sample_rate_hz),
            )
        out.append(padded[key])
    return out


def render_moving_source(
    audio: np.ndarray,
    traj: Trajectory,
    room: RoomSpec,
    mics: MicArray,
    hop_s: float = 0.1,
    xfade_s: float = 0.02,
    method: str = "fft",
) -> StereoBuffer:
    """Spatialise mono ``audio`` moving along ``traj`` into a stereo buffer.

    Parameters
    ----------
    audio : np.ndarray
        Mono samples at ``room.sample_rate_hz``.
    traj : Trajectory
        Path followed over the whole clip; hop ``j`` of ``n`` uses the
        position at fraction ``j / (n - 1)`` of the path.
    room, mics : RoomSpec, MicArray
        Geometry. The listener sits midway between the two microphones.
    hop_s, xfade_s : float
        Block hop and the overlap between consecutive output blocks.
    method : {"fft", "direct"}
        Convolution backend; both give the same result to rounding.

    Returns
    -------
    StereoBuffer
        ``len(audio) + len(rir) - 1`` samples per channel.
    """
    x = np.asarray(audio, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("audio must be a non-empty mono signal")
    if not hop_s > xfade_s > 0:
        raise ValueError("need hop_s > xfade_s > 0")
    fs = room.sample_rate_hz
    H, X = _samples(hop_s, fs), _samples(xfade_s, fs)
    n_blocks = -(-len(x) // H)
    rirs = hop_rirs(traj, n_blocks, room, mics)
    Lh = len(rirs[0][0].taps)
    n_out = len(x) + Lh - 1
    xp = np.concatenate([np.zeros(Lh - 1), x, np.zeros(Lh - 1)])
    blocks = []
    for j, (h_left, h_right) in enumerate(rirs):
        t0 = j * H
        t1 = n_out if j == n_blocks - 1 else min((j + 1) * H + X, n_out)
        seg = xp[t0:t1 + Lh - 1]
        blocks.append(StereoBuffer(
            convolve(seg, h_left.taps, "valid", method),
            convolve(seg, h_right.taps, "valid", method),
            fs,
        ))
    return crossfade_stitch(blocks, H / fs, X / fs)


def render_static(audio: np.ndarray, left: RIR, right: RIR, method: str = "fft") -> StereoBuffer:
    """Whole-signal convolution with one fixed impulse response pair."""
    x = np.asarray(audio, dtype=float)
    n = max(len(left.taps), len(right.taps))
    hl = np.pad(left.taps, (0, n - len(left.taps)))
    hr = np.pad(right.taps, (0, n - len(right.taps)))
    return StereoBuffer(convolve(x, hl, "full", method), convolve(x, hr, "full", method), left.sample_rate_hz)
