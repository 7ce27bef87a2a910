"""Query-conditioned temporal masking of rendered scenes."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .files import atomic_path
from .render import StereoBuffer
from .scene import SceneMetadata

MASK_MODES = ("no_mask", "gt", "scored")

# Label words too generic to identify an event on their own.
STOPWORDS = frozenset({
    "a", "an", "the", "of", "and", "or", "in", "on", "at", "to", "for", "with", "by", "from",
    "sound", "sounds", "noise", "audio", "source", "event",
})


class SpanError(ValueError):
    pass


@dataclass(frozen=True)
class Span:
    start_s: float
    end_s: float

    def __post_init__(self):
        if not 0.0 <= self.start_s < self.end_s:
            raise SpanError(f"invalid span [{self.start_s}, {self.end_s}]")


@dataclass(frozen=True)
class MaskMode:
    kind: str = "no_mask"
    threshold: float = 0.8
    median_window_s: float = 0.3
    frame_rate_hz: float = 10.0

    def __post_init__(self):
        if self.kind not in MASK_MODES:
            raise ValueError(f"mask mode must be one of {MASK_MODES}, got {self.kind!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.median_window_s <= 0 or self.frame_rate_hz <= 0:
            raise ValueError("median window and frame rate must be positive")

    @property
    def window_frames(self) -> int:
        w = max(1, int(round(self.median_window_s * self.frame_rate_hz)))
        return w if w % 2 else w + 1


def _word_pattern(text: str) -> re.Pattern:
    return re.compile(r"(?<!\w)" + re.escape(text.casefold()) + r"(?!\w)")


def extract_query_events(question: str, scene_labels: list[str]) -> list[str]:
    """Labels whose full text or any distinctive word appears as a whole word in ``question``."""
    if not scene_labels:
        raise ValueError("scene has no labels")
    q = question.casefold()
    found = []
    for label in scene_labels:
        words = [w for w in re.findall(r"\w+", label.casefold()) if w not in STOPWORDS]
        if _word_pattern(label).search(q) or any(_word_pattern(w).search(q) for w in words):
            found.append(label)
    return found


def median_binary(x: np.ndarray, window: int) -> np.ndarray:
    """Sliding median of a 0/1 vector with reflection at the edges (odd ``window``)."""
    x = np.asarray(x, dtype=np.int8)
    half = window // 2
    if half == 0:
        return x.copy()
    padded = np.pad(x, half, mode="reflect") if len(x) > 1 else np.repeat(x, 2 * half + 1)
    counts = np.convolve(padded, np.ones(window, dtype=int), mode="valid")
    return (counts > half).astype(np.int8)


def runs_to_spans(mask: np.ndarray, frame_rate_hz: float) -> list[Span]:
    m = np.concatenate([[0], np.asarray(mask, dtype=np.int8), [0]])
    d = np.diff(m)
    starts, ends = np.flatnonzero(d == 1), np.flatnonzero(d == -1)
    return [Span(float(s / frame_rate_hz), float(e / frame_rate_hz)) for s, e in zip(starts, ends)]


def scores_to_spans(scores, mode: MaskMode) -> list[Span]:
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("score vector must be a non-empty 1-D sequence")
    binary = (scores >= mode.threshold).astype(np.int8)
    return runs_to_spans(median_binary(binary, mode.window_frames), mode.frame_rate_hz)


def merge_spans(spans: list[Span]) -> list[Span]:
    out: list[Span] = []
    for s in sorted(spans, key=lambda s: (s.start_s, s.end_s)):
        if out and s.start_s <= out[-1].end_s:
            if s.end_s > out[-1].end_s:
                out[-1] = Span(out[-1].start_s, s.end_s)
        else:
            out.append(s)
    return out


def apply_mask(audio: StereoBuffer, spans: list[Span]) -> StereoBuffer:
    """Zero every sample outside the union of ``spans``; samples inside are untouched.

    Span ``[s, e)`` keeps samples ``round(s*fs)`` up to but excluding ``round(e*fs)``.
    """
    if not spans:
        return StereoBuffer(audio.left.copy(), audio.right.copy(), audio.sample_rate_hz)
    fs = audio.sample_rate_hz
    n = len(audio)
    keep = np.zeros(n, dtype=bool)
    for s in spans:
        a, b = int(round(s.start_s * fs)), int(round(s.end_s * fs))
        if b > n:
            raise SpanError(f"span [{s.start_s}, {s.end_s}] runs past the clip end at {n / fs} s")
        keep[a:b] = True
    return StereoBuffer(np.where(keep, audio.left, 0.0), np.where(keep, audio.right, 0.0), fs)


def gt_spans(meta: SceneMetadata, relevant_labels) -> list[Span]:
    labels = set(meta.labels)
    unknown = [r for r in relevant_labels if r not in labels]
    if unknown:
        raise KeyError(f"labels {unknown} not in scene {meta.scene_id}")
    return merge_spans([Span(meta.event(r).onset_s, meta.event(r).offset_s) for r in relevant_labels])


def oracle_scores(solo: StereoBuffer, frame_rate_hz: float, duration_s: float) -> np.ndarray:
    """Framewise RMS of a solo-rendered event, scaled so the loudest frame is one."""
    fs = solo.sample_rate_hz
    hop = fs / frame_rate_hz
    n_frames = int(np.ceil(round(duration_s * frame_rate_hz, 9)))
    mono = np.sqrt(0.5 * (solo.left ** 2 + solo.right ** 2))
    out = np.zeros(n_frames)
    for i in range(n_frames):
        a, b = int(round(i * hop)), int(round((i + 1) * hop))
        seg = mono[a:b]
        if seg.size:
            out[i] = np.sqrt(np.mean(seg ** 2))
    peak = out.max()
    return out / peak if peak > 0 else out


def write_scores(path, scores, frame_rate_hz: float) -> None:
    with atomic_path(path) as tmp:
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(f"# frame_rate_hz={frame_rate_hz:g}\nframe_index,score\n")
            for i, s in enumerate(scores):
                f.write(f"{i},{float(s):.6f}\n")


def read_scores(path) -> tuple[np.ndarray, float]:
    """Scores and declared frame rate; frames must be contiguous from zero."""
    path = Path(path)
    rate = None
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = re.match(r"#\s*frame_rate_hz\s*=\s*([0-9.eE+-]+)", line)
                if m:
                    rate = float(m.group(1))
                continue
            if line.replace(" ", "") == "frame_index,score":
                continue
            try:
                idx, score = line.split(",")
                rows.append((int(idx), float(score)))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected 'frame_index,score'") from None
    if rate is None:
        raise ValueError(f"{path}: missing '# frame_rate_hz=' header")
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: frame indices must run 0..n-1 without gaps")
    scores = np.array([r[1] for r in rows])
    if scores.size and (scores.min() < 0 or scores.max() > 1):
        raise ValueError(f"{path}: scores must lie in [0, 1]")
    return scores, rate
