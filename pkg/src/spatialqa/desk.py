"""Synthetic tone/noise corpus for end-to-end desk runs.

``python -m spatialqa.desk OUT_DIR`` writes twelve mono WAV clips and a
manifest that the pipeline can consume directly.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.signal import butter, sosfilt

from .evaluation import Condition, PredictionRecord
from .events import EventClip, EventPool, write_manifest
from .files import write_wav
from .qa import QAItem

# Label names avoid words that appear in question templates.
DESK_EVENTS = (
    ("Croak", "tone", 180.0),
    ("Chime", "tone", 880.0),
    ("Hum", "tone", 120.0),
    ("Whistle", "tone", 1500.0),
    ("Buzz", "tone", 240.0),
    ("Bell", "tone", 660.0),
    ("Waves", "noise", (200.0, 1200.0)),
    ("Rain", "noise", (1500.0, 6000.0)),
    ("Hiss", "noise", (3000.0, 7000.0)),
    ("Rumble", "noise", (40.0, 250.0)),
    ("Wind", "noise", (300.0, 900.0)),
    ("Crackle", "noise", (800.0, 4000.0)),
)


def synth_clip(kind: str, param, duration_s: float, rate: int, rng) -> np.ndarray:
    n = int(round(duration_s * rate))
    t = np.arange(n) / rate
    if kind == "tone":
        f0 = float(param)
        x = sum(np.sin(2 * np.pi * f0 * k * t) / k for k in (1, 2, 3))
        x *= 0.6 + 0.4 * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * t)
    else:
        lo, hi = param
        sos = butter(4, [lo, hi], btype="bandpass", fs=rate, output="sos")
        x = sosfilt(sos, rng.standard_normal(n))
    ramp = min(n // 2, int(0.02 * rate))
    env = np.ones(n)
    env[:ramp] = np.linspace(0, 1, ramp)
    env[n - ramp:] = np.linspace(1, 0, ramp)
    x = x * env
    return 0.5 * x / np.abs(x).max()


def make_desk_corpus(out_dir, seed: int = 0, rate: int = 16000) -> Path:
    """Write the clips and ``manifest.csv`` under ``out_dir``; returns the manifest path."""
    out_dir = Path(out_dir)
    audio_dir = out_dir / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    clips = []
    for i, (label, kind, param) in enumerate(DESK_EVENTS):
        duration = float(np.round(rng.uniform(4.0, 9.0), 3))
        path = audio_dir / f"ev{i:02d}_{label.lower()}.wav"
        write_wav(path, synth_clip(kind, param, duration, rate, rng), rate)
        score = float(np.round(rng.uniform(0.5, 0.95), 3))
        clips.append(EventClip(f"ev{i:02d}", label, path, duration, score, 0.0, duration))
    manifest = out_dir / "manifest.csv"
    write_manifest(EventPool(tuple(clips)), manifest)
    return manifest


def always_yes_predictions(items: list[QAItem], condition: Condition) -> list[PredictionRecord]:
    """Scripted baseline answering "Yes" to everything."""
    return [PredictionRecord(it.id, "Yes", condition) for it in items]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m spatialqa.desk", description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    manifest = make_desk_corpus(args.out_dir, args.seed)
    print(json.dumps({"command": "desk", "manifest": str(manifest), "events": len(DESK_EVENTS)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
