"""Atomic file output and WAV helpers shared by the pipeline stages."""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from math import gcd
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly


@contextmanager
def atomic_path(path: str | os.PathLike) -> Iterator[Path]:
    """Yield a temp path next to ``path``; rename over ``path`` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    tmp_path = Path(tmp)
    try:
        yield tmp_path
        os.replace(tmp_path, path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def write_text(path, text: str) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(text, encoding="utf-8")


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def write_jsonl(path, rows: Iterable[dict]) -> None:
    write_text(path, "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows))


def read_jsonl(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
    return rows


def wav_channels(path) -> int:
    """Channel count of a WAV file without decoding the samples."""
    _, data = wavfile.read(path, mmap=True)
    return 1 if data.ndim == 1 else data.shape[1]


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a WAV file as float64 in [-1, 1]; shape (n,) or (n, channels)."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        out = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        out = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        out = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.floating):
        out = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported WAV sample type {data.dtype}")
    return out, int(rate)


def write_wav(path, samples: np.ndarray, rate: int, fmt: str = "pcm16") -> None:
    """Write float samples (n,) or (n, channels) as PCM16 or float32 WAV."""
    samples = np.asarray(samples, dtype=np.float64)
    if fmt == "pcm16":
        data = np.clip(np.round(samples * 32767.0), -32768, 32767).astype(np.int16)
    elif fmt == "float32":
        data = samples.astype(np.float32)
    else:
        raise ValueError(f"unknown WAV format {fmt!r} (use 'pcm16' or 'float32')")
    with atomic_path(path) as tmp:
        wavfile.write(tmp, int(rate), data)


def resample(x: np.ndarray, rate_in: int, rate_out: int) -> np.ndarray:
    if rate_in == rate_out:
        return x
    g = gcd(int(rate_in), int(rate_out))
    return resample_poly(x, rate_out // g, rate_in // g)


def slug(text: str) -> str:
    out = "".join(c.lower() if c.isalnum() else "_" for c in text)
    return "_".join(p for p in out.split("_") if p) or "x"
