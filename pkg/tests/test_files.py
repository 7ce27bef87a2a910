import numpy as np
import pytest

from spatialqa.files import atomic_path, read_jsonl, read_wav, resample, slug, write_jsonl, write_wav


def test_float32_wav_round_trip_is_exact(tmp_path):
    x = np.random.default_rng(1).uniform(-1, 1, size=(1000, 2)).astype(np.float32).astype(float)
    write_wav(tmp_path / "a.wav", x, 16000, fmt="float32")
    y, rate = read_wav(tmp_path / "a.wav")
    assert rate == 16000
    assert np.array_equal(x, y)


def test_pcm16_round_trip_within_quantization(tmp_path):
    x = np.linspace(-0.9, 0.9, 500)
    write_wav(tmp_path / "a.wav", x, 8000)
    y, _ = read_wav(tmp_path / "a.wav")
    assert np.max(np.abs(x - y)) < 2 / 32768


def test_unknown_wav_format_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown WAV format"):
        write_wav(tmp_path / "a.wav", np.zeros(4), 8000, fmt="mp3")


def test_atomic_path_leaves_no_partial_file(tmp_path):
    dest = tmp_path / "out.txt"
    with pytest.raises(RuntimeError):
        with atomic_path(dest) as tmp:
            tmp.write_text("half")
            raise RuntimeError("interrupted")
    assert not dest.exists()
    assert list(tmp_path.iterdir()) == []


def test_jsonl_round_trip_and_error_location(tmp_path):
    rows = [{"a": 1}, {"b": "é"}]
    write_jsonl(tmp_path / "r.jsonl", rows)
    assert read_jsonl(tmp_path / "r.jsonl") == rows
    (tmp_path / "bad.jsonl").write_text('{"a": 1}\n{oops\n')
    with pytest.raises(ValueError, match="bad.jsonl:2"):
        read_jsonl(tmp_path / "bad.jsonl")


def test_resample_length_and_identity():
    x = np.random.default_rng(0).standard_normal(4410)
    assert resample(x, 16000, 16000) is x
    assert len(resample(x, 44100, 16000)) == 1600


def test_slug():
    assert slug("Church bell / ringing") == "church_bell_ringing"
    assert slug("!!!") == "x"
