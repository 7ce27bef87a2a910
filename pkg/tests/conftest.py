import numpy as np
import pytest

from spatialqa.desk import make_desk_corpus
from spatialqa.events import EventClip, EventPool, write_manifest
from spatialqa.files import write_wav


@pytest.fixture(scope="session")
def desk_manifest(tmp_path_factory):
    return make_desk_corpus(tmp_path_factory.mktemp("desk"), seed=0)


@pytest.fixture
def make_pool(tmp_path):
    """Build a pool of noise clips: ``make_pool([(id, label, duration, score), ...])``."""

    def build(rows, rate=16000):
        rng = np.random.default_rng(0)
        clips = []
        for ev_id, label, duration, score in rows:
            path = tmp_path / f"{ev_id}.wav"
            write_wav(path, 0.3 * rng.standard_normal(int(round(duration * rate))), rate)
            clips.append(EventClip(ev_id, label, path, duration, score, 0.0, duration))
        pool = EventPool(tuple(clips), tmp_path / "manifest.csv")
        write_manifest(pool, tmp_path / "manifest.csv")
        return pool

    return build
