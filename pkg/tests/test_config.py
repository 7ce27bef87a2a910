import pytest

from spatialqa.config import ConfigError, config_from_dict, load_config


def test_defaults():
    cfg = load_config()
    assert cfg.sample_rate_hz == 16000
    assert cfg.frame_rate_hz == 10.0
    assert cfg.scene.overlap_budget == 0.3
    assert cfg.mask_mode().kind == "no_mask"
    assert cfg.mask_mode("gt").window_frames == 3
    assert cfg.scene.room == cfg.room
    assert cfg.judge.min_similarity == 4.0


def test_toml_overrides(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(
        "[room]\ndimensions_m = [6, 5, 3]\nmax_order = 1\n"
        "[scene]\noverlap_budget = 0\n"
        "[trajectory]\nallow_combined = true\n"
        "[mask]\nmode = 'gt'\nthreshold = 0.7\n"
        "[run]\nmaster_seed = 9\nscenes = 4\n"
    )
    cfg = load_config(path)
    assert cfg.room.dimensions_m == (6.0, 5.0, 3.0)
    assert cfg.scene.room.max_order == 1
    assert cfg.scene.overlap_budget == 0.0
    assert "sweep_lr" in cfg.scene.trajectory.dynamic_kinds()
    assert cfg.mask_mode().threshold == 0.7
    assert (cfg.run.master_seed, cfg.run.scenes) == (9, 4)


def test_problems_are_itemized():
    with pytest.raises(ConfigError) as err:
        config_from_dict({
            "roomz": {},
            "room": {"absorption": 2.0},
            "scene": {"colour": 1},
            "mask": {"mode": "tf"},
            "run": {"jobs": 0},
        })
    problems = err.value.problems
    assert len(problems) == 5
    joined = "\n".join(problems)
    for needle in ("[roomz]", "absorption", "colour", "mask mode", "jobs"):
        assert needle in joined


def test_listener_outside_room():
    with pytest.raises(ConfigError, match="mics"):
        config_from_dict({"room": {"dimensions_m": [3, 3, 3]}, "mics": {"listener": [5.0, 1.0, 1.5]}})


def test_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[room\n")
    with pytest.raises(ConfigError):
        load_config(bad)
