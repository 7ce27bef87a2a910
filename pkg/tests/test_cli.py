import json
import subprocess
import sys

import numpy as np
import pytest

from spatialqa.cli import main
from spatialqa.desk import always_yes_predictions
from spatialqa.evaluation import Condition
from spatialqa.files import read_jsonl, read_wav, write_jsonl
from spatialqa.qa import QAItem


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    line = capsys.readouterr().out.strip().splitlines()[-1]
    return code, json.loads(line)


def pipeline(capsys, desk_manifest, out, scenes=3, seed=5, jobs=1):
    for cmd in (["synthesize", "--manifest", desk_manifest, "--scenes", scenes], ["trends"], ["gen-qa"]):
        code, summary = run(capsys, *cmd, "--out", out, "--seed", seed, "--jobs", jobs)
        assert code == 0 and summary["ok"], summary


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_runs_are_byte_identical(capsys, desk_manifest, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    pipeline(capsys, desk_manifest, a)
    pipeline(capsys, desk_manifest, b, jobs=2)
    ta, tb = _tree(a), _tree(b)
    assert ta.keys() == tb.keys()
    assert all(ta[k] == tb[k] for k in ta)
    assert any(k.endswith(".wav") for k in ta) and "qa.jsonl" in ta
    c = tmp_path / "c"
    pipeline(capsys, desk_manifest, c, seed=6)
    assert _tree(c)["qa.jsonl"] != ta["qa.jsonl"]


def test_scene_outputs(capsys, desk_manifest, tmp_path):
    pipeline(capsys, desk_manifest, tmp_path, scenes=2)
    for sid in ("scene_0000", "scene_0001"):
        data, rate = read_wav(tmp_path / "scenes" / f"{sid}.wav")
        assert data.shape == (160000, 2) and rate == 16000
        meta = json.loads((tmp_path / "scenes" / f"{sid}.json").read_text())
        labels = [e["label"] for e in meta["events"]]
        assert sorted(p.stem for p in (tmp_path / "scores" / sid).glob("*.csv")) == sorted(x.lower() for x in labels)
    items = [QAItem.from_json(r) for r in read_jsonl(tmp_path / "qa.jsonl")]
    assert items and all(not it.problems() for it in items)


def test_masking_modes(capsys, desk_manifest, tmp_path):
    pipeline(capsys, desk_manifest, tmp_path, scenes=2)
    code, gt = run(capsys, "mask", "--mode", "gt", "--out", tmp_path)
    assert code == 0 and gt["masked_files"] > 0 and gt["fallback_scenes"] == 0
    for entry in read_jsonl(tmp_path / "masks.gt.jsonl"):
        if not entry["spans"]:
            continue
        data, rate = read_wav(entry["audio"])
        orig, _ = read_wav(tmp_path / "scenes" / f"{entry['scene_id']}.wav")
        keep = np.zeros(len(data), bool)
        for s, e in entry["spans"]:
            keep[int(round(s * rate)):int(round(e * rate))] = True
        assert np.array_equal(data[keep], orig[keep]) and not data[~keep].any()
    code, scored = run(capsys, "mask", "--mode", "scored", "--out", tmp_path)
    assert code == 0 and scored["fallback_scenes"] == 0

    for f in (tmp_path / "scores" / "scene_0001").glob("*.csv"):
        f.unlink()
    code, fb = run(capsys, "mask", "--mode", "scored", "--out", tmp_path)
    assert code == 0 and fb["fallback_scenes"] == 1
    entries = [e for e in read_jsonl(tmp_path / "masks.scored.jsonl") if e["scene_id"] == "scene_0001"]
    assert entries and all(e["spans"] == [] and e["audio"].endswith("scene_0001.wav") for e in entries
                           if e.get("fallback"))


def test_evaluate_and_prompts(capsys, desk_manifest, tmp_path):
    pipeline(capsys, desk_manifest, tmp_path, scenes=2)
    items = [QAItem.from_json(r) for r in read_jsonl(tmp_path / "qa.jsonl")]
    preds = always_yes_predictions(items, Condition("no_mask", False))
    write_jsonl(tmp_path / "preds.jsonl", [p.to_json() for p in preds])
    code, summary = run(capsys, "evaluate", "--out", tmp_path, "--predictions", tmp_path / "preds.jsonl")
    assert code == 0 and summary["conditions"] == ["no_mask/non_thinking"]
    report = json.loads((tmp_path / "report.json").read_text())
    yn = [it for it in items if it.type == "yes_no"]
    frac = 100 * sum(it.answer == "Yes" for it in yn) / len(yn)
    assert report["accuracy"]["no_mask/non_thinking"]["type:yes_no"] == pytest.approx(frac)
    assert (tmp_path / "report.txt").read_text().startswith("Question Type")

    code, summary = run(capsys, "emit-prompts", "--out", tmp_path)
    assert code == 0 and summary["prompts"] == 2
    code, summary = run(capsys, "emit-prompts", "--kind", "open", "--out", tmp_path,
                        "--predictions", tmp_path / "preds.jsonl")
    assert code == 0 and summary["prompts"] == sum(it.type == "open" for it in items)


def test_missing_gold_file_is_reported(capsys, tmp_path):
    missing = tmp_path / "nowhere" / "gold.jsonl"
    code, summary = run(capsys, "evaluate", "--out", tmp_path, "--gold", missing, "--predictions", tmp_path / "p.jsonl")
    assert code == 1 and not summary["ok"]
    assert str(missing) in summary["error"]


def test_bad_config_is_reported(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[room]\nabsorption = 5\n")
    code, summary = run(capsys, "trends", "--config", cfg, "--out", tmp_path)
    assert code == 1 and "absorption" in summary["error"]


def test_unknown_subcommand_and_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spatialqa.cli", "transmogrify"], capture_output=True, text=True)
    assert proc.returncode == 2 and "invalid choice" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "spatialqa.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("spatialqa")
