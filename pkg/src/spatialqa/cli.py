"""Command-line pipeline: filter events, synthesize scenes, extract trends,
generate QA, mask audio, evaluate predictions and emit LLM prompts.

Every subcommand prints one JSON summary line on stdout and logs to stderr.
Output layout under ``--out``::

    manifest.filtered.csv
    scenes/<scene_id>.wav, scenes/<scene_id>.json
    scores/<scene_id>/<label>.csv        (oracle framewise scores)
    trends/<scene_id>.json
    qa.jsonl, qa_waivers.json
    scenes/<scene_id>.<mode>.<labels>.masked.wav, masks.<mode>.jsonl
    report.json, report.txt
    prompts/...
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, PipelineConfig, load_config
from .evaluation import EvaluationError, PredictionRecord, aggregate, emit_judge_prompt, render_table
from .events import ManifestError, filter_events, load_manifest, write_manifest
from .files import read_jsonl, read_wav, slug, write_json, write_jsonl, write_text, write_wav
from .masking import (
    MaskMode,
    Span,
    apply_mask,
    gt_spans,
    merge_spans,
    oracle_scores,
    read_scores,
    scores_to_spans,
    write_scores,
)
from .qa import QAItem, emit_generation_prompt, generate_qa
from .render import StereoBuffer
from .scene import CompositionError, SceneMetadata, compose_scene, realize_scene, scene_seed
from .trajectory import OutsideRoomError
from .trends import extract_frame_trends, trends_from_json, trends_to_json

log = logging.getLogger("spatialqa")

COMPOSE_RETRIES = 50
WAV_FORMAT = "float32"


class CLIError(RuntimeError):
    pass


def _jobs(args) -> int:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get("SPATIALQA_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CLIError(f"SPATIALQA_JOBS must be an integer, got {env!r}") from None
    return 1


def _map(fn, tasks: list, jobs: int) -> list:
    """Run ``fn`` over tasks; results come back in task order regardless of ``jobs``."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise CLIError(f"{what} not found: {path}")
    return path


def _manifest_path(args, cfg: PipelineConfig) -> Path:
    p = args.manifest or cfg.run.manifest
    if not p:
        raise CLIError("no manifest given (use --manifest or [run] manifest)")
    return _require(Path(p), "manifest")


def _scene_files(out: Path) -> list[Path]:
    files = sorted((out / "scenes").glob("*.json"))
    if not files:
        raise CLIError(f"no scene metadata under {out / 'scenes'}; run synthesize first")
    return files


def _load_scenes(out: Path) -> dict[str, SceneMetadata]:
    scenes = {}
    for f in _scene_files(out):
        meta = SceneMetadata.from_dict(json.loads(f.read_text(encoding="utf-8")))
        scenes[meta.scene_id] = meta
    return scenes


# -- filter-events -----------------------------------------------------------

def cmd_filter_events(args, cfg: PipelineConfig) -> dict:
    src = _manifest_path(args, cfg)
    pool = load_manifest(src)
    kept = filter_events(pool, cfg.events.min_duration_s, cfg.events.min_score)
    dest = args.out / "manifest.filtered.csv"
    write_manifest(kept, dest)
    log.info("kept %d of %d events", len(kept), len(pool))
    return {"input": len(pool), "kept": len(kept), "manifest": str(dest)}


# -- synthesize ----------------------------------------------------------------

def _synth_one(task) -> dict:
    index, manifest, cfg, out, master = task
    pool = filter_events(load_manifest(manifest), cfg.events.min_duration_s, cfg.events.min_score)
    scene_id = f"scene_{index:04d}"
    spec = None
    for attempt in range(COMPOSE_RETRIES):
        seed = np.random.SeedSequence([master, index, attempt])
        try:
            spec = compose_scene(pool, seed, cfg.scene, scene_id)
            break
        except (CompositionError, OutsideRoomError) as exc:
            log.debug("%s attempt %d: %s", scene_id, attempt, exc)
    if spec is None:
        raise CompositionError(f"{scene_id}: no feasible composition after {COMPOSE_RETRIES} attempts")
    solos: dict[str, StereoBuffer] = {}
    audio, meta = realize_scene(spec, pool, cfg.room, cfg.scene.mics, cfg.render, cfg.frame_rate_hz, solos)
    write_wav(out / "scenes" / f"{scene_id}.wav", audio.as_array(), audio.sample_rate_hz, WAV_FORMAT)
    for label, solo in sorted(solos.items()):
        write_scores(out / "scores" / scene_id / f"{slug(label)}.csv",
                     oracle_scores(solo, cfg.frame_rate_hz, spec.duration_s), cfg.frame_rate_hz)
    write_json(out / "scenes" / f"{scene_id}.json", meta.to_dict())
    return {"scene_id": scene_id, "events": meta.labels, "overlap": meta.overlap_flag}


def cmd_synthesize(args, cfg: PipelineConfig) -> dict:
    manifest = _manifest_path(args, cfg)
    n = args.scenes if args.scenes is not None else cfg.run.scenes
    if n < 1:
        raise CLIError("--scenes must be >= 1")
    master = args.seed if args.seed is not None else cfg.run.master_seed
    pool = filter_events(load_manifest(manifest), cfg.events.min_duration_s, cfg.events.min_score)
    if len(pool) == 0:
        raise CLIError("no events survive the quality filter")
    tasks = [(i, manifest, cfg, args.out, master) for i in range(n)]
    results = _map(_synth_one, tasks, _jobs(args))
    write_jsonl(args.out / "scenes.jsonl", results)
    return {"scenes": len(results), "seed": master, "out": str(args.out / "scenes")}


# -- trends -------------------------------------------------------------------

def cmd_trends(args, cfg: PipelineConfig) -> dict:
    scenes = _load_scenes(args.out)
    for sid, meta in scenes.items():
        write_json(args.out / "trends" / f"{sid}.json", trends_to_json(extract_frame_trends(meta, cfg.trends)))
    return {"scenes": len(scenes), "out": str(args.out / "trends")}


def _load_trends(out: Path, sid: str):
    path = _require(out / "trends" / f"{sid}.json", "trends file")
    return trends_from_json(json.loads(path.read_text(encoding="utf-8")))


# -- gen-qa ---------------------------------------------------------------------

def cmd_gen_qa(args, cfg: PipelineConfig) -> dict:
    scenes = _load_scenes(args.out)
    master = args.seed if args.seed is not None else cfg.run.master_seed
    rows, waivers = [], {}
    for i, (sid, meta) in enumerate(scenes.items()):
        qa = generate_qa(_load_trends(args.out, sid), meta, scene_seed(master, i), cfg.qa)
        rows += [it.to_json() for it in qa.items]
        if qa.waivers:
            waivers[sid] = qa.waivers
    write_jsonl(args.out / "qa.jsonl", rows)
    write_json(args.out / "qa_waivers.json", waivers)
    yes = sum(r["answer"] == "Yes" for r in rows if r["type"] == "yes_no")
    n_yn = sum(r["type"] == "yes_no" for r in rows)
    return {"items": len(rows), "scenes": len(scenes), "waived_scenes": len(waivers),
            "yes_fraction": yes / n_yn if n_yn else None}


def _load_gold(path: Path) -> dict[str, QAItem]:
    _require(path, "gold QA file")
    return {it.id: it for it in (QAItem.from_json(r) for r in read_jsonl(path))}


# -- mask -------------------------------------------------------------------------

def cmd_mask(args, cfg: PipelineConfig) -> dict:
    mode = cfg.mask_mode(args.mode)
    scenes = _load_scenes(args.out)
    gold = _load_gold(args.gold or args.out / "qa.jsonl")
    index, written = [], {}
    fallbacks = set()
    audio_cache: dict[str, StereoBuffer] = {}
    for item in gold.values():
        meta = scenes.get(item.scene_id)
        if meta is None:
            raise CLIError(f"{item.id}: scene {item.scene_id!r} has no metadata")
        original = args.out / "scenes" / f"{meta.scene_id}.wav"
        entry = {"qa_id": item.id, "scene_id": meta.scene_id, "mode": mode.kind, "spans": [], "audio": str(original)}
        if mode.kind == "no_mask" or not item.relevant_events:
            index.append(entry)
            continue
        if mode.kind == "gt":
            spans = gt_spans(meta, item.relevant_events)
        else:
            spans = []
            missing = False
            for label in item.relevant_events:
                path = args.out / "scores" / meta.scene_id / f"{slug(label)}.csv"
                if not path.exists():
                    missing = True
                    break
                scores, rate = read_scores(path)
                spans += scores_to_spans(scores, MaskMode(mode.kind, mode.threshold, mode.median_window_s, rate))
            if missing:
                fallbacks.add(meta.scene_id)
                entry["fallback"] = "no_mask"
                index.append(entry)
                continue
        spans = [s for s in spans if s.start_s < meta.duration_s]
        spans = merge_spans([Span(s.start_s, min(s.end_s, meta.duration_s)) for s in spans])
        entry["spans"] = [[s.start_s, s.end_s] for s in spans]
        if spans:
            key = (meta.scene_id, tuple(sorted(item.relevant_events)))
            if key not in written:
                if meta.scene_id not in audio_cache:
                    data, rate = read_wav(_require(original, "scene audio"))
                    audio_cache[meta.scene_id] = StereoBuffer.from_array(data, rate)
                masked = apply_mask(audio_cache[meta.scene_id], spans)
                name = f"{meta.scene_id}.{mode.kind}.{slug('_'.join(key[1]))}.masked.wav"
                dest = args.out / "scenes" / name
                write_wav(dest, masked.as_array(), masked.sample_rate_hz, WAV_FORMAT)
                written[key] = str(dest)
            entry["audio"] = written[key]
        index.append(entry)
    write_jsonl(args.out / f"masks.{mode.kind}.jsonl", index)
    if fallbacks:
        log.warning("%d scene(s) lacked score files and fell back to no_mask", len(fallbacks))
    return {"mode": mode.kind, "items": len(index), "masked_files": len(written), "fallback_scenes": len(fallbacks)}


# -- evaluate -------------------------------------------------------------------------

def cmd_evaluate(args, cfg: PipelineConfig) -> dict:
    gold = _load_gold(args.gold or args.out / "qa.jsonl")
    if not args.predictions:
        raise CLIError("--predictions is required")
    preds = [PredictionRecord.from_json(r) for r in read_jsonl(_require(args.predictions, "predictions file"))]
    scenes = _load_scenes(args.metadata or args.out)
    report = aggregate(preds, gold, scenes, cfg.judge.min_similarity, cfg.judge.min_factual)
    write_json(args.out / "report.json", report.to_json())
    write_text(args.out / "report.txt", render_table(report))
    return {"predictions": len(preds), "conditions": sorted(report.accuracy),
            "overall": {k: v.get("overall") for k, v in report.accuracy.items()}}


# -- emit-prompts ---------------------------------------------------------------------

def cmd_emit_prompts(args, cfg: PipelineConfig) -> dict:
    dest = args.out / "prompts"
    count = 0
    if args.kind == "generation":
        for f in sorted((args.out / "trends").glob("*.json")):
            trends = trends_from_json(json.loads(f.read_text(encoding="utf-8")))
            write_text(dest / f"{f.stem}.generation.txt", emit_generation_prompt(trends))
            count += 1
        if not count:
            raise CLIError(f"no trends files under {args.out / 'trends'}; run trends first")
    else:
        gold = _load_gold(args.gold or args.out / "qa.jsonl")
        if not args.predictions:
            raise CLIError("--predictions is required for judge prompts")
        for r in read_jsonl(_require(args.predictions, "predictions file")):
            p = PredictionRecord.from_json(r)
            item = gold.get(p.qa_id)
            if item is None:
                raise CLIError(f"prediction references unknown qa_id {p.qa_id!r}")
            if args.kind == "open" and item.type != "open":
                continue
            if args.kind == "thinking" and not p.thinking_text:
                continue
            if args.kind == "rationale" and not p.rationale_text:
                continue
            name = f"{p.qa_id}.{p.condition.key.replace('/', '.')}.{args.kind}.txt"
            write_text(dest / name, emit_judge_prompt(args.kind, item, p))
            count += 1
    return {"kind": args.kind, "prompts": count, "out": str(dest)}


COMMANDS = {
    "filter-events": cmd_filter_events,
    "synthesize": cmd_synthesize,
    "trends": cmd_trends,
    "gen-qa": cmd_gen_qa,
    "mask": cmd_mask,
    "evaluate": cmd_evaluate,
    "emit-prompts": cmd_emit_prompts,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML configuration file")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--seed", type=int, help="master seed (overrides [run] master_seed)")
    common.add_argument("--jobs", type=int, help="worker processes (default: $SPATIALQA_JOBS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="spatialqa", description="Spatial audio QA toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    p = sub.add_parser("filter-events", parents=[common], help="apply duration and quality filters")
    p.add_argument("--manifest", type=Path)
    p = sub.add_parser("synthesize", parents=[common], help="compose and render scenes")
    p.add_argument("--manifest", type=Path)
    p.add_argument("--scenes", type=int, help="number of scenes")
    sub.add_parser("trends", parents=[common], help="extract motion trends per scene")
    sub.add_parser("gen-qa", parents=[common], help="generate QA items from trends")
    p = sub.add_parser("mask", parents=[common], help="write query-masked audio")
    p.add_argument("--mode", choices=("no_mask", "gt", "scored"))
    p.add_argument("--gold", type=Path)
    p = sub.add_parser("evaluate", parents=[common], help="score predictions against gold QA")
    p.add_argument("--gold", type=Path)
    p.add_argument("--predictions", type=Path)
    p.add_argument("--metadata", type=Path, help="directory holding scenes/ (default: --out)")
    p = sub.add_parser("emit-prompts", parents=[common], help="write LLM generation or judge prompts")
    p.add_argument("--kind", choices=("generation", "thinking", "rationale", "open"), default="generation")
    p.add_argument("--gold", type=Path)
    p.add_argument("--predictions", type=Path)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        args.out = args.out or Path(cfg.run.out_dir)
        if args.jobs is not None and args.jobs < 1:
            raise CLIError("--jobs must be >= 1")
        summary = COMMANDS[args.command](args, cfg)
    except (CLIError, ConfigError, ManifestError, EvaluationError, CompositionError, OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        print(json.dumps({"command": args.command, "ok": False, "error": str(exc)}))
        return 1
    print(json.dumps({"command": args.command, "ok": True, **summary}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
