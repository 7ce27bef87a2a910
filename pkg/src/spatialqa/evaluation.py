"""Scoring of predictions against gold QA items, faceted accuracy and the
thinking-by-masking interaction."""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .prompts import OPEN_JUDGE_PROMPT, RATIONALE_JUDGE_PROMPT, THINKING_JUDGE_PROMPT
from .qa import QAItem
from .scene import SceneMetadata

METHODS = ("no_mask", "agm", "gt")
METHOD_ALIASES = {"scored": "agm", "nomask": "no_mask"}
METHOD_TITLES = {"no_mask": "NoMask", "agm": "AGM", "gt": "GT"}
TYPE_TITLES = {"yes_no": "Yes_No", "multiple_choice": "Multiple Choice", "open": "Open"}

JUDGE_FIELDS = {
    "thinking": ("logical_coherence", "step_completeness", "factual_accuracy", "alignment_with_ground_truth"),
    "rationale": ("conciseness", "accuracy", "clarity"),
    "open": ("factual_accuracy", "semantic_similarity"),
}


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Condition:
    mask_mode: str
    thinking: bool

    def __post_init__(self):
        mode = METHOD_ALIASES.get(self.mask_mode, self.mask_mode)
        if mode not in METHODS:
            raise EvaluationError(f"mask_mode must be one of {METHODS}, got {self.mask_mode!r}")
        object.__setattr__(self, "mask_mode", mode)
        object.__setattr__(self, "thinking", bool(self.thinking))

    @property
    def key(self) -> str:
        return f"{self.mask_mode}/{'thinking' if self.thinking else 'non_thinking'}"


@dataclass
class PredictionRecord:
    qa_id: str
    answer_text: str
    condition: Condition
    thinking_text: str | None = None
    rationale_text: str | None = None
    latency_s: float | None = None
    judge: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def from_json(cls, d: dict) -> "PredictionRecord":
        try:
            cond = d["condition"]
            return cls(
                qa_id=str(d["qa_id"]),
                answer_text=str(d["answer"]),
                condition=Condition(cond["mask_mode"], cond["thinking"]),
                thinking_text=d.get("thinking_text"),
                rationale_text=d.get("rationale_text"),
                latency_s=d.get("latency_s"),
                judge=dict(d.get("judge") or {}),
            )
        except KeyError as exc:
            raise EvaluationError(f"prediction lacks field {exc.args[0]!r}") from None

    def to_json(self) -> dict:
        d = {
            "qa_id": self.qa_id,
            "condition": {"mask_mode": self.condition.mask_mode, "thinking": self.condition.thinking},
            "answer": self.answer_text,
        }
        for k in ("thinking_text", "rationale_text", "latency_s"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        if self.judge:
            d["judge"] = self.judge
        return d


def normalize(text: str) -> str:
    """Case-fold, turn punctuation and symbols into spaces, collapse whitespace."""
    folded = unicodedata.normalize("NFKC", text).casefold()
    cleaned = "".join(" " if unicodedata.category(ch)[0] in "PS" else ch for ch in folded)
    return " ".join(cleaned.split())


def _contains(haystack: str, needle: str) -> bool:
    return bool(needle) and f" {needle} " in f" {haystack} "


def score_closed(pred: str, gold: QAItem) -> bool:
    """Keyword match for yes/no and multiple-choice items."""
    text = normalize(pred)
    if gold.type == "yes_no":
        first = next((t for t in text.split() if t in ("yes", "no")), None)
        return first is not None and first == normalize(gold.answer)
    if gold.type == "multiple_choice":
        norm = {c: normalize(c) for c in gold.choices or []}
        hits = [c for c, n in norm.items() if _contains(text, n)]
        # A hit that is only a fragment of a longer hit is not a separate choice.
        hits = [c for c in hits if not any(o != c and _contains(norm[o], norm[c]) for o in hits)]
        return len(hits) == 1 and hits[0] == gold.answer
    raise EvaluationError(f"{gold.id}: score_closed handles yes_no and multiple_choice, not {gold.type}")


def score_open(record: PredictionRecord, min_similarity: float = 4, min_factual: float = 4) -> bool | None:
    """Judge-based correctness for an open item; ``None`` without a judge reply."""
    j = record.judge.get("open")
    if not j:
        return None
    return j["semantic_similarity"] >= min_similarity and j["factual_accuracy"] >= min_factual


def events_facet(item: QAItem, scene_labels) -> str:
    rel = set(item.relevant_events)
    if rel and rel == set(scene_labels):
        return "complete_match"
    return {0: "none", 1: "1"}.get(len(rel), "2")


@dataclass
class EvalReport:
    """Accuracy cells keyed by condition then facet.

    Facets are ``overall``, ``type:<qtype>``, ``overlap:<yes|no>`` and
    ``events:<1|2|complete_match|none>``.
    """

    accuracy: dict[str, dict[str, float]] = field(default_factory=dict)
    counts: dict[str, dict[str, tuple[int, int]]] = field(default_factory=dict)
    latency_s: dict[str, float] = field(default_factory=dict)
    judge_means: dict[str, dict[str, float]] = field(default_factory=dict)
    error_tally: dict[str, int] = field(default_factory=dict)
    excluded_open: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_cells(cls, cells: dict[tuple[str, bool], dict[str, float]]) -> "EvalReport":
        """Build a report directly from accuracy percentages, e.g. published table cells."""
        return cls(accuracy={Condition(m, t).key: dict(v) for (m, t), v in cells.items()})

    def cell(self, method: str, thinking: bool, facet: str = "overall") -> float:
        key = Condition(method, thinking).key
        try:
            return self.accuracy[key][facet]
        except KeyError:
            raise EvaluationError(f"report has no accuracy for {key} facet {facet!r}") from None

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "counts": {c: {f: list(v) for f, v in fs.items()} for c, fs in self.counts.items()},
            "latency_s": self.latency_s,
            "judge_means": self.judge_means,
            "error_tally": self.error_tally,
            "excluded_open": self.excluded_open,
        }


def aggregate(
    preds: list[PredictionRecord],
    gold: dict[str, QAItem],
    scenes: dict[str, SceneMetadata],
    min_similarity: float = 4,
    min_factual: float = 4,
) -> EvalReport:
    seen = set()
    tallies: dict[str, dict[str, list[int]]] = defaultdict(lambda: defaultdict(lambda: [0, 0]))
    latencies: dict[str, list[float]] = defaultdict(list)
    judge_scores: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    errors: Counter = Counter()
    excluded: Counter = Counter()
    for p in preds:
        key = p.condition.key
        if (p.qa_id, key) in seen:
            raise EvaluationError(f"duplicate prediction for {p.qa_id} under {key}")
        seen.add((p.qa_id, key))
        item = gold.get(p.qa_id)
        if item is None:
            raise EvaluationError(f"prediction references unknown qa_id {p.qa_id!r}")
        meta = scenes.get(item.scene_id)
        if meta is None:
            raise EvaluationError(f"{p.qa_id}: scene {item.scene_id!r} has no metadata")
        for kind, reply in p.judge.items():
            for f in JUDGE_FIELDS.get(kind, ()):
                judge_scores[key][f"{kind}.{f}"].append(reply[f])
            for e in reply.get("errors", []) or []:
                errors[f"{e.get('category', 'unknown')}/{e.get('type', 'unknown')}"] += 1
        if p.latency_s is not None:
            latencies[key].append(float(p.latency_s))
        if item.type == "open":
            ok = score_open(p, min_similarity, min_factual)
            if ok is None:
                excluded[key] += 1
                continue
        else:
            ok = score_closed(p.answer_text, item)
        facets = (
            "overall",
            f"type:{item.type}",
            f"overlap:{'yes' if meta.overlap_flag else 'no'}",
            f"events:{events_facet(item, meta.labels)}",
        )
        for f in facets:
            tallies[key][f][0] += int(ok)
            tallies[key][f][1] += 1
    report = EvalReport()
    for key in sorted(tallies):
        report.counts[key] = {f: (c, n) for f, (c, n) in sorted(tallies[key].items())}
        report.accuracy[key] = {f: 100.0 * c / n for f, (c, n) in report.counts[key].items()}
    report.latency_s = {k: sum(v) / len(v) for k, v in sorted(latencies.items())}
    report.judge_means = {
        k: {f: sum(v) / len(v) for f, v in sorted(fs.items())} for k, fs in sorted(judge_scores.items())
    }
    report.error_tally = dict(sorted(errors.items()))
    report.excluded_open = dict(sorted(excluded.items()))
    return report


def delta_interaction(report: EvalReport, method: str, facet: str = "overall") -> float:
    """How much more thinking helps under ``method`` than without masking, in points."""
    gain = report.cell(method, True, facet) - report.cell(method, False, facet)
    base = report.cell("no_mask", True, facet) - report.cell("no_mask", False, facet)
    return gain - base


def format_delta(value: float) -> str:
    r = round(value, 1)
    if r == 0:
        return "+0.0"
    return f"{r:+.1f}"


def render_table(report: EvalReport) -> str:
    """Accuracy by question type under each condition, with interaction columns."""
    head = ["Question Type"] + [f"T:{METHOD_TITLES[m]}" for m in METHODS] + \
        [f"N:{METHOD_TITLES[m]}" for m in METHODS] + ["dI:AGM", "dI:GT"]
    rows = [head]
    facets = [(TYPE_TITLES[t], f"type:{t}") for t in TYPE_TITLES] + [("Overall", "overall")]
    for title, facet in facets:
        row = [title]
        for thinking in (True, False):
            for m in METHODS:
                try:
                    row.append(f"{report.cell(m, thinking, facet):.1f}")
                except EvaluationError:
                    row.append("-")
        for m in ("agm", "gt"):
            try:
                row.append(format_delta(delta_interaction(report, m, facet)))
            except EvaluationError:
                row.append("-")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def emit_judge_prompt(kind: str, gold: QAItem, pred: PredictionRecord) -> str:
    if kind == "thinking":
        if not pred.thinking_text:
            raise EvaluationError(f"{pred.qa_id}: thinking judge needs predicted thinking text")
        return THINKING_JUDGE_PROMPT.format(
            question=gold.question, ground_truth_answer=gold.answer,
            ground_truth_thinking=gold.thinking.to_text(), predicted_thinking=pred.thinking_text,
        )
    if kind == "rationale":
        if not pred.rationale_text:
            raise EvaluationError(f"{pred.qa_id}: rationale judge needs a predicted rationale")
        return RATIONALE_JUDGE_PROMPT.format(
            question=gold.question, ground_truth_answer=gold.answer, predicted_answer=pred.answer_text,
            ground_truth_rationale=gold.rationale, predicted_rationale=pred.rationale_text,
        )
    if kind == "open":
        return OPEN_JUDGE_PROMPT.format(question=gold.question, ground_truth=gold.answer, predicted=pred.answer_text)
    raise EvaluationError(f"judge kind must be one of {tuple(JUDGE_FIELDS)}, got {kind!r}")


def parse_judge_reply(kind: str, text: str) -> dict:
    """Validated judge scores; every required score must be a number in [0, 5]."""
    if kind not in JUDGE_FIELDS:
        raise EvaluationError(f"unknown judge kind {kind!r}")
    body = text.strip()
    fence = re.search(r"```(?:json)?\s*(.*?)```", body, re.S)
    if fence:
        body = fence.group(1)
    start, end = body.find("{"), body.rfind("}")
    if start < 0 or end <= start:
        raise EvaluationError("judge reply contains no JSON object")
    try:
        reply = json.loads(body[start:end + 1])
    except json.JSONDecodeError as exc:
        raise EvaluationError(f"judge reply is not valid JSON: {exc.msg}") from None
    problems = []
    for f in JUDGE_FIELDS[kind]:
        v = reply.get(f)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            problems.append(f"{f} missing or not a number")
        elif not 0 <= v <= 5:
            problems.append(f"{f}={v} outside 0-5")
    errs = reply.get("errors", [])
    if not isinstance(errs, list):
        problems.append("errors must be a list")
    if problems:
        raise EvaluationError("; ".join(problems))
    return reply


def attach_judge(record: PredictionRecord, kind: str, text: str) -> PredictionRecord:
    record.judge[kind] = parse_judge_reply(kind, text)
    return record
