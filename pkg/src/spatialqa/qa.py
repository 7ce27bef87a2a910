"""Rule-based movement-reasoning QA items built from per-event trends.

Every answer is decided from the qualitative trends, so items are
ground-truthable. The module also round-trips items through the JSON shape
used by the external-LLM generation path.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .prompts import GENERATION_PROMPT
from .masking import extract_query_events
from .scene import SceneMetadata
from .trends import (
    PROFILES,
    RADIAL_PHRASES,
    RADIAL_VERBS,
    SPANS,
    VARIATIONS,
    FrameTrends,
    lateral_phrase,
    trends_to_json,
    where,
)

QTYPES = ("yes_no", "multiple_choice", "open")
TAGS = ("lateral", "radial", "relative_motion", "sequencing", "comparative", "perception", "temporal")
DIFFICULTIES = ("simple", "moderate", "complex")
STEPS_FOR = {"simple": 1, "moderate": 2, "complex": 3}
COMPLEX_TAGS = frozenset({"comparative", "relative_motion", "sequencing", "temporal"})
YES, NO = "Yes", "No"

# Onsets closer than this count as simultaneous.
START_TIE_S = 0.1
# An event starting this early counts as present from the start of the scene.
EARLY_START_S = 0.5


class QAValidationError(ValueError):
    pass


@dataclass
class ThinkingStep:
    step_text: str
    solution_text: str


@dataclass
class Thinking:
    steps: list[ThinkingStep]
    final_reasoning: str

    def to_text(self) -> str:
        lines = ["<think>"]
        for i, s in enumerate(self.steps, 1):
            lines += [f"Step {i}: {s.step_text}", f"Solution: {s.solution_text}"]
        lines += [f"Final reasoning: {self.final_reasoning}", "</think>"]
        return "\n".join(lines)

    @classmethod
    def parse(cls, text: str) -> "Thinking":
        body = text.strip()
        body = re.sub(r"^<think>\s*", "", body)
        body = re.sub(r"\s*</think>$", "", body)
        steps: list[list[str]] = []
        final = None
        current = None
        for raw in body.splitlines():
            line = raw.strip()
            if not line:
                continue
            m = re.match(r"^\[?(?:Optional\s+)?Step\s+\d+\s*:\s*(.*?)\]?$", line, re.I)
            if m:
                steps.append([m.group(1), ""])
                current = (len(steps) - 1, 0)
                continue
            m = re.match(r"^Solution\s*:\s*(.*)$", line, re.I)
            if m:
                if not steps:
                    raise QAValidationError("solution before any step")
                steps[-1][1] = m.group(1)
                current = (len(steps) - 1, 1)
                continue
            m = re.match(r"^Final reasoning\s*:\s*(.*)$", line, re.I)
            if m:
                final = m.group(1)
                current = ("final",)
                continue
            if current is None:
                raise QAValidationError(f"unexpected thinking line {line!r}")
            if current == ("final",):
                final += " " + line
            else:
                steps[current[0]][current[1]] += " " + line
        if final is None:
            raise QAValidationError("thinking block lacks a final reasoning line")
        return cls([ThinkingStep(a, b) for a, b in steps], final)


@dataclass
class QAItem:
    id: str
    question: str
    type: str
    answer: str
    thinking: Thinking
    rationale: str
    tags: list[str]
    difficulty: str
    relevant_events: list[str]
    choices: list[str] | None = None
    scene_id: str | None = None

    def problems(self, scene_labels=None) -> list[str]:
        """Invariant violations; empty when the item is valid."""
        out = []
        if self.type not in QTYPES:
            out.append(f"type {self.type!r} not one of {QTYPES}")
        if self.type == "multiple_choice":
            if not self.choices or not 2 <= len(self.choices) <= 4:
                out.append("multiple_choice needs 2-4 choices")
            elif self.answer not in self.choices:
                out.append(f"answer {self.answer!r} not among choices {self.choices}")
        elif self.choices:
            out.append(f"{self.type} item must not carry choices")
        if self.type == "yes_no" and self.answer not in (YES, NO):
            out.append(f"yes_no answer must be Yes or No, got {self.answer!r}")
        if self.difficulty not in DIFFICULTIES:
            out.append(f"difficulty {self.difficulty!r} not one of {DIFFICULTIES}")
        elif len(self.thinking.steps) != STEPS_FOR[self.difficulty]:
            out.append(f"{self.difficulty} item needs {STEPS_FOR[self.difficulty]} steps, has {len(self.thinking.steps)}")
        if not self.thinking.final_reasoning:
            out.append("missing final reasoning")
        bad_tags = [t for t in self.tags if t not in TAGS]
        if bad_tags:
            out.append(f"unknown tags {bad_tags}")
        if scene_labels is not None:
            extra = [e for e in self.relevant_events if e not in scene_labels]
            if extra:
                out.append(f"relevant_events {extra} not in scene")
        return out

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "question": self.question,
            "type": self.type,
        }
        if self.choices is not None:
            d["choices"] = list(self.choices)
        d.update({
            "answer": self.answer,
            "thinking": self.thinking.to_text(),
            "rationale": self.rationale,
            "tags": list(self.tags),
            "difficulty": self.difficulty,
            "relevant_events": list(self.relevant_events),
        })
        if self.scene_id is not None:
            d["scene_id"] = self.scene_id
        return d

    @classmethod
    def from_json(cls, d: dict) -> "QAItem":
        missing = [k for k in ("id", "question", "type", "answer", "thinking", "rationale", "tags") if k not in d]
        if missing:
            raise QAValidationError(f"missing fields {missing}")
        thinking = d["thinking"]
        thinking = Thinking.parse(thinking) if isinstance(thinking, str) else Thinking(
            [ThinkingStep(**s) for s in thinking["steps"]], thinking["final_reasoning"])
        n = len(thinking.steps)
        difficulty = d.get("difficulty") or {1: "simple", 2: "moderate", 3: "complex"}.get(n, "complex")
        return cls(
            id=str(d["id"]), question=d["question"], type=d["type"], answer=str(d["answer"]),
            thinking=thinking, rationale=d["rationale"], tags=list(d["tags"]), difficulty=difficulty,
            relevant_events=list(d.get("relevant_events", [])), choices=d.get("choices"),
            scene_id=d.get("scene_id"),
        )


def classify_difficulty(qtype: str, n_events: int, n_attributes: int, tags) -> str:
    """Comparative, relational, sequencing and temporal items are complex.

    Otherwise two events or two attributes make an item moderate, as does any
    non yes/no format; a single-attribute yes/no item about one event is simple.
    """
    if COMPLEX_TAGS & set(tags):
        return "complex"
    if n_events >= 2 or n_attributes >= 2 or qtype != "yes_no":
        return "moderate"
    return "simple"


@dataclass(frozen=True)
class MixConstraints:
    min_yes_no: int = 5
    min_multiple_choice: int = 3
    min_open: int = 6
    min_open_relative_motion: int = 3
    min_radial: int = 4
    min_sequencing: int = 2
    min_lateral_radial: int = 2
    min_temporal: int = 2


def mix_counts(items: list[QAItem]) -> dict[str, int]:
    def n(pred):
        return sum(1 for it in items if pred(it))
    return {
        "yes_no": n(lambda it: it.type == "yes_no"),
        "multiple_choice": n(lambda it: it.type == "multiple_choice"),
        "open": n(lambda it: it.type == "open"),
        "open_relative_motion": n(lambda it: it.type == "open" and "relative_motion" in it.tags),
        "radial": n(lambda it: "radial" in it.tags),
        "sequencing": n(lambda it: "sequencing" in it.tags),
        "lateral_radial": n(lambda it: "lateral" in it.tags and "radial" in it.tags),
        "temporal": n(lambda it: "temporal" in it.tags),
    }


def unmet_constraints(items: list[QAItem], mix: MixConstraints = MixConstraints()) -> dict[str, tuple[int, int]]:
    counts = mix_counts(items)
    need = {
        "yes_no": mix.min_yes_no,
        "multiple_choice": mix.min_multiple_choice,
        "open": mix.min_open,
        "open_relative_motion": mix.min_open_relative_motion,
        "radial": mix.min_radial,
        "sequencing": mix.min_sequencing,
        "lateral_radial": mix.min_lateral_radial,
        "temporal": mix.min_temporal,
    }
    return {k: (counts[k], v) for k, v in need.items() if counts[k] < v}


@dataclass
class QASet:
    scene_id: str
    items: list[QAItem]
    waivers: dict[str, str] = field(default_factory=dict)


# Phrase tables. Question templates are fixed strings so that answers can be
# re-derived from the question text alone.

LATERAL_Q = {
    "left->right": "moving from left to right",
    "right->left": "moving from right to left",
    "static": "staying in place from side to side",
}
RADIAL_Q = {
    "approach": "getting closer to the listener",
    "recede": "moving farther away from the listener",
    "steady": "keeping a steady distance from the listener",
    "approach->recede": "coming closer and then moving farther away",
    "recede->approach": "moving farther away and then coming closer",
}
RADIAL_CLAUSE = {
    "approach": "getting closer",
    "recede": "moving farther away",
    "steady": "keeping a steady distance",
    "approach->recede": "coming closer and then moving farther away",
    "recede->approach": "moving farther away and then coming closer",
}
LATERAL_CHOICES = {
    "left->right": "From left to right",
    "right->left": "From right to left",
    "static": "It stays in place",
}
RADIAL_CHOICES = {
    "approach": "It gets closer",
    "recede": "It moves farther away",
    "steady": "It keeps a steady distance",
    "approach->recede": "It comes closer and then moves farther away",
    "recede->approach": "It moves farther away and then comes closer",
}
SIDE_CHOICES = {"left": "On the left", "center": "In the middle", "right": "On the right"}
BOTH, NEITHER, TOGETHER, CANT_TELL = "Both equally", "Neither", "They start together", "Can't tell"


def _cap(text: str) -> str:
    return text[:1].upper() + text[1:]


def _names(events: list[str]) -> str:
    names = [f"the {e}" for e in events]
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def span_rank(tr: FrameTrends) -> int:
    return -1 if tr.azimuth.lateral == "static" else SPANS.index(tr.azimuth.span_category)


def variation_rank(tr: FrameTrends) -> int:
    return VARIATIONS.index(tr.distance.variation_category)


def region_relation(a: FrameTrends, b: FrameTrends) -> str:
    """``converge``, ``diverge``, ``swap`` or ``together`` from start/end sides."""
    same_start = a.azimuth.start_side == b.azimuth.start_side
    same_end = a.azimuth.end_side == b.azimuth.end_side
    if not same_start and same_end:
        return "converge"
    if same_start and not same_end:
        return "diverge"
    if same_start and same_end:
        return "together"
    return "swap"


class _Builder:
    """Per-scene item factory holding the trends, timing and RNG."""

    def __init__(self, trends: dict[str, FrameTrends], meta: SceneMetadata | None, rng):
        self.trends = trends
        self.labels = list(trends)
        self.scene_id = meta.scene_id if meta is not None else "scene"
        self.duration = meta.duration_s if meta is not None else None
        self.rng = rng

    # -- thinking ---------------------------------------------------------

    def _aspect(self, aspect: str, events: list[str]) -> ThinkingStep:
        tr = self.trends
        plural = len(events) > 1
        who = _names(events)
        if aspect == "lateral":
            return ThinkingStep(
                f"Check how {who} {'move' if plural else 'moves'} from side to side.",
                _cap("; ".join(f"the {e} {lateral_phrase(tr[e].azimuth)}" for e in events)) + ".",
            )
        if aspect == "radial":
            return ThinkingStep(
                f"Listen for whether {who} {'get' if plural else 'gets'} closer or farther away.",
                _cap("; ".join(f"the {e} {RADIAL_VERBS[tr[e].distance.trend_profile]}" for e in events)) + ".",
            )
        if aspect == "crossing":
            return ThinkingStep(
                f"Check whether {who} {'pass' if plural else 'passes'} through the middle.",
                "; ".join(
                    _cap(f"the {e} {'passes' if tr[e].azimuth.crosses_center else 'does not pass'} through the middle")
                    for e in events) + ".",
            )
        if aspect == "arc":
            def arc_text(e):
                if tr[e].azimuth.is_arc:
                    return f"the {e} curves around the listener while its distance holds steady"
                if tr[e].azimuth.lateral == "static":
                    return f"the {e} does not travel around the listener at all"
                return f"the {e} does not trace a curve at a constant distance"
            return ThinkingStep(
                f"Check whether {who} {'curve' if plural else 'curves'} around the listener at a constant distance.",
                _cap("; ".join(arc_text(e) for e in events)) + ".",
            )
        if aspect == "start":
            return ThinkingStep(
                f"Note where {who} {'begin' if plural else 'begins'}.",
                _cap("; ".join(f"the {e} begins {where(tr[e].azimuth.start_side)}" for e in events)) + ".",
            )
        if aspect == "end":
            return ThinkingStep(
                f"Note where {who} {'finish' if plural else 'finishes'}.",
                _cap("; ".join(f"the {e} finishes {where(tr[e].azimuth.end_side)}" for e in events)) + ".",
            )
        if aspect == "span":
            def span_text(e):
                if tr[e].azimuth.lateral == "static":
                    return f"the {e} stays put without sweeping"
                return f"the {e} makes a {tr[e].azimuth.span_category} sweep"
            return ThinkingStep(
                "Judge how wide each sweep is." if plural else f"Judge how wide the sweep of the {events[0]} is.",
                _cap("; ".join(span_text(e) for e in events)) + ".",
            )
        if aspect == "variation":
            def var_text(e):
                v = tr[e].distance.variation_category
                return f"the {e} shows no change in distance" if v == "none" else f"the {e} shows a {v} change in distance"
            return ThinkingStep(
                "Judge how strongly each distance changes." if plural
                else f"Judge how strongly the distance of the {events[0]} changes.",
                _cap("; ".join(var_text(e) for e in events)) + ".",
            )
        if aspect == "timing":
            return ThinkingStep(
                f"Note when {who} {'begin and end' if plural else 'begins and ends'}.",
                self._timing_text(events),
            )
        if aspect == "relation":
            a, b = events[:2]
            return ThinkingStep(
                "Relate the two paths to each other.",
                self._relation_text(a, b),
            )
        if aspect == "contrast":
            if plural:
                return ThinkingStep("Contrast the paths to explain the difference.", self._contrast_text(events))
            e = events[0]
            return ThinkingStep(
                f"Combine the side-to-side and distance cues for the {e}.",
                _cap(f"the {e} {lateral_phrase(tr[e].azimuth)}, {RADIAL_PHRASES[tr[e].distance.trend_profile]}."),
            )
        raise ValueError(f"unknown thinking aspect {aspect!r}")

    def build_thinking(self, aspects, events: list[str], difficulty: str, final_reasoning: str) -> Thinking:
        n = STEPS_FOR[difficulty]
        pad = ("lateral", "radial", "contrast") if len(events) > 1 else ("lateral", "radial", "end", "contrast")
        order = list(dict.fromkeys(list(aspects) + list(pad)))
        return Thinking([self._aspect(a, events) for a in order[:n]], final_reasoning)

    # -- shared sentences ---------------------------------------------------

    def _onset_order(self, events: list[str]) -> list[str]:
        return sorted(events, key=lambda e: (self.trends[e].temporal.start_time_s, self.labels.index(e)))

    def _overlap(self, a: str, b: str) -> bool:
        ta, tb = self.trends[a].temporal, self.trends[b].temporal
        return min(ta.end_time_s, tb.end_time_s) - max(ta.start_time_s, tb.start_time_s) > 0

    def _timing_text(self, events: list[str]) -> str:
        if len(events) == 1:
            return self._single_timing(events[0])
        order = self._onset_order(events)
        first, second = order[0], order[1]
        gap = self.trends[second].temporal.start_time_s - self.trends[first].temporal.start_time_s
        if gap < START_TIE_S:
            text = f"The {first} and the {second} begin together"
        else:
            text = f"The {first} begins first and the {second} follows"
        if len(order) > 2:
            text += f", with the {order[2]} entering last"
        pairs = list(combinations(events, 2))
        if any(self._overlap(a, b) for a, b in pairs):
            text += "; some of the sounds are heard at the same time"
        else:
            text += "; each sound ends before the next one starts"
        return text + "."

    def _single_timing(self, e: str) -> str:
        t = self.trends[e].temporal
        if self.duration is None:
            return f"The {e} is heard for a while and then stops."
        third = self.duration / 3
        when = "early" if t.start_time_s < third else "around the middle" if t.start_time_s < 2 * third else "late"
        ending = ("continues until the scene ends" if t.end_time_s >= self.duration - EARLY_START_S
                  else "stops before the scene ends")
        return f"The {e} begins {when} in the scene and {ending}."

    def _relation_text(self, a: str, b: str) -> str:
        ta, tb = self.trends[a].azimuth, self.trends[b].azimuth
        rel = region_relation(self.trends[a], self.trends[b])
        path = (f"the {a} goes from the {_place(ta.start_side)} to the {_place(ta.end_side)}, "
                f"while the {b} goes from the {_place(tb.start_side)} to the {_place(tb.end_side)}")
        lead = {
            "converge": "They head toward the same region",
            "diverge": "They move apart into different regions",
            "together": "They stay in the same region as each other",
            "swap": "They cross paths and trade regions",
        }[rel]
        return f"{lead}: {path}."

    def _contrast_text(self, events: list[str]) -> str:
        tr = self.trends
        parts = []
        for e in events:
            az, d = tr[e].azimuth, tr[e].distance
            lat = "stays fixed" if az.lateral == "static" else f"sweeps {az.lateral.replace('->', ' to ')}"
            parts.append(f"the {e} {lat} and {RADIAL_VERBS[d.trend_profile]}")
        return _cap("; ".join(parts)) + "."

    # -- item assembly --------------------------------------------------------

    def item(self, question, qtype, answer, tags, events, aspects, final, rationale, n_attributes=1, choices=None):
        difficulty = classify_difficulty(qtype, len(events), n_attributes, tags)
        thinking = self.build_thinking(aspects, events, difficulty, final)
        return QAItem(
            id="", question=question, type=qtype, answer=answer, thinking=thinking, rationale=rationale,
            tags=list(tags), difficulty=difficulty, relevant_events=list(events), choices=choices,
            scene_id=self.scene_id,
        )

    def pick_other(self, options, actual):
        others = [o for o in options if o != actual]
        return others[int(self.rng.integers(len(others)))]

    # -- yes/no families ------------------------------------------------------

    def yn_lateral(self, e: str, want: bool) -> QAItem:
        actual = self.trends[e].azimuth.lateral
        asked = actual if want else self.pick_other(list(LATERAL_Q), actual)
        ans = YES if asked == actual else NO
        return self.item(
            f"Is the {e} sound {LATERAL_Q[asked]}?", "yes_no", ans, ["lateral"], [e], ["lateral"],
            f"The {e} {lateral_phrase(self.trends[e].azimuth)}, so the answer is {ans}.",
            f"The {e} is heard {_lateral_short(actual)}.",
        )

    def yn_radial(self, e: str, want: bool) -> QAItem:
        actual = self.trends[e].distance.trend_profile
        asked = actual if want else self.pick_other(PROFILES, actual)
        ans = YES if asked == actual else NO
        return self.item(
            f"Is the {e} sound {RADIAL_Q[asked]}?", "yes_no", ans, ["radial"], [e], ["radial"],
            f"The {e} {RADIAL_VERBS[actual]}, so the answer is {ans}.",
            f"The loudness cues show that the {e} {RADIAL_VERBS[actual]}.",
        )

    def yn_combined(self, e: str, want: bool) -> QAItem:
        lat = self.trends[e].azimuth.lateral
        rad = self.trends[e].distance.trend_profile
        if want:
            a, b = lat, rad
        else:
            which = int(self.rng.integers(3))
            a = self.pick_other(list(LATERAL_Q), lat) if which in (0, 2) else lat
            b = self.pick_other(PROFILES, rad) if which in (1, 2) else rad
        ans = YES if (a, b) == (lat, rad) else NO
        return self.item(
            f"Is the {e} sound {LATERAL_Q[a]} while {RADIAL_CLAUSE[b]}?", "yes_no", ans,
            ["lateral", "radial"], [e], ["lateral", "radial"],
            f"The {e} {lateral_phrase(self.trends[e].azimuth)}, {RADIAL_PHRASES[rad]}, so the answer is {ans}.",
            f"The {e} is heard {_lateral_short(lat)} and {RADIAL_VERBS[rad]}.",
            n_attributes=2,
        )

    def yn_end_side(self, e: str, want: bool) -> QAItem:
        actual = self.trends[e].azimuth.end_side
        asked = actual if want else self.pick_other(list(SIDE_CHOICES), actual)
        ans = YES if asked == actual else NO
        return self.item(
            f"Does the {e} sound end up {where(asked)}?", "yes_no", ans, ["lateral"], [e], ["end"],
            f"The {e} finishes {where(actual)}, so the answer is {ans}.",
            f"By the end the {e} is heard {where(actual)}.",
        )

    def yn_starts_before(self, a: str, b: str, want: bool) -> QAItem | None:
        ta, tb = self.trends[a].temporal, self.trends[b].temporal
        if abs(ta.start_time_s - tb.start_time_s) < START_TIE_S:
            return None
        first, second = (a, b) if ta.start_time_s < tb.start_time_s else (b, a)
        x, y = (first, second) if want else (second, first)
        ans = YES if x == first else NO
        return self.item(
            f"Does the {x} sound start before the {y} sound?", "yes_no", ans, ["temporal", "sequencing"], [x, y],
            ["timing"], f"The {first} is heard before the {second} begins, so the answer is {ans}.",
            f"The {first} enters before the {second}.",
        )

    def yn_crossing(self, e: str) -> QAItem:
        az = self.trends[e].azimuth
        ans = YES if az.crosses_center else NO
        verdict = "passes through the middle" if az.crosses_center else "never passes through the middle"
        return self.item(
            f"Does the {e} sound pass through the middle?", "yes_no", ans, ["lateral"], [e], ["crossing"],
            f"The {e} {verdict}, so the answer is {ans}.",
            f"The {e} {verdict} of the scene.",
        )

    def yn_arc(self, e: str) -> QAItem:
        az = self.trends[e].azimuth
        ans = YES if az.is_arc else NO
        return self.item(
            f"Does the {e} sound follow a curved path around the listener at a constant distance?", "yes_no", ans,
            ["lateral"], [e], ["arc"],
            f"The {e} {lateral_phrase(az)}, so the answer is {ans}.",
            f"The {e} {'curves around the listener' if az.is_arc else 'does not curve around the listener'}.",
        )

    def yn_opposite(self, a: str, b: str) -> QAItem:
        la, lb = self.trends[a].azimuth.lateral, self.trends[b].azimuth.lateral
        ans = YES if {la, lb} == {"left->right", "right->left"} else NO
        return self.item(
            f"Do the {a} and {b} sounds move in opposite directions from side to side?", "yes_no", ans,
            ["relative_motion", "lateral"], [a, b], ["lateral", "relation"],
            f"The {a} is heard {_lateral_short(la)} and the {b} {_lateral_short(lb)}, so the answer is {ans}.",
            f"The {a} and the {b} {'head in opposite directions' if ans == YES else 'do not head in opposite directions'}.",
        )

    def yn_converge(self, a: str, b: str) -> QAItem:
        rel = region_relation(self.trends[a], self.trends[b])
        ans = YES if rel == "converge" else NO
        return self.item(
            f"Do the {a} and {b} sounds move toward the same region as they progress?", "yes_no", ans,
            ["relative_motion", "lateral"], [a, b], ["start", "end", "relation"],
            f"{self._relation_text(a, b)[:-1]}, so the answer is {ans}.",
            f"The {a} and the {b} {'end up in the same region after starting apart' if ans == YES else 'do not close in on the same region'}.",
        )

    def yn_overlap(self, a: str, b: str) -> QAItem:
        ans = YES if self._overlap(a, b) else NO
        return self.item(
            f"Do the {a} and {b} sounds overlap in time?", "yes_no", ans, ["temporal"], [a, b], ["timing"],
            f"The {a} and the {b} {'are heard at the same time for a while' if ans == YES else 'are never heard at the same time'}, so the answer is {ans}.",
            f"The {a} and the {b} {'share part of the scene' if ans == YES else 'take turns without sharing any moment'}.",
        )

    def yn_early_start(self, e: str) -> QAItem:
        t = self.trends[e].temporal
        ans = YES if t.start_time_s < EARLY_START_S else NO
        return self.item(
            f"Does the {e} sound begin right at the start of the scene?", "yes_no", ans, ["temporal"], [e], ["timing"],
            f"{self._single_timing(e)[:-1]}, so the answer is {ans}.",
            f"The {e} {'is present from the opening moment' if ans == YES else 'enters only after the scene has begun'}.",
        )

    # -- multiple choice --------------------------------------------------------

    def _shuffled(self, choices: list[str]) -> list[str]:
        return [choices[i] for i in self.rng.permutation(len(choices))]

    def mc_lateral(self, e: str) -> QAItem:
        actual = self.trends[e].azimuth.lateral
        choices = self._shuffled(list(LATERAL_CHOICES.values()) + [CANT_TELL])
        return self.item(
            f"Which best describes how the {e} sound moves from side to side?", "multiple_choice",
            LATERAL_CHOICES[actual], ["lateral"], [e], ["lateral", "end"],
            f"The {e} {lateral_phrase(self.trends[e].azimuth)}, which matches {LATERAL_CHOICES[actual].lower()}.",
            f"The {e} is heard {_lateral_short(actual)}.", choices=choices,
        )

    def mc_radial(self, e: str) -> QAItem:
        actual = self.trends[e].distance.trend_profile
        others = [p for p in PROFILES if p != actual]
        drop = others[int(self.rng.integers(len(others)))]
        choices = self._shuffled([RADIAL_CHOICES[p] for p in PROFILES if p != drop])
        return self.item(
            f"How does the distance of the {e} sound change over time?", "multiple_choice",
            RADIAL_CHOICES[actual], ["radial"], [e], ["radial", "variation"],
            f"The {e} {RADIAL_VERBS[actual]}, so the best choice is that {RADIAL_CHOICES[actual].lower()}.",
            f"The loudness cues show that the {e} {RADIAL_VERBS[actual]}.", choices=choices,
        )

    def mc_end_side(self, e: str) -> QAItem:
        actual = self.trends[e].azimuth.end_side
        return self.item(
            f"Where does the {e} sound end up?", "multiple_choice", SIDE_CHOICES[actual], ["lateral"], [e],
            ["end", "lateral"], f"The {e} finishes {where(actual)}.",
            f"By the end the {e} is heard {where(actual)}.", choices=list(SIDE_CHOICES.values()),
        )

    def _pair_question(self, text: str, a: str, b: str) -> str:
        if set(self.labels) == {a, b}:
            return text + "?"
        return f"{text}, the {a} or the {b}?"

    def mc_wider_span(self, a: str, b: str) -> QAItem:
        ra, rb = span_rank(self.trends[a]), span_rank(self.trends[b])
        if ra == rb == -1:
            ans = NEITHER
        elif ra == rb:
            ans = BOTH
        else:
            ans = a if ra > rb else b
        return self.item(
            self._pair_question("Which source sweeps across a wider left->right range", a, b), "multiple_choice",
            ans, ["comparative", "lateral"], [a, b], ["span", "lateral"],
            _span_verdict(a, b, ans),
            _span_verdict(a, b, ans), choices=[a, b, BOTH, NEITHER],
        )

    def mc_stronger_distance(self, a: str, b: str) -> QAItem:
        ra, rb = variation_rank(self.trends[a]), variation_rank(self.trends[b])
        if ra == rb == 0:
            ans = NEITHER
        elif ra == rb:
            ans = BOTH
        else:
            ans = a if ra > rb else b
        if ans == NEITHER:
            final = f"Neither the {a} nor the {b} changes distance noticeably."
        elif ans == BOTH:
            final = f"The {a} and the {b} change distance to a similar degree."
        else:
            other = b if ans == a else a
            final = f"The {ans} changes distance more strongly than the {other}."
        return self.item(
            self._pair_question("Which source changes its distance more strongly", a, b), "multiple_choice",
            ans, ["comparative", "radial"], [a, b], ["variation", "radial"], final, final,
            choices=[a, b, BOTH, NEITHER],
        )

    def mc_first(self, events: list[str]) -> QAItem:
        order = self._onset_order(events)
        gap = self.trends[order[1]].temporal.start_time_s - self.trends[order[0]].temporal.start_time_s
        ans = TOGETHER if gap < START_TIE_S else order[0]
        final = (f"The {order[0]} and the {order[1]} begin together." if ans == TOGETHER
                 else f"The {order[0]} is heard before any other sound begins.")
        return self.item(
            "Which sound starts first?", "multiple_choice", ans, ["temporal", "sequencing"], events, ["timing"],
            final, final, choices=list(events) + [TOGETHER],
        )

    # -- open-ended ---------------------------------------------------------------

    def open_summary(self, e: str) -> QAItem:
        tr = self.trends[e]
        return self.item(
            f"Summarize how the {e} changes in distance while moving laterally.", "open", tr.summary_text,
            ["lateral", "radial"], [e], ["lateral", "radial"],
            f"Taken together, the {e} {lateral_phrase(tr.azimuth)}, {RADIAL_PHRASES[tr.distance.trend_profile]}.",
            f"The {e} is heard {_lateral_short(tr.azimuth.lateral)} and {RADIAL_VERBS[tr.distance.trend_profile]}.",
            n_attributes=2,
        )

    def open_path(self, e: str) -> QAItem:
        tr = self.trends[e]
        moving = tr.azimuth.lateral != "static"
        radial = tr.distance.trend_profile != "steady"
        if moving and radial:
            rel = "Its distance changes while it sweeps, so it moves both sideways and in depth."
        elif moving:
            rel = "Its distance stays the same while it sweeps, so the motion is purely side to side."
        elif radial:
            rel = "It does not sweep sideways, so all of its motion is toward or away from the listener."
        else:
            rel = "It neither sweeps nor changes distance, so its position stays fixed."
        return self.item(
            f"Describe the path that the {e} takes as it moves. How does its distance change relate to its lateral movement?",
            "open", f"{tr.summary_text} {rel}", ["lateral", "radial"], [e], ["lateral", "radial"],
            rel, f"The {e} {lateral_phrase(tr.azimuth)}, {RADIAL_PHRASES[tr.distance.trend_profile]}.",
            n_attributes=2,
        )

    def open_compare(self, a: str, b: str) -> QAItem:
        tr = self.trends
        la, lb = tr[a].azimuth.lateral, tr[b].azimuth.lateral
        if la == lb == "static":
            lat = "Neither moves from side to side."
        elif la == lb:
            lat = "Both move in the same lateral direction."
        elif "static" in (la, lb):
            mover = a if lb == "static" else b
            lat = f"Only the {mover} moves from side to side."
        else:
            lat = "They move in opposite lateral directions."
        pa, pb = tr[a].distance.trend_profile, tr[b].distance.trend_profile
        rad = ("Their distance trends match." if pa == pb
               else f"In depth, the {a} {RADIAL_VERBS[pa]} while the {b} {RADIAL_VERBS[pb]}.")
        answer = f"{tr[a].summary_text} {tr[b].summary_text} {lat} {rad}"
        return self.item(
            f"Compare the movement of the {a} and the {b} in both direction and distance.", "open", answer,
            ["relative_motion", "lateral", "radial"], [a, b], ["lateral", "radial", "contrast"],
            f"{lat} {rad}", f"{lat} {rad}", n_attributes=2,
        )

    def open_converge(self, a: str, b: str) -> QAItem:
        rel = region_relation(self.trends[a], self.trends[b])
        verdict = {
            "converge": f"The {a} and the {b} move toward the same region.",
            "diverge": f"The {a} and the {b} move away from each other into different regions.",
            "together": f"The {a} and the {b} stay in the same region rather than converging or separating.",
            "swap": f"The {a} and the {b} cross paths and trade regions rather than meeting in one place.",
        }[rel]
        answer = f"{verdict} {self._relation_text(a, b)}"
        return self.item(
            f"Do the {a} and the {b} move toward the same region or away from each other? Explain.", "open",
            answer, ["relative_motion", "lateral"], [a, b], ["start", "end", "relation"], verdict, verdict,
        )

    def open_pattern(self, a: str, b: str) -> QAItem:
        tr = self.trends
        diffs = []
        if tr[a].azimuth.lateral != tr[b].azimuth.lateral:
            diffs.append("their side-to-side directions differ")
        if tr[a].azimuth.is_arc != tr[b].azimuth.is_arc:
            diffs.append("only one of them curves around the listener at a constant distance")
        if tr[a].distance.trend_profile != tr[b].distance.trend_profile:
            diffs.append("their distance trends differ")
        if span_rank(tr[a]) != span_rank(tr[b]):
            diffs.append("one sweeps more widely than the other")
        closing = ("What sets them apart is that " + ", and ".join(diffs) + "." if diffs
                   else "Their paths are qualitatively alike.")
        answer = f"{tr[a].summary_text} {tr[b].summary_text} {closing}"
        return self.item(
            f"Compare how the {a} and the {b} move through space. What makes their paths different?", "open",
            answer, ["relative_motion", "lateral", "radial"], [a, b], ["lateral", "radial", "contrast"],
            closing, closing, n_attributes=2,
        )

    def open_choreography(self) -> QAItem:
        parts = []
        for e in self._onset_order(self.labels):
            az, d = self.trends[e].azimuth, self.trends[e].distance
            parts.append(
                f"the {e} begins {where(az.start_side)}, {lateral_phrase(az)} {RADIAL_PHRASES[d.trend_profile]}, "
                f"and finishes {where(az.end_side)}"
            )
        answer = _cap("; ".join(parts)) + "."
        return self.item(
            "Narrate the overall motion: where each source starts, how it moves, and where it finishes.", "open",
            answer, ["sequencing"], list(self.labels), ["start", "lateral", "end"],
            "Following each sound from its entry to its exit gives the full choreography.",
            "Each sound is traced from where it enters to where it leaves.",
        )

    def open_endpoints(self) -> QAItem:
        parts = []
        for e in self.labels:
            az = self.trends[e].azimuth
            parts.append(f"the {e} ends {where(az.end_side)} because it {lateral_phrase(az)}")
        answer = _cap("; ".join(parts)) + "."
        return self.item(
            "Explain where each source ends and how its final position follows from its path.", "open", answer,
            ["sequencing", "lateral"], list(self.labels), ["end", "lateral", "start"],
            "Each final position is where its path naturally leads.",
            "Each sound finishes where its path carries it.",
        )

    def open_prominence(self) -> QAItem:
        def near_middle(e):
            az = self.trends[e].azimuth
            return az.crosses_center or "center" in (az.start_side, az.end_side)

        hits = [e for e in self.labels if near_middle(e)]
        misses = [e for e in self.labels if e not in hits]

        def why(e):
            az = self.trends[e].azimuth
            if az.crosses_center:
                return f"crosses the middle with a {az.span_category} sweep"
            if az.lateral == "static":
                return "stays in the middle"
            return "spends part of its path in the middle"

        if not hits:
            answer = "None of the sources feels prominent near the middle: " + "; ".join(
                f"the {e} stays {where(self.trends[e].azimuth.start_side)}" if self.trends[e].azimuth.lateral == "static"
                else f"the {e} {lateral_phrase(self.trends[e].azimuth)}" for e in misses) + "."
        else:
            lead = hits[0] if len(hits) == 1 else None
            if lead:
                answer = f"The {lead} feels most noticeable near the middle because it {why(lead)}"
            else:
                answer = "The " + " and the ".join(hits) + " both pass near the middle: " + "; ".join(
                    f"the {e} {why(e)}" for e in hits)
            if misses:
                answer += ", whereas " + " and ".join(
                    f"the {e} {'stays ' + where(self.trends[e].azimuth.start_side) if self.trends[e].azimuth.lateral == 'static' else 'does not pass through the middle'}"
                    for e in misses)
            answer += "."
        tags = ["perception", "comparative"] if len(self.labels) > 1 else ["perception", "lateral"]
        return self.item(
            "Which source feels most noticeable near the middle of the scene and why?", "open", answer, tags,
            list(self.labels), ["crossing", "start", "end"],
            "A source that passes through or sits in the middle stands out there.",
            "The most central path draws the most attention in the middle.",
        )

    def open_wider_span(self) -> QAItem:
        ranks = {e: span_rank(self.trends[e]) for e in self.labels}
        top = max(ranks.values())
        leaders = [e for e in self.labels if ranks[e] == top]
        if top == -1:
            answer = "None of the sources sweeps from side to side, so the scene's balance stays fixed."
        elif len(leaders) > 1:
            answer = ("The " + " and the ".join(leaders) + " sweep equally widely, so the scene's movement is "
                      "shared between them.")
        else:
            w = leaders[0]
            rest = [e for e in self.labels if e != w]
            answer = (f"The {w} spans the widest left-right range with a {self.trends[w].azimuth.span_category} "
                      f"sweep, so it carries the scene's sideways movement")
            if rest:
                answer += ", while " + " and ".join(
                    f"the {e} {'stays in place' if ranks[e] == -1 else 'sweeps less widely'}" for e in rest)
            answer += "."
        return self.item(
            "Which source spans a wider left-right range, and how does that affect the scene's balance?", "open",
            answer, ["comparative", "lateral"], list(self.labels), ["span", "lateral"],
            "Comparing the sweeps shows which source spreads sound across more of the scene.",
            "A wider sweep spreads a source across more of the scene.",
        )

    def open_timing(self) -> QAItem:
        if len(self.labels) == 1:
            e = self.labels[0]
            return self.item(
                f"When is the {e} sound heard during the scene?", "open", self._single_timing(e), ["temporal"],
                [e], ["timing"], self._single_timing(e),
                "Its entry and exit mark when it is heard.",
            )
        text = self._timing_text(self.labels)
        return self.item(
            "Which event starts first, and do the sounds overlap in time?", "open", text,
            ["temporal", "sequencing"], list(self.labels), ["timing"], text,
            "The entry order and any shared moments settle the timing.",
        )


def _place(side: str) -> str:
    return "middle" if side == "center" else side


def _lateral_short(lateral: str) -> str:
    return {
        "left->right": "moving from left to right",
        "right->left": "moving from right to left",
        "static": "staying in place",
    }[lateral]


def _span_verdict(a: str, b: str, ans: str) -> str:
    if ans == NEITHER:
        return f"Neither the {a} nor the {b} sweeps from side to side."
    if ans == BOTH:
        return f"The {a} and the {b} sweep across similar ranges."
    other = b if ans == a else a
    return f"The {ans} sweeps across a wider range than the {other}."


def generate_qa(
    trends_map: dict[str, FrameTrends],
    scene_meta: SceneMetadata | None,
    rng_seed,
    mix: MixConstraints = MixConstraints(),
) -> QASet:
    """Generate a balanced, ground-truthable QA set for one scene.

    Yes/No items are split evenly between Yes and No answers by choosing
    which predicate to ask. Constraints a scene cannot satisfy (for example
    relative motion with a single event) are listed in ``waivers``.
    """
    if not trends_map:
        raise ValueError("need trends for at least one event")
    rng = np.random.default_rng(rng_seed)
    b = _Builder(trends_map, scene_meta, rng)
    labels = b.labels
    pairs = list(combinations(labels, 2))
    has_temporal = all(t.temporal is not None for t in trends_map.values())

    fixed: list[QAItem] = [b.yn_crossing(labels[0]), b.yn_arc(labels[0])]
    choosable = []
    for e in labels:
        choosable += [(b.yn_lateral, (e,)), (b.yn_radial, (e,)), (b.yn_combined, (e,))]
    choosable.append((b.yn_end_side, (labels[0],)))
    for a, c in pairs:
        fixed.append(b.yn_opposite(a, c) if a == pairs[0][0] and c == pairs[0][1] else b.yn_converge(a, c))
    if has_temporal:
        if pairs:
            fixed.append(b.yn_overlap(*pairs[0]))
            for a, c in pairs:
                if b.yn_starts_before(a, c, True) is not None:
                    choosable.append((b.yn_starts_before, (a, c)))
        else:
            fixed.append(b.yn_early_start(labels[0]))
    if len(pairs) >= 1:
        fixed.append(b.yn_converge(*pairs[0]))

    n_yes_fixed = sum(it.answer == YES for it in fixed)
    total = len(fixed) + len(choosable)
    target = total // 2 + (int(rng.integers(2)) if total % 2 else 0)
    n_yes = min(max(target - n_yes_fixed, 0), len(choosable))
    wants = np.zeros(len(choosable), dtype=bool)
    wants[rng.permutation(len(choosable))[:n_yes]] = True
    yes_no = [fn(*args, bool(w)) for (fn, args), w in zip(choosable, wants)] + fixed

    mc = [b.mc_lateral(labels[0]), b.mc_end_side(labels[0])]
    mc += [b.mc_radial(e) for e in labels]
    for a, c in pairs:
        mc.append(b.mc_wider_span(a, c))
    if pairs:
        mc.append(b.mc_stronger_distance(*pairs[0]))
        if has_temporal:
            mc.append(b.mc_first(labels))

    opened = [b.open_summary(e) for e in labels] + [b.open_path(labels[0])]
    for i, (a, c) in enumerate(pairs):
        opened.append(b.open_compare(a, c))
        if i == 0:
            opened += [b.open_converge(a, c), b.open_pattern(a, c)]
    opened += [b.open_choreography(), b.open_endpoints(), b.open_prominence()]
    if len(labels) > 1:
        opened.append(b.open_wider_span())
    if has_temporal:
        opened.append(b.open_timing())

    items = yes_no + mc + opened
    scene_id = b.scene_id
    for i, it in enumerate(items):
        it.id = f"{scene_id}_q{i:02d}"

    waivers = {}
    for name, (have, need) in unmet_constraints(items, mix).items():
        if name == "open_relative_motion" and len(labels) < 2:
            waivers[name] = "relative motion needs at least two events"
        elif name == "temporal" and not has_temporal:
            waivers[name] = "scene has no temporal information"
        else:
            waivers[name] = f"only {have} of {need} items could be generated"
    if len(labels) < 2:
        waivers.setdefault("comparative", "comparisons need at least two events")
    return QASet(scene_id, items, waivers)


def emit_generation_prompt(trends_map: dict[str, FrameTrends]) -> str:
    """The external-LLM generation prompt followed by the scene's trends as JSON."""
    if not trends_map:
        raise ValueError("trends map is empty")
    payload = json.dumps(trends_to_json(trends_map), indent=2, ensure_ascii=False)
    return f"{GENERATION_PROMPT}\n\nFrameTrends:\n{payload}\n"


def _extract_json_array(text: str):
    text = text.strip()
    fence = re.search(r"```(?:json)?\s*(.*?)```", text, re.S)
    if fence:
        text = fence.group(1).strip()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        start, end = text.find("["), text.rfind("]")
        if start < 0 or end <= start:
            raise QAValidationError("reply contains no JSON array") from None
        try:
            data = json.loads(text[start:end + 1])
        except json.JSONDecodeError as exc:
            raise QAValidationError(f"reply JSON is malformed: {exc.msg}") from None
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise QAValidationError("reply JSON must be an array of QA objects")
    return data


def parse_generation_reply(text: str, scene_labels=None, scene_id: str | None = None):
    """Parse an LLM reply into items.

    Returns ``(items, report)`` where ``report`` lists ``(index, reason)`` for
    every rejected object. Missing ``relevant_events`` are filled by keyword
    matching against ``scene_labels``.
    """
    items, report = [], []
    for i, obj in enumerate(_extract_json_array(text)):
        if not isinstance(obj, dict):
            report.append((i, "not a JSON object"))
            continue
        try:
            item = QAItem.from_json(obj)
        except (QAValidationError, TypeError, KeyError) as exc:
            report.append((i, str(exc)))
            continue
        if scene_id is not None and item.scene_id is None:
            item.scene_id = scene_id
        if not item.relevant_events and scene_labels:
            item.relevant_events = extract_query_events(item.question, list(scene_labels))
        probs = item.problems(scene_labels)
        if probs:
            report.append((i, "; ".join(probs)))
        else:
            items.append(item)
    return items, report


def thinking_texts(item: QAItem) -> list[str]:
    """Free-text parts of an item's reasoning (step, solution, final, rationale)."""
    out = []
    for s in item.thinking.steps:
        out += [s.step_text, s.solution_text]
    return out + [item.thinking.final_reasoning, item.rationale]
