"""Turn scripts to stereo dialogue audio with aligned per-second labels.

A script line looks like

    (3) speaker2(interruption): You can't be serious. {Directives}

speaker1 renders to the left channel, speaker2 to the right. A bracket
marker ``[interruption]`` / ``[backchannel]`` inside an utterance's text
pins where the *next* line's event child cuts in: the child starts at the
proportional position of the marker within the parent's clip. An
interruption truncates the parent shortly after the child starts (with a
short fade-out); a backchannel leaves the parent untouched. Non-event turns
run sequentially with a fixed gap.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass

import numpy as np

from .audio_io import DuplexAudio, load_duplex
from .behavior_labels import (
    HIGH_NAMES,
    HighAct,
    LabelTimeline,
    LowAct,
    TimelinePoint,
    resolve_low_label,
)

SPEAKER_CHANNEL = {"speaker1": "left", "speaker2": "right"}
EVENT_KINDS = ("interruption", "backchannel")
SOFT_CLIP_KNEE = 0.8
FADE_MS = 50.0

INTENT_TAGS = {
    "Constatives": HighAct.CONSTATIVE, "Constative": HighAct.CONSTATIVE,
    "Directives": HighAct.DIRECTIVE, "Directive": HighAct.DIRECTIVE,
    "Commissives": HighAct.COMMISSIVE, "Commissive": HighAct.COMMISSIVE,
    "Acknowledgments": HighAct.ACKNOWLEDGMENT, "Acknowledgment": HighAct.ACKNOWLEDGMENT,
}
_INTENT_RENDER = {
    HighAct.CONSTATIVE: "Constatives", HighAct.DIRECTIVE: "Directives",
    HighAct.COMMISSIVE: "Commissives", HighAct.ACKNOWLEDGMENT: "Acknowledgments",
}

_LINE_RE = re.compile(r"^\((\d+)\)\s+(\w+)(?:\((\w+)\))?\s*:\s*(.*)$")
_INTENT_RE = re.compile(r"\{(\w+)\}\s*$")
_MARKER_RE = re.compile(r"\[(interruption|backchannel)\]")


class ScriptError(ValueError):
    """Raised for scripts that violate the turn grammar."""


@dataclass
class ScriptUtterance:
    """One parsed script line.

    ``marker``/``own_marker_offset`` describe a bracket marker found in this
    utterance's own text (the cue for the next line); ``marker_offset`` is
    set on event children and indexes the *parent's* cleaned text.
    """

    index: int
    speaker: str
    text: str
    intent: HighAct
    event: str | None = None
    marker: str | None = None
    own_marker_offset: int | None = None
    marker_offset: int | None = None


def _strip_marker(spoken: str, line_no: int) -> tuple[str, str | None, int | None]:
    matches = list(_MARKER_RE.finditer(spoken))
    if not matches:
        return spoken, None, None
    if len(matches) > 1:
        raise ScriptError(f"line {line_no}: more than one event marker")
    m = matches[0]
    # drop the marker plus one side's whitespace so word spacing survives;
    # the offset indexes the cleaned text at the insertion point
    before = spoken[:m.start()].rstrip()
    after = spoken[m.end():].lstrip()
    if before and after:
        return before + " " + after, m.group(1), len(before) + 1
    return before + after, m.group(1), len(before)


def parse_script(text: str) -> list[ScriptUtterance]:
    """Parse a dialogue script, validating the grammar strictly.

    Indices must run 1..N; a line marked ``(interruption)`` or
    ``(backchannel)`` must immediately follow a line whose text carries the
    matching bracket marker, and every marker must be answered by such a
    line.
    """
    utterances: list[ScriptUtterance] = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise ScriptError(
                f"line {line_no}: does not match '(N) speaker: text {{Intent}}'")
        index, speaker, event, body = (int(m.group(1)), m.group(2), m.group(3),
                                       m.group(4))
        if speaker not in SPEAKER_CHANNEL:
            raise ScriptError(f"line {line_no}: unknown speaker {speaker!r}")
        if event is not None and event not in EVENT_KINDS:
            raise ScriptError(f"line {line_no}: unknown event {event!r}")
        if index != len(utterances) + 1:
            raise ScriptError(
                f"line {line_no}: expected index {len(utterances) + 1}, got {index}")
        im = _INTENT_RE.search(body)
        if not im:
            raise ScriptError(f"line {line_no}: missing intent tag")
        if im.group(1) not in INTENT_TAGS:
            raise ScriptError(f"line {line_no}: unknown intent {im.group(1)!r}")
        spoken = body[:im.start()].strip()
        clean, marker, own_offset = _strip_marker(spoken, line_no)

        prev = utterances[-1] if utterances else None
        marker_offset = None
        if event is not None:
            if prev is None or prev.marker != event:
                raise ScriptError(
                    f"line {line_no}: ({event}) without a [{event}] marker "
                    f"in the previous line")
            marker_offset = prev.own_marker_offset
        elif prev is not None and prev.marker is not None:
            raise ScriptError(
                f"line {line_no}: previous line's [{prev.marker}] marker has "
                f"no matching event line")
        utterances.append(ScriptUtterance(
            index=index, speaker=speaker, text=clean, intent=INTENT_TAGS[im.group(1)],
            event=event, marker=marker, own_marker_offset=own_offset,
            marker_offset=marker_offset,
        ))
    if utterances and utterances[-1].marker is not None:
        raise ScriptError("final line's event marker has no matching event line")
    return utterances


def render_script(utterances) -> str:
    """Inverse of parse_script (used by generators and round-trip tests)."""
    lines = []
    for utt in utterances:
        event = f"({utt.event})" if utt.event else ""
        text = utt.text
        if utt.marker is not None:
            pos = utt.own_marker_offset
            text = (text[:pos].rstrip() + f" [{utt.marker}] " + text[pos:].lstrip()).strip()
        lines.append(f"({utt.index}) {utt.speaker}{event}: {text} "
                     f"{{{_INTENT_RENDER[utt.intent]}}}")
    return "\n".join(lines)


@dataclass
class PlannedUtterance:
    index: int
    speaker: str
    channel: str
    start_ms: float
    clip_ms: float
    audible_ms: float
    intent: HighAct
    event: str | None = None
    parent_index: int | None = None

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.audible_ms


@dataclass
class StitchPlan:
    placements: list
    inter_turn_gap_ms: float
    interruption_cut_ms: float

    @property
    def total_ms(self) -> float:
        return max((p.end_ms for p in self.placements), default=0.0)

    def as_dict(self) -> dict:
        return {
            "inter_turn_gap_ms": self.inter_turn_gap_ms,
            "interruption_cut_ms": self.interruption_cut_ms,
            "total_ms": self.total_ms,
            "placements": [
                {
                    "index": p.index, "speaker": p.speaker, "channel": p.channel,
                    "start_ms": p.start_ms, "clip_ms": p.clip_ms,
                    "audible_ms": p.audible_ms, "intent": HIGH_NAMES[p.intent],
                    "event": p.event, "parent_index": p.parent_index,
                }
                for p in self.placements
            ],
        }


def plan_timestamps(
    script,
    durations_ms,
    inter_turn_gap_ms: float = 200.0,
    interruption_cut_ms: float = 300.0,
) -> StitchPlan:
    """Assign start times and audible extents to every utterance.

    Non-event turns start one gap after everything placed so far has ended.
    An event child starts at parent_start + parent_clip * (marker_offset /
    len(parent_text)), which must land strictly inside the parent. An
    interruption truncates its parent ``interruption_cut_ms`` after the
    child starts; a backchannel never truncates.
    """
    script = list(script)
    durations = [float(d) for d in durations_ms]
    if len(durations) != len(script):
        raise ValueError(f"{len(durations)} durations for {len(script)} utterances")
    if any(d <= 0 for d in durations):
        raise ValueError("clip durations must be positive")
    placements: list[PlannedUtterance] = []
    prev_utt = None
    for utt, clip_ms in zip(script, durations):
        if utt.event is None:
            cursor = max((p.end_ms for p in placements), default=None)
            start = 0.0 if cursor is None else cursor + inter_turn_gap_ms
        else:
            parent = placements[-1]  # grammar pins the child right after its parent
            if utt.marker_offset is None or not prev_utt.text:
                raise ScriptError(
                    f"utterance {utt.index}: event child needs a positioned "
                    f"marker in a non-empty parent text")
            frac = utt.marker_offset / len(prev_utt.text)
            if not 0.0 < frac < 1.0:
                raise ScriptError(
                    f"utterance {utt.index}: marker must fall strictly inside "
                    f"the parent text")
            start = parent.start_ms + parent.clip_ms * frac
            if utt.event == "interruption":
                cut = start + interruption_cut_ms - parent.start_ms
                parent.audible_ms = min(parent.audible_ms, cut)
        placements.append(PlannedUtterance(
            index=utt.index, speaker=utt.speaker,
            channel=SPEAKER_CHANNEL[utt.speaker], start_ms=start, clip_ms=clip_ms,
            audible_ms=clip_ms, intent=utt.intent, event=utt.event,
            parent_index=utt.index - 1 if utt.event else None,
        ))
        prev_utt = utt
    return StitchPlan(placements=placements, inter_turn_gap_ms=inter_turn_gap_ms,
                      interruption_cut_ms=interruption_cut_ms)


def soft_clip(x: np.ndarray, knee: float = SOFT_CLIP_KNEE) -> np.ndarray:
    """Identity below the knee, tanh compression above; |output| < 1."""
    y = np.asarray(x, dtype=np.float64).copy()
    over = np.abs(y) > knee
    span = 1.0 - knee
    y[over] = np.sign(y[over]) * (knee + span * np.tanh((np.abs(y[over]) - knee) / span))
    return y


def stitch(plan: StitchPlan, clips, sample_rate: int) -> DuplexAudio:
    """Mix the clips onto their channels per the plan.

    Truncated parents get a linear fade over the last FADE_MS of their
    audible extent; channel sums are soft-clipped to (-1, 1).
    """
    if len(clips) != len(plan.placements):
        raise ValueError(f"{len(clips)} clips for {len(plan.placements)} placements")
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    for p, clip in zip(plan.placements, clips):
        actual_ms = 1000.0 * len(clip) / sample_rate
        if abs(actual_ms - p.clip_ms) > 1.0:
            raise ValueError(
                f"utterance {p.index}: clip is {actual_ms:.1f} ms, plan says "
                f"{p.clip_ms:.1f} ms")
    n_total = int(math.ceil(plan.total_ms * sample_rate / 1000.0))
    channels = {"left": np.zeros(n_total), "right": np.zeros(n_total)}
    fade_n = int(round(FADE_MS * sample_rate / 1000.0))
    for p, clip in zip(plan.placements, clips):
        snippet = np.asarray(clip, dtype=np.float64)
        n_audible = int(round(p.audible_ms * sample_rate / 1000.0))
        if n_audible < len(snippet):
            snippet = snippet[:n_audible].copy()
            ramp = min(fade_n, len(snippet))
            if ramp:
                snippet[-ramp:] *= np.linspace(1.0, 0.0, ramp)
        start = int(round(p.start_ms * sample_rate / 1000.0))
        end = min(start + len(snippet), n_total)
        channels[p.channel][start:end] += snippet[: end - start]
    return DuplexAudio(sample_rate, soft_clip(channels["left"]),
                       soft_clip(channels["right"]))


def _turn_change_seconds(plan: StitchPlan) -> set:
    """Seconds containing a floor change: a non-backchannel utterance whose
    speaker differs from the previous floor holder."""
    seconds = set()
    prev_speaker = None
    for p in plan.placements:
        if p.event == "backchannel":
            continue
        if prev_speaker is not None and p.speaker != prev_speaker:
            seconds.add(int(p.start_ms // 1000))
        prev_speaker = p.speaker
    return seconds


def emit_labels(plan: StitchPlan, audio_id: str = "stitched") -> LabelTimeline:
    """Per-second labels for the planned dialogue.

    Low level: backchannel child audible in the second beats interruption
    beats a floor change beats continuation. High level: the intent of the
    utterance covering most of the second (earlier index wins ties); a
    second no utterance touches has no high label.
    """
    n_seconds = int(math.ceil(plan.total_ms / 1000.0))
    turn_seconds = _turn_change_seconds(plan)
    points = []
    for t in range(n_seconds):
        w0, w1 = t * 1000.0, (t + 1) * 1000.0
        acts = set()
        if t in turn_seconds:
            acts.add(LowAct.TURN_TAKING)
        best_cover, best = 0.0, None
        for p in plan.placements:
            cover = min(w1, p.end_ms) - max(w0, p.start_ms)
            if cover <= 0:
                continue
            if p.event == "backchannel":
                acts.add(LowAct.BACKCHANNEL)
            elif p.event == "interruption":
                acts.add(LowAct.INTERRUPTION)
            if cover > best_cover:
                best_cover, best = cover, p
        points.append(TimelinePoint(
            t=t,
            hi=best.intent if best is not None else None,
            lo=resolve_low_label(acts),
        ))
    return LabelTimeline(audio_id=audio_id, points=points)


def save_plan(plan: StitchPlan, path) -> None:
    with open(path, "w") as fh:
        json.dump(plan.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_clip_manifest(path) -> list:
    """Clip manifest JSONL: {index, path, duration_ms?}, indices 1..N."""
    entries = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                entries.append((int(rec["index"]), rec["path"],
                                rec.get("duration_ms")))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed manifest record: {exc}") from exc
    entries.sort(key=lambda e: e[0])
    if [e[0] for e in entries] != list(range(1, len(entries) + 1)):
        raise ValueError(f"{path}: manifest indices must run 1..N")
    return entries


def load_clip(path) -> tuple[np.ndarray, int]:
    """Mono clip samples and rate; stereo files are mean-downmixed (warned)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # mono duplication warning is expected here
        audio = load_duplex(path)
    if audio.mono_duplicated:
        return audio.left, audio.sample_rate
    warnings.warn(f"{path}: stereo clip downmixed to mono")
    return 0.5 * (audio.left + audio.right), audio.sample_rate
