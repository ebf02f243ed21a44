"""Frame-level voice activity and turn-taking events.

A channel's speech is segmented into inter-pausal units (IPUs): maximal
voiced stretches whose internal silences are short enough to bridge. Joint
silences between IPUs become Pause (same speaker resumes) or Gap (the floor
changes hands); simultaneous speech on both channels becomes Overlap.
Per-corpus rates and cumulative percentages summarize the event stream.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .audio_io import DuplexAudio

EVENT_KINDS = ("IPU", "Pause", "Gap", "Overlap")
CHANNELS = ("left", "right", "both")

# Display reference: turn-event rates of the simulation corpus this toolkit's
# reports are compared against (count/min, cumulative %). Not used in any
# computation.
SIMULATION_REFERENCE = {
    "IPU": (23.06, 84.7),
    "Pause": (10.7, 9.6),
    "Gap": (7.3, 1.6),
    "Overlap": (6.7, 4.2),
}


@dataclass(frozen=True)
class TurnEvent:
    kind: str
    channel: str
    start_ms: float
    end_ms: float

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if not self.end_ms > self.start_ms:
            raise ValueError(f"empty or negative event [{self.start_ms}, {self.end_ms})")

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms


@dataclass
class VadMask:
    """Per-channel boolean voicing at a fixed frame size."""

    frame_ms: float
    left: np.ndarray
    right: np.ndarray
    flags: tuple = ()

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=bool)
        self.right = np.asarray(self.right, dtype=bool)
        if len(self.left) != len(self.right):
            raise ValueError("channel frame counts differ")

    @property
    def n_frames(self) -> int:
        return len(self.left)

    @property
    def total_ms(self) -> float:
        return self.n_frames * self.frame_ms

    def channel(self, name: str) -> np.ndarray:
        return self.left if name == "left" else self.right


def compute_vad(audio: DuplexAudio, frame_ms: float = 20.0, threshold: float = 0.1) -> VadMask:
    """Energy VAD: a frame is voiced iff its RMS exceeds threshold times the
    channel's 95th-percentile frame RMS.

    An all-zero channel yields all-unvoiced frames and is flagged rather than
    raising. ``threshold`` must lie in (0, 1).
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    if not 10.0 <= frame_ms <= 50.0:
        raise ValueError(f"frame_ms must lie in [10, 50], got {frame_ms}")
    frame_len = int(round(audio.sample_rate * frame_ms / 1000.0))
    if frame_len <= 0:
        raise ValueError(f"frame_ms {frame_ms} too small for rate {audio.sample_rate}")
    n_frames = audio.n_samples // frame_len
    if n_frames == 0:
        raise ValueError("audio shorter than one VAD frame")
    flags = []
    voiced = {}
    for name in ("left", "right"):
        x = audio.channel(name)[: n_frames * frame_len].reshape(n_frames, frame_len)
        rms = np.sqrt(np.mean(x * x, axis=1))
        ref = np.percentile(rms, 95)
        if ref == 0.0:
            flags.append(f"silent-{name}")
        voiced[name] = rms > threshold * ref
    return VadMask(frame_ms=frame_ms, left=voiced["left"], right=voiced["right"],
                   flags=tuple(flags))


def _voiced_runs(frames: np.ndarray, frame_ms: float) -> list[tuple[float, float]]:
    """Maximal voiced frame runs as [start_ms, end_ms) intervals."""
    runs = []
    start = None
    for i, v in enumerate(frames):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start * frame_ms, i * frame_ms))
            start = None
    if start is not None:
        runs.append((start * frame_ms, len(frames) * frame_ms))
    return runs


def _merge_runs(runs: list[tuple[float, float]], min_silence_ms: float) -> list[tuple[float, float]]:
    # silences of exactly min_silence_ms merge; strictly longer ones split
    merged: list[list[float]] = []
    for s, e in runs:
        if merged and s - merged[-1][1] <= min_silence_ms:
            merged[-1][1] = e
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def segment_ipus(mask: VadMask, min_silence_ms: float = 200.0) -> list[TurnEvent]:
    """IPUs of both channels: voiced stretches merged across internal
    silences of at most ``min_silence_ms``. Sorted by (start, channel)."""
    if min_silence_ms < 0:
        raise ValueError("min_silence_ms must be non-negative")
    events = []
    for name in ("left", "right"):
        runs = _merge_runs(_voiced_runs(mask.channel(name), mask.frame_ms), min_silence_ms)
        events.extend(TurnEvent("IPU", name, s, e) for s, e in runs)
    events.sort(key=lambda ev: (ev.start_ms, ev.channel))
    return events


def _union(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[list[float]] = []
    for s, e in sorted(intervals):
        if out and s <= out[-1][1]:
            out[-1][1] = max(out[-1][1], e)
        else:
            out.append([s, e])
    return [(s, e) for s, e in out]


def classify_events(
    ipus_left: list[TurnEvent],
    ipus_right: list[TurnEvent],
    total_ms: float,
) -> list[TurnEvent]:
    """Classify the spaces between and across IPUs.

    Returns the full event stream: the input IPUs plus

    * Overlap: every intersection of a left IPU with a right IPU ("both");
    * Pause: a joint silence released and resumed by the same channel;
    * Gap: a joint silence across which the floor changes hands.

    Leading and trailing silences produce no event. Ties, i.e. both channels
    releasing the floor at the same instant or resuming at the same instant,
    classify as Gap.
    """
    lefts = [(ev.start_ms, ev.end_ms) for ev in ipus_left]
    rights = [(ev.start_ms, ev.end_ms) for ev in ipus_right]
    for s, e in lefts + rights:
        if s < 0 or e > total_ms:
            raise ValueError(f"IPU [{s}, {e}) outside [0, {total_ms})")

    events = list(ipus_left) + list(ipus_right)

    for ls, le in lefts:
        for rs, re in rights:
            s, e = max(ls, rs), min(le, re)
            if e > s:
                events.append(TurnEvent("Overlap", "both", s, e))

    # joint silences = complement of the IPU union; classify by who released
    # the floor (IPU ending at the silence start) vs who takes it next
    ends = {}
    starts = {}
    for name, ivs in (("left", lefts), ("right", rights)):
        for s, e in ivs:
            ends.setdefault(e, set()).add(name)
            starts.setdefault(s, set()).add(name)
    cursor = 0.0
    for s, e in _union(lefts + rights) + [(total_ms, total_ms)]:
        if s > cursor and cursor > 0:  # cursor == 0 would be a leading silence
            if s < total_ms:  # reaching total_ms would be a trailing silence
                prev = ends.get(cursor, set())
                nxt = starts.get(s, set())
                if len(prev) == 1 and prev == nxt:
                    events.append(TurnEvent("Pause", next(iter(prev)), cursor, s))
                else:
                    events.append(TurnEvent("Gap", "both", cursor, s))
        cursor = max(cursor, e)

    events.sort(key=lambda ev: (ev.start_ms, EVENT_KINDS.index(ev.kind), ev.end_ms, ev.channel))
    return events


def extract_events(mask: VadMask, min_silence_ms: float = 200.0) -> list[TurnEvent]:
    """segment_ipus + classify_events in one step."""
    ipus = segment_ipus(mask, min_silence_ms)
    return classify_events(
        [ev for ev in ipus if ev.channel == "left"],
        [ev for ev in ipus if ev.channel == "right"],
        mask.total_ms,
    )


@dataclass
class CorpusStats:
    """Event counts and durations over a corpus, reported as rates."""

    counts: dict
    durations_ms: dict
    total_ms: float
    flags: tuple = ()

    @classmethod
    def from_events(cls, events, total_ms: float) -> "CorpusStats":
        counts = {k: 0 for k in EVENT_KINDS}
        durations = {k: 0.0 for k in EVENT_KINDS}
        for ev in events:
            counts[ev.kind] += 1
            durations[ev.kind] += ev.duration_ms
        flags = ("empty",) if not events or total_ms <= 0 else ()
        return cls(counts=counts, durations_ms=durations, total_ms=float(total_ms), flags=flags)

    def count_per_minute(self, kind: str) -> float:
        if self.total_ms <= 0:
            return 0.0
        return 60000.0 * self.counts[kind] / self.total_ms

    def cumulative_pct(self, kind: str) -> float:
        if self.total_ms <= 0:
            return 0.0
        return 100.0 * self.durations_ms[kind] / self.total_ms

    @property
    def total_duration_s(self) -> float:
        return self.total_ms / 1000.0

    def as_dict(self) -> dict:
        return {
            "total_duration_s": self.total_duration_s,
            "events": {
                kind: {
                    "count": self.counts[kind],
                    "count_per_minute": self.count_per_minute(kind),
                    "cumulative_pct": self.cumulative_pct(kind),
                }
                for kind in EVENT_KINDS
            },
            "flags": list(self.flags),
        }


def corpus_stats(events, total_ms: float) -> CorpusStats:
    return CorpusStats.from_events(events, total_ms)


def merge_stats(stats: list[CorpusStats]) -> CorpusStats:
    """Duration-weighted merge: summed counts and durations over summed time."""
    if not stats:
        return CorpusStats(
            counts={k: 0 for k in EVENT_KINDS},
            durations_ms={k: 0.0 for k in EVENT_KINDS},
            total_ms=0.0,
            flags=("empty",),
        )
    counts = {k: sum(s.counts[k] for s in stats) for k in EVENT_KINDS}
    durations = {k: sum(s.durations_ms[k] for s in stats) for k in EVENT_KINDS}
    total = sum(s.total_ms for s in stats)
    flags = tuple(sorted(set().union(*(s.flags for s in stats))))
    return CorpusStats(counts=counts, durations_ms=durations, total_ms=total, flags=flags)


def stats_report(stats: CorpusStats) -> dict:
    """Table-shaped report: measured rates beside the simulation reference row."""
    report = stats.as_dict()
    report["reference"] = {
        kind: {"count_per_minute": cpm, "cumulative_pct": pct}
        for kind, (cpm, pct) in SIMULATION_REFERENCE.items()
    }
    return report


def write_events(events, path) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps({
                "kind": ev.kind, "channel": ev.channel,
                "start_ms": ev.start_ms, "end_ms": ev.end_ms,
            }) + "\n")


def read_events(path) -> list[TurnEvent]:
    events = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                events.append(TurnEvent(rec["kind"], rec["channel"],
                                        float(rec["start_ms"]), float(rec["end_ms"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed event record: {exc}") from exc
    return events


def write_vad_mask(mask: VadMask, path) -> None:
    with open(path, "w") as fh:
        for name in ("left", "right"):
            fh.write(json.dumps({
                "channel": name,
                "frame_ms": mask.frame_ms,
                "frames": [int(v) for v in mask.channel(name)],
            }) + "\n")


def load_vad_mask(path) -> VadMask:
    """Read a two-record JSONL mask. Channel length mismatch truncates to the
    shorter channel with a warning; mismatched frame_ms is an error."""
    records = {}
    frame_ms = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                name = rec["channel"]
                frames = np.asarray(rec["frames"], dtype=bool)
                fm = float(rec["frame_ms"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed mask record: {exc}") from exc
            if name not in ("left", "right"):
                raise ValueError(f"{path}:{line_no}: unknown channel {name!r}")
            if frame_ms is None:
                frame_ms = fm
            elif fm != frame_ms:
                raise ValueError(f"{path}: mismatched frame_ms ({frame_ms} vs {fm})")
            records[name] = frames
    if set(records) != {"left", "right"}:
        raise ValueError(f"{path}: expected one record per channel, got {sorted(records)}")
    n = min(len(records["left"]), len(records["right"]))
    if len(records["left"]) != len(records["right"]):
        warnings.warn(f"{path}: channel frame counts differ, truncating to {n}")
    return VadMask(frame_ms=frame_ms, left=records["left"][:n], right=records["right"][:n])
