"""Per-second dialogue act labels, class weights, and the training loss.

Each second of a conversation carries two labels: a high-level act (what the
utterance does) and a low-level act (how it manages the floor). Labels may be
missing; missing seconds are skipped by the loss. Class weights counteract
label imbalance via inverse frequency.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

P_CLAMP = 1e-12


class HighAct(IntEnum):
    CONSTATIVE = 0
    DIRECTIVE = 1
    COMMISSIVE = 2
    ACKNOWLEDGMENT = 3


class LowAct(IntEnum):
    TURN_TAKING = 0
    INTERRUPTION = 1
    BACKCHANNEL = 2
    CONTINUATION = 3


HIGH_NAMES = {
    HighAct.CONSTATIVE: "Constative",
    HighAct.DIRECTIVE: "Directive",
    HighAct.COMMISSIVE: "Commissive",
    HighAct.ACKNOWLEDGMENT: "Acknowledgment",
}
LOW_NAMES = {
    LowAct.TURN_TAKING: "TurnTaking",
    LowAct.INTERRUPTION: "Interruption",
    LowAct.BACKCHANNEL: "Backchannel",
    LowAct.CONTINUATION: "Continuation",
}
_HIGH_BY_NAME = {v: k for k, v in HIGH_NAMES.items()}
_LOW_BY_NAME = {v: k for k, v in LOW_NAMES.items()}

N_HIGH = 4


def low_act_classes(n_classes: int = 4) -> tuple[LowAct, ...]:
    """Class list for the low-level head. The 3-class mode drops Interruption
    (for corpora that do not annotate it)."""
    if n_classes == 4:
        return (LowAct.TURN_TAKING, LowAct.INTERRUPTION, LowAct.BACKCHANNEL,
                LowAct.CONTINUATION)
    if n_classes == 3:
        return (LowAct.TURN_TAKING, LowAct.BACKCHANNEL, LowAct.CONTINUATION)
    raise ValueError(f"n_classes must be 3 or 4, got {n_classes}")


def low_index(act: LowAct, n_classes: int = 4) -> int:
    classes = low_act_classes(n_classes)
    try:
        return classes.index(act)
    except ValueError:
        raise ValueError(f"{LOW_NAMES[act]} not available in {n_classes}-class mode") from None


def high_from_name(name: str) -> HighAct:
    try:
        return _HIGH_BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown high-level act {name!r}") from None


def low_from_name(name: str) -> LowAct:
    try:
        return _LOW_BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown low-level act {name!r}") from None


# floor-management acts, strongest claim first; a second showing several acts
# takes the strongest, and a second showing none is a continuation
_LOW_PRIORITY = (LowAct.BACKCHANNEL, LowAct.INTERRUPTION, LowAct.TURN_TAKING,
                 LowAct.CONTINUATION)


def resolve_low_label(events_at_second) -> LowAct:
    """Collapse the set of acts observed within one second to a single label."""
    acts = set(events_at_second)
    for act in acts:
        if not isinstance(act, LowAct):
            raise TypeError(f"expected LowAct values, got {act!r}")
    for act in _LOW_PRIORITY:
        if act in acts:
            return act
    return LowAct.CONTINUATION


@dataclass
class TimelinePoint:
    t: int
    hi: HighAct | None = None
    lo: LowAct | None = None
    p_hi: np.ndarray | None = None
    p_lo: np.ndarray | None = None


@dataclass
class LabelTimeline:
    """Per-second label sequence for one audio. t runs 0, 1, 2, ..."""

    audio_id: str
    points: list[TimelinePoint] = field(default_factory=list)

    def __post_init__(self):
        for i, p in enumerate(self.points):
            if p.t != i:
                raise ValueError(
                    f"{self.audio_id}: timeline t values must be consecutive from 0, "
                    f"got {p.t} at position {i}"
                )

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


@dataclass
class ClassWeights:
    """Per-class loss weights for both heads plus the head mixing factors."""

    w_hi: np.ndarray
    w_lo: np.ndarray
    alpha: float = 1.0
    beta: float = 1.0
    flags: tuple = ()

    def __post_init__(self):
        self.w_hi = np.asarray(self.w_hi, dtype=np.float64)
        self.w_lo = np.asarray(self.w_lo, dtype=np.float64)
        if self.w_hi.shape != (N_HIGH,):
            raise ValueError(f"w_hi must have shape ({N_HIGH},), got {self.w_hi.shape}")
        if self.w_lo.shape not in ((3,), (4,)):
            raise ValueError(f"w_lo must have 3 or 4 entries, got {self.w_lo.shape}")
        if (self.w_hi <= 0).any() or (self.w_lo <= 0).any():
            raise ValueError("class weights must be positive")

    @property
    def n_lo_classes(self) -> int:
        return len(self.w_lo)


def _inverse_frequency(counts: np.ndarray, head: str, names: list[str]) -> tuple[np.ndarray, list[str]]:
    n_labeled = counts.sum()
    if n_labeled == 0:
        raise ValueError(f"no labeled seconds for the {head} head")
    present = counts > 0
    raw = np.zeros(len(counts))
    raw[present] = n_labeled / counts[present]
    flags = []
    if (~present).any():
        raw[~present] = raw[present].max()
        flags = [f"zero-count:{head}:{names[i]}" for i in np.flatnonzero(~present)]
    # rescale so the count-weighted mean is exactly 1: the average weight
    # applied across labeled seconds, sum_c count_c * w_c / N, equals 1
    weights = raw * (n_labeled / float(np.dot(counts, raw)))
    return weights, flags


def inverse_frequency_weights(
    timeline, n_lo_classes: int = 4, alpha: float = 1.0, beta: float = 1.0
) -> ClassWeights:
    """Inverse-frequency class weights from labeled seconds.

    ``timeline`` is any iterable of TimelinePoint (a LabelTimeline works, as
    does a concatenation across files). Classes absent from the data receive
    the largest raw weight among present classes and are flagged. Each head's
    weights are rescaled so that sum_c count(c) * w_c equals the number of
    labeled seconds for that head.
    """
    counts_hi = np.zeros(N_HIGH, dtype=np.int64)
    counts_lo = np.zeros(n_lo_classes, dtype=np.int64)
    for p in timeline:
        if p.hi is not None:
            counts_hi[int(p.hi)] += 1
        if p.lo is not None:
            counts_lo[low_index(p.lo, n_lo_classes)] += 1
    hi_names = [HIGH_NAMES[c] for c in HighAct]
    lo_names = [LOW_NAMES[c] for c in low_act_classes(n_lo_classes)]
    w_hi, f_hi = _inverse_frequency(counts_hi, "high", hi_names)
    w_lo, f_lo = _inverse_frequency(counts_lo, "low", lo_names)
    return ClassWeights(w_hi=w_hi, w_lo=w_lo, alpha=alpha, beta=beta,
                        flags=tuple(f_hi + f_lo))


def weighted_ce_loss(p_hi: np.ndarray, p_lo: np.ndarray, timeline, weights: ClassWeights) -> float:
    """Class-weighted cross entropy summed over labeled seconds.

    loss = sum_i [ alpha * w_hi[y_hi] * (-log p_hi[i, y_hi])
                 + beta  * w_lo[y_lo] * (-log p_lo[i, y_lo]) ]

    Seconds with a missing label skip that head's term. Probabilities are
    clamped at 1e-12 before the log.
    """
    points = list(timeline)
    p_hi = np.asarray(p_hi, dtype=np.float64)
    p_lo = np.asarray(p_lo, dtype=np.float64)
    if p_hi.shape != (len(points), N_HIGH):
        raise ValueError(f"p_hi shape {p_hi.shape} does not match {len(points)} seconds")
    if p_lo.shape != (len(points), weights.n_lo_classes):
        raise ValueError(f"p_lo shape {p_lo.shape} does not match "
                         f"({len(points)}, {weights.n_lo_classes})")
    for name, p in (("p_hi", p_hi), ("p_lo", p_lo)):
        if p.size and np.abs(p.sum(axis=1) - 1.0).max() > 1e-6:
            raise ValueError(f"{name} rows must sum to 1 within 1e-6")
    loss = 0.0
    for i, point in enumerate(points):
        if point.hi is not None:
            loss += weights.alpha * weights.w_hi[int(point.hi)] * (
                -np.log(max(p_hi[i, int(point.hi)], P_CLAMP)))
        if point.lo is not None:
            j = low_index(point.lo, weights.n_lo_classes)
            loss += weights.beta * weights.w_lo[j] * (-np.log(max(p_lo[i, j], P_CLAMP)))
    return float(loss)


def event_distribution(timeline, n_lo_classes: int = 4) -> dict:
    """Percentage of each low-level act among labeled seconds."""
    classes = low_act_classes(n_lo_classes)
    counts = {c: 0 for c in classes}
    for p in timeline:
        if p.lo is not None:
            if p.lo not in counts:
                raise ValueError(f"{LOW_NAMES[p.lo]} not available in {n_lo_classes}-class mode")
            counts[p.lo] += 1
    total = sum(counts.values())
    if total == 0:
        raise ValueError("no low-level labels in timeline")
    return {c: 100.0 * counts[c] / total for c in classes}


def write_timelines(timelines, path) -> None:
    """One {audio_id, t, hi, lo} record per second; missing labels are null."""
    with open(path, "w") as fh:
        for tl in timelines:
            for p in tl.points:
                fh.write(json.dumps({
                    "audio_id": tl.audio_id,
                    "t": p.t,
                    "hi": HIGH_NAMES[p.hi] if p.hi is not None else None,
                    "lo": LOW_NAMES[p.lo] if p.lo is not None else None,
                }) + "\n")


def read_timelines(path) -> "OrderedDict[str, LabelTimeline]":
    """Parse a label JSONL into one LabelTimeline per audio_id."""
    groups: OrderedDict[str, list[TimelinePoint]] = OrderedDict()
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                audio_id = rec["audio_id"]
                t = int(rec["t"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed label record: {exc}") from exc
            hi = high_from_name(rec["hi"]) if rec.get("hi") is not None else None
            lo = low_from_name(rec["lo"]) if rec.get("lo") is not None else None
            groups.setdefault(audio_id, []).append(TimelinePoint(t=t, hi=hi, lo=lo))
    out: OrderedDict[str, LabelTimeline] = OrderedDict()
    for audio_id, points in groups.items():
        points.sort(key=lambda p: p.t)
        out[audio_id] = LabelTimeline(audio_id=audio_id, points=points)
    return out
