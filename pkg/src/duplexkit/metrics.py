"""Text-overlap metrics, classifier scoring, and speaking-style measures.

Everything here is deliberately reference-grade rather than clever: plain
clipped-unigram BLEU-1, DP ROUGE-L, term-frequency cosine, rank-statistic
AUC. Reports carry named scalars, optional per-class breakdowns, optional
confidence intervals, and data-quality flags.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter, OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

# Display reference: speaking-style rows reports are compared against.
SIMULATION_SPEAKING_STYLE = {"wpm": 240.8, "fwr": 6.89}
DGSLM_SPEAKING_STYLE = {"wpm": 211.98, "fwr": 5.5}

# Filler inventory; multi-word entries are matched as token n-grams.
DEFAULT_FILLERS = frozenset({
    "uh-huh", "yeah", "okay", "um", "uh", "mm-hmm", "like", "you know",
    "right", "hmm",
})

_TOKEN_RE = re.compile(r"[^\W_]+(?:['’\-][^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; punctuation stripped except hyphens and
    apostrophes inside a word ("uh-huh", "don't" stay whole)."""
    return _TOKEN_RE.findall(text.lower())


def load_filler_lexicon(path) -> frozenset:
    with open(path) as fh:
        entries = {line.strip().lower() for line in fh if line.strip()}
    if not entries:
        raise ValueError(f"empty filler lexicon at {path}")
    return frozenset(entries)


def count_fillers(tokens, lexicon=DEFAULT_FILLERS) -> int:
    """Filler occurrences among tokens. A multi-word lexicon entry counts one
    occurrence per n-gram match."""
    singles = {e for e in lexicon if " " not in e}
    ngrams = [tuple(e.split()) for e in lexicon if " " in e]
    count = sum(1 for t in tokens if t in singles)
    for gram in ngrams:
        k = len(gram)
        count += sum(1 for i in range(len(tokens) - k + 1)
                     if tuple(tokens[i:i + k]) == gram)
    return count


def _clipped_matches(candidate, reference) -> int:
    cand, ref = Counter(candidate), Counter(reference)
    return sum(min(n, ref[w]) for w, n in cand.items())


def bleu1(candidate, reference) -> float:
    """Unigram BLEU: clipped precision times the brevity penalty
    exp(min(0, 1 - |ref|/|cand|)). No smoothing; empty candidate scores 0."""
    if len(candidate) == 0:
        return 0.0
    precision = _clipped_matches(candidate, reference) / len(candidate)
    bp = math.exp(min(0.0, 1.0 - len(reference) / len(candidate)))
    return precision * bp


def rouge1(candidate, reference) -> float:
    """Harmonic mean of clipped unigram precision and recall."""
    if len(candidate) == 0 or len(reference) == 0:
        return 0.0
    matches = _clipped_matches(candidate, reference)
    p = matches / len(candidate)
    r = matches / len(reference)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _lcs_length(a, b) -> int:
    # one-row DP over the shorter second axis
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate, reference) -> float:
    """LCS-based F1 (equal precision/recall weighting)."""
    if len(candidate) == 0 or len(reference) == 0:
        return 0.0
    lcs = _lcs_length(list(candidate), list(reference))
    p = lcs / len(candidate)
    r = lcs / len(reference)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def cosine_similarity(vec_a, vec_b) -> float:
    """Cosine of two vectors; 0.0 when either has zero norm."""
    a = np.asarray(vec_a, dtype=np.float64)
    b = np.asarray(vec_b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def text_similarity(candidate, reference) -> float:
    """Cosine over term-frequency vectors on the union vocabulary (the
    fallback used when no embeddings are supplied)."""
    vocab = sorted(set(candidate) | set(reference))
    ca, cb = Counter(candidate), Counter(reference)
    a = np.array([ca[w] for w in vocab], dtype=np.float64)
    b = np.array([cb[w] for w in vocab], dtype=np.float64)
    return cosine_similarity(a, b)


@dataclass
class MetricReport:
    """Named scalar metrics plus optional per-class rows, CIs, and flags."""

    metrics: dict
    per_class: dict | None = None
    ci: dict | None = None
    extra: dict = field(default_factory=dict)
    flags: tuple = ()

    def as_dict(self) -> dict:
        out = {"metrics": self.metrics}
        if self.per_class is not None:
            out["per_class"] = self.per_class
        if self.ci is not None:
            out["ci"] = {k: list(v) for k, v in self.ci.items()}
        if self.extra:
            out.update(self.extra)
        out["flags"] = list(self.flags)
        return out

    def render(self) -> str:
        lines = []
        width = max((len(k) for k in self.metrics), default=0)
        for name, value in self.metrics.items():
            shown = "n/a" if value is None else f"{value:.4f}"
            ci = ""
            if self.ci and name in self.ci:
                lo, hi = self.ci[name]
                ci = f"  [{lo:.4f}, {hi:.4f}]"
            lines.append(f"{name.ljust(width)}  {shown}{ci}")
        if self.per_class:
            lines.append("")
            cols = ["class", "precision", "recall", "f1", "auc", "support"]
            rows = [cols]
            for name, row in self.per_class.items():
                auc = row.get("auc")
                rows.append([
                    str(name), f"{row['precision']:.4f}", f"{row['recall']:.4f}",
                    f"{row['f1']:.4f}", "n/a" if auc is None else f"{auc:.4f}",
                    str(row["support"]),
                ])
            widths = [max(len(r[j]) for r in rows) for j in range(len(cols))]
            for r in rows:
                lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
        for key, value in self.extra.items():
            lines.append(f"{key}: {value}")
        if self.flags:
            lines.append("flags: " + ", ".join(self.flags))
        return "\n".join(lines)


@dataclass
class ScoredPrediction:
    true_class: int
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 1:
            raise ValueError("scores must be a 1-d class-score vector")


def _rank_auc(pos_neg: np.ndarray, scores: np.ndarray) -> float:
    """One-vs-rest AUC via average ranks (the Mann-Whitney U statistic)."""
    ranks = rankdata(scores, method="average")
    n_pos = int(pos_neg.sum())
    n_neg = len(pos_neg) - n_pos
    rank_sum = ranks[pos_neg].sum()
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def classification_report(preds, class_names=None) -> MetricReport:
    """One-vs-rest precision/recall/F1 and rank AUC per class, plus macro,
    support-weighted, and micro (= accuracy) aggregates.

    Classes that never appear as positives or never as negatives have no
    defined AUC; they are excluded from macro-AUC and flagged. Predicted
    class is the argmax of the score vector (lowest index wins ties).
    """
    preds = list(preds)
    if not preds:
        raise ValueError("no predictions to score")
    n_classes = len(preds[0].scores)
    for p in preds:
        if len(p.scores) != n_classes:
            raise ValueError("inconsistent score vector lengths")
        if not 0 <= p.true_class < n_classes:
            raise ValueError(f"true class {p.true_class} out of range 0..{n_classes - 1}")
    if class_names is None:
        class_names = [str(c) for c in range(n_classes)]
    true = np.array([p.true_class for p in preds])
    scores = np.stack([p.scores for p in preds])
    predicted = scores.argmax(axis=1)

    per_class = OrderedDict()
    flags = []
    f1s, supports, aucs = [], [], []
    for c in range(n_classes):
        tp = int(((predicted == c) & (true == c)).sum())
        fp = int(((predicted == c) & (true != c)).sum())
        fn = int(((predicted != c) & (true == c)).sum())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        support = int((true == c).sum())
        pos = true == c
        if 0 < support < len(preds):
            auc = _rank_auc(pos, scores[:, c])
            aucs.append(auc)
        else:
            auc = None
            flags.append(f"auc-undefined:{class_names[c]}")
        if support == 0:
            flags.append(f"zero-support:{class_names[c]}")
        per_class[class_names[c]] = {
            "precision": precision, "recall": recall, "f1": f1,
            "auc": auc, "support": support,
        }
        f1s.append(f1)
        supports.append(support)
    total = sum(supports)
    accuracy = float((predicted == true).mean())
    metrics = OrderedDict([
        ("accuracy", accuracy),
        ("micro_f1", accuracy),  # single-label: pooled P = R = accuracy
        ("macro_f1", float(np.mean(f1s))),
        ("weighted_f1", float(np.dot(f1s, supports) / total)),
        ("macro_auc", float(np.mean(aucs)) if aucs else None),
    ])
    if not aucs:
        flags.append("macro-auc-undefined")
    return MetricReport(metrics=metrics, per_class=per_class, flags=tuple(flags))


def speaking_style(transcript: str, duration_s: float,
                   filler_lexicon=DEFAULT_FILLERS) -> MetricReport:
    """Words per minute and filler rate (fillers per 100 tokens).

    Empty transcripts give WPM 0 and an undefined, flagged filler rate. The
    report embeds the simulation reference row for side-by-side display.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    tokens = tokenize(transcript)
    wpm = 60.0 * len(tokens) / duration_s
    flags = ()
    if tokens:
        fwr = 100.0 * count_fillers(tokens, filler_lexicon) / len(tokens)
    else:
        fwr = None
        flags = ("fwr-undefined",)
    return MetricReport(
        metrics=OrderedDict([("wpm", wpm), ("fwr", fwr)]),
        extra={"reference": dict(SIMULATION_SPEAKING_STYLE)},
        flags=flags,
    )


def _mean_ci(values) -> tuple[float, tuple[float, float], bool]:
    """Mean and normal-approximation 95% CI; degenerate (flagged) at n=1."""
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    if len(arr) < 2:
        return mean, (mean, mean), True
    half = 1.96 * arr.std(ddof=1) / math.sqrt(len(arr))
    return mean, (mean - half, mean + half), False


def read_rationales(path, text_field: str) -> "OrderedDict[tuple, str]":
    """JSONL keyed by (audio_id, t); duplicate keys are an error."""
    out: OrderedDict[tuple, str] = OrderedDict()
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (rec["audio_id"], int(rec["t"]))
                text = rec[text_field]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed record: {exc}") from exc
            if key in out:
                raise ValueError(f"{path}:{line_no}: duplicate key {key}")
            out[key] = "" if text is None else str(text)
    return out


_PAIR_METRICS = ("bleu1", "rouge1", "rougeL", "similarity")


def _score_pair(candidate: str, reference: str) -> dict:
    cand, ref = tokenize(candidate), tokenize(reference)
    return {
        "bleu1": bleu1(cand, ref),
        "rouge1": rouge1(cand, ref),
        "rougeL": rouge_l(cand, ref),
        "similarity": text_similarity(cand, ref),
    }


def align_and_score(pred_paths, gt_path) -> MetricReport:
    """Join predicted rationales to ground truth on (audio_id, t) and score.

    ``pred_paths`` may be one path or a list of run files. With one run the
    CI is over per-item scores; with several runs it is over per-run means.
    Items present on only one side are reported, not scored.
    """
    if isinstance(pred_paths, (str, bytes)) or hasattr(pred_paths, "__fspath__"):
        pred_paths = [pred_paths]
    if not pred_paths:
        raise ValueError("no prediction files supplied")
    gt = read_rationales(gt_path, "rationale_gt")

    run_means: dict[str, list[float]] = {m: [] for m in _PAIR_METRICS}
    item_scores: dict[str, list[float]] = {m: [] for m in _PAIR_METRICS}
    orphan_pred: set = set()
    orphan_gt: set = set()
    n_matched = 0
    for path in pred_paths:
        pred = read_rationales(path, "rationale")
        matched = [k for k in pred if k in gt]
        if not matched:
            raise ValueError(f"{path}: no (audio_id, t) keys match the ground truth")
        orphan_pred.update(k for k in pred if k not in gt)
        orphan_gt.update(k for k in gt if k not in pred)
        n_matched += len(matched)
        per_run = {m: [] for m in _PAIR_METRICS}
        for key in matched:
            scores = _score_pair(pred[key], gt[key])
            for m in _PAIR_METRICS:
                per_run[m].append(scores[m])
                item_scores[m].append(scores[m])
        for m in _PAIR_METRICS:
            run_means[m].append(float(np.mean(per_run[m])))

    metrics = OrderedDict()
    ci = OrderedDict()
    flags = []
    multi_run = len(pred_paths) > 1
    for m in _PAIR_METRICS:
        basis = run_means[m] if multi_run else item_scores[m]
        mean, bounds, degenerate = _mean_ci(basis)
        metrics[m] = mean
        ci[m] = bounds
        if degenerate:
            flags.append(f"ci-degenerate:{m}")
    extra = {
        "n_runs": len(pred_paths),
        "n_matched": n_matched,
        "orphan_pred": sorted(f"{a}:{t}" for a, t in orphan_pred),
        "orphan_gt": sorted(f"{a}:{t}" for a, t in orphan_gt),
    }
    return MetricReport(metrics=metrics, ci=ci, extra=extra, flags=tuple(flags))
