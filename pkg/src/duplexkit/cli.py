"""Command-line pipelines over the library modules.

Subcommands: ``stats`` (turn-taking event rates), ``train``/``infer`` (the
per-second act detector), ``graph`` (per-second concept graphs + corpus
index), ``eval`` (label or rationale scoring), ``ablate`` (the window x
lookahead grid), ``stitch`` (script to stereo WAV + labels).

Every value flag can also come from a JSON ``--config`` file; explicit
flags win. Outputs carry no timestamps, so reruns with the same flags and
seed are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import re
import sys
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .audio_io import DuplexAudio, causal_window, chunk, load_duplex, save_duplex
from .behavior_labels import (
    HIGH_NAMES,
    LOW_NAMES,
    HighAct,
    LabelTimeline,
    TimelinePoint,
    inverse_frequency_weights,
    low_act_classes,
    low_index,
    read_timelines,
    write_timelines,
)
from .detector import (
    ACOUSTIC_DIM,
    CONTEXT_MODES,
    SEMANTIC_DIM,
    FeaturePair,
    TrainConfig,
    infer_stream,
    load_params,
    save_params,
    train,
    window_features,
    write_inference,
    read_inference,
)
from .metrics import (
    DEFAULT_FILLERS,
    ScoredPrediction,
    align_and_score,
    classification_report,
    load_filler_lexicon,
    read_rationales,
)
from .stitcher import (
    emit_labels,
    load_clip,
    load_clip_manifest,
    parse_script,
    plan_timestamps,
    save_plan,
    stitch,
)
from .thought_graph import augment_with_speech_acts, build_text_graph, read_triples, serialize
from .vad_events import (
    compute_vad,
    corpus_stats,
    extract_events,
    load_vad_mask,
    merge_stats,
    stats_report,
)

import numpy as np

CACHE_ENV = "DUPLEXKIT_CACHE"

DEFAULTS = {
    "window_s": 30.0,
    "lookahead_s": 0.0,
    "context": "none",
    "classes_lo": 4,
    "seed": 42,
    "jobs": 1,
    "vad_threshold": 0.1,
    "frame_ms": 20.0,
    "min_silence_ms": 200.0,
    "filler_lexicon": None,
    "learning_rate": 3e-4,
    "epochs": 10,
    "alpha": 1.0,
    "beta": 1.0,
    "grad_clip": 1.0,
    "gamma": 0.9,
    "d_model": 16,
    "weight_decay": 0.0,
    "gap_ms": 200.0,
    "cut_ms": 300.0,
}


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "duplexkit"))


@dataclass
class RunConfig:
    """Merged parameters for one subcommand run: flags over config-file
    values over defaults. Missing keys read as AttributeError."""

    values: dict

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def get(self, name, default=None):
        return self.values.get(name, default)


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    checks = [
        ("window_s", lambda x: x > 0, "must be positive"),
        ("lookahead_s", lambda x: x >= 0, "must be >= 0"),
        ("context", lambda x: x in CONTEXT_MODES, f"must be one of {CONTEXT_MODES}"),
        ("classes_lo", lambda x: x in (3, 4), "must be 3 or 4"),
        ("jobs", lambda x: x >= 1, "must be >= 1"),
        ("vad_threshold", lambda x: 0 < x < 1, "must lie in (0, 1)"),
        ("frame_ms", lambda x: 10 <= x <= 50, "must lie in [10, 50]"),
        ("min_silence_ms", lambda x: x >= 0, "must be >= 0"),
        ("epochs", lambda x: x >= 0, "must be >= 0"),
        ("learning_rate", lambda x: x >= 0, "must be >= 0"),
        ("grad_clip", lambda x: x > 0, "must be positive"),
        ("gamma", lambda x: 0 <= x < 1, "must lie in [0, 1)"),
        ("d_model", lambda x: x >= 1, "must be >= 1"),
        ("gap_ms", lambda x: x >= 0, "must be >= 0"),
        ("cut_ms", lambda x: x >= 0, "must be >= 0"),
    ]
    for name, ok, msg in checks:
        if name in v and v[name] is not None and not ok(v[name]):
            raise ValueError(f"--{name.replace('_', '-')} {msg}, got {v[name]}")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = {}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ValueError(f"{config_path}: config file must hold a JSON object")
        unknown = set(file_values) - set(DEFAULTS) - set(vars(args))
        if unknown:
            raise ValueError(f"{config_path}: unknown config keys {sorted(unknown)}")
    merged = dict(DEFAULTS)
    merged.update(file_values)
    for key, value in vars(args).items():
        if key in ("func", "config"):
            continue
        if value is not None:
            merged[key] = value
        else:
            merged.setdefault(key, None)
    cfg = RunConfig(merged)
    _validate(cfg)
    return cfg


def _emit_json(payload, out_path) -> int:
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if out_path:
        Path(out_path).write_text(text + "\n")
    return 0


# ---------------------------------------------------------------------------
# dataset manifest

def _resolve_path(base: Path, p):
    if p is None:
        return None
    p = Path(p)
    return str(p if p.is_absolute() else base / p)


def load_dataset_manifest(path) -> list:
    """JSONL records {audio_id, audio, labels?, transcripts?}; relative paths
    resolve against the manifest's directory."""
    base = Path(path).parent
    records = []
    seen = set()
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                audio_id = str(rec["audio_id"])
                audio = str(rec["audio"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed manifest record: {exc}") from exc
            if audio_id in seen:
                raise ValueError(f"{path}:{line_no}: duplicate audio_id {audio_id!r}")
            seen.add(audio_id)
            records.append({
                "audio_id": audio_id,
                "audio": _resolve_path(base, audio),
                "labels": _resolve_path(base, rec.get("labels")),
                "transcripts": _resolve_path(base, rec.get("transcripts")),
            })
    if not records:
        raise ValueError(f"{path}: empty manifest")
    return records


def load_transcripts(path) -> list:
    """JSON array of per-second transcript strings (null entries read as '')."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError(f"{path}: transcripts file must hold a JSON array")
    return ["" if item is None else str(item) for item in data]


# ---------------------------------------------------------------------------
# stats

def cmd_stats(cfg: RunConfig) -> int:
    audio_paths = cfg.get("audio") or []
    vad_paths = cfg.get("vad_jsonl") or []
    if not audio_paths and not vad_paths:
        raise ValueError("no inputs: pass --audio and/or --vad-jsonl")

    def one(item):
        kind, path = item
        if kind == "audio":
            mask = compute_vad(load_duplex(path), frame_ms=cfg.frame_ms,
                               threshold=cfg.vad_threshold)
        else:
            mask = load_vad_mask(path)
        events = extract_events(mask, min_silence_ms=cfg.min_silence_ms)
        return corpus_stats(events, mask.total_ms)

    items = [("audio", p) for p in audio_paths] + [("vad", p) for p in vad_paths]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        per_file = list(pool.map(one, items))
    merged = merge_stats(per_file)
    report = stats_report(merged)
    report["n_files"] = len(items)
    report["per_file"] = {
        str(path): stats.as_dict() for (_, path), stats in zip(items, per_file)
    }
    return _emit_json(report, cfg.get("out"))


# ---------------------------------------------------------------------------
# train / infer

def _zero_pair() -> FeaturePair:
    return FeaturePair(np.zeros(ACOUSTIC_DIM), np.zeros(SEMANTIC_DIM))


def _fillers(cfg: RunConfig):
    path = cfg.get("filler_lexicon")
    return load_filler_lexicon(path) if path else DEFAULT_FILLERS


def _labeled_second_features(record, timeline, cfg: RunConfig) -> list:
    """One feature pair per labeled second: the last complete chunk of that
    second's causal window, so training sees what inference will see."""
    audio = load_duplex(record["audio"])
    grid = chunk(audio)
    transcripts = (load_transcripts(record["transcripts"])
                   if record["transcripts"] else None)
    feats = []
    for point in timeline.points:
        if point.t >= grid.n_chunks:
            raise ValueError(
                f"{record['audio_id']}: label at second {point.t} but audio has "
                f"{grid.n_chunks} complete seconds")
        window = window_features(
            audio, point.t + 1, cfg.window_s, cfg.lookahead_s, transcripts,
            vad_threshold=cfg.vad_threshold, frame_ms=cfg.frame_ms,
            fillers=_fillers(cfg))
        feats.append(window[-1] if window else _zero_pair())
    return feats


def cmd_train(cfg: RunConfig) -> int:
    records = load_dataset_manifest(cfg.manifest)
    features, points = [], []
    for record in records:
        if not record["labels"]:
            raise ValueError(f"{record['audio_id']}: training requires a labels path")
        timelines = read_timelines(record["labels"])
        if record["audio_id"] not in timelines:
            raise ValueError(
                f"{record['labels']}: no labels for audio_id {record['audio_id']!r}")
        timeline = timelines[record["audio_id"]]
        features.extend(_labeled_second_features(record, timeline, cfg))
        points.extend(timeline.points)
    weights = inverse_frequency_weights(points, n_lo_classes=cfg.classes_lo,
                                        alpha=cfg.alpha, beta=cfg.beta)
    config = TrainConfig(
        learning_rate=cfg.learning_rate, epochs=cfg.epochs, seed=cfg.seed,
        alpha=cfg.alpha, beta=cfg.beta, grad_clip=cfg.grad_clip,
        context=cfg.context, gamma=cfg.gamma, d_model=cfg.d_model,
        weight_decay=cfg.weight_decay)
    result = train(features, points, weights, config)
    save_params(result.params, cfg.out)
    print(f"trained on {len(points)} labeled seconds from {len(records)} files; "
          f"loss {result.losses[0]:.6f} -> {result.losses[-1]:.6f}")
    if weights.flags:
        print("weight flags: " + ", ".join(weights.flags))
    return 0


def cmd_infer(cfg: RunConfig) -> int:
    records = load_dataset_manifest(cfg.manifest)
    params = load_params(cfg.params)
    timelines = OrderedDict()
    for record in records:
        audio = load_duplex(record["audio"])
        transcripts = (load_transcripts(record["transcripts"])
                       if record["transcripts"] else None)
        timelines[record["audio_id"]] = infer_stream(
            audio, transcripts, params,
            window_s=cfg.window_s, lookahead_s=cfg.lookahead_s,
            vad_threshold=cfg.vad_threshold, frame_ms=cfg.frame_ms,
            fillers=_fillers(cfg), audio_id=record["audio_id"])
    write_inference(timelines.values(), cfg.out)
    n = sum(len(tl.points) for tl in timelines.values())
    print(f"wrote {n} per-second predictions for {len(records)} files")
    return 0


# ---------------------------------------------------------------------------
# graph export

_SAFE_ID = re.compile(r"[^A-Za-z0-9_.-]+")


def cmd_graph(cfg: RunConfig) -> int:
    triples = read_triples(cfg.triples)
    labels = read_timelines(cfg.labels) if cfg.get("labels") else {}
    rationales = (read_rationales(cfg.rationales, "rationale_gt")
                  if cfg.get("rationales") else {})
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    label_points = {
        (audio_id, p.t): p
        for audio_id, tl in labels.items() for p in tl.points
    }
    index_lines = []
    for (audio_id, t) in triples:
        window = [
            tr
            for (aid, u) in triples
            if aid == audio_id and t - cfg.window_s < u <= t
            for tr in triples[(aid, u)]
        ]
        graph = build_text_graph(window)
        flags = []
        point = label_points.get((audio_id, t))
        if point is not None and point.hi is not None and point.lo is not None:
            graph = augment_with_speech_acts(graph, point.hi, point.lo)
        else:
            flags.append("sa-missing")
        nodes_bytes, adj_bytes = serialize(graph)
        stem = f"{_SAFE_ID.sub('_', audio_id)}_t{t:06d}"
        nodes_path = f"{stem}.nodes.json"
        adj_path = f"{stem}.adj.json"
        (out_dir / nodes_path).write_bytes(nodes_bytes)
        (out_dir / adj_path).write_bytes(adj_bytes)
        index_lines.append(json.dumps({
            "audio_id": audio_id,
            "t": t,
            "text_window": "; ".join(f"{tr.subject} {tr.relation} {tr.object}"
                                     for tr in window),
            "nodes_path": nodes_path,
            "adj_path": adj_path,
            "rationale_gt": rationales.get((audio_id, t)),
            "flags": flags,
        }))
    index_path = out_dir / "preproc_index.jsonl"
    index_path.write_text("".join(line + "\n" for line in index_lines))
    print(f"wrote {len(index_lines)} graphs to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# eval

def _eval_labels(cfg: RunConfig) -> dict:
    pred_paths = cfg.pred
    if len(pred_paths) != 1:
        raise ValueError("labels mode takes exactly one --pred file")
    preds = read_inference(pred_paths[0])
    gt = read_timelines(cfg.gt)
    hi_preds, lo_preds = [], []
    orphan_gt = []
    for audio_id, gtl in gt.items():
        ptl = preds.get(audio_id)
        if ptl is None:
            orphan_gt.append(audio_id)
            continue
        by_t = {p.t: p for p in ptl.points}
        for gp in gtl.points:
            pp = by_t.get(gp.t)
            if pp is None or pp.p_hi is None or pp.p_lo is None:
                orphan_gt.append(f"{audio_id}:{gp.t}")
                continue
            if gp.hi is not None:
                hi_preds.append(ScoredPrediction(int(gp.hi), pp.p_hi))
            if gp.lo is not None:
                n_lo = len(pp.p_lo)
                lo_preds.append(ScoredPrediction(low_index(gp.lo, n_lo), pp.p_lo))
    orphan_pred = [aid for aid in preds if aid not in gt]
    if not hi_preds and not lo_preds:
        raise ValueError("no (audio_id, t) keys with labels match the predictions")
    payload = {"mode": "labels",
               "orphan_gt": sorted(orphan_gt), "orphan_pred": sorted(orphan_pred)}
    if hi_preds:
        names = [HIGH_NAMES[c] for c in HighAct]
        payload["hi"] = classification_report(hi_preds, names).as_dict()
    if lo_preds:
        n_lo = len(lo_preds[0].scores)
        names = [LOW_NAMES[c] for c in low_act_classes(n_lo)]
        payload["lo"] = classification_report(lo_preds, names).as_dict()
    return payload


def cmd_eval(cfg: RunConfig) -> int:
    if cfg.mode == "labels":
        payload = _eval_labels(cfg)
    else:
        report = align_and_score(list(cfg.pred), cfg.gt)
        payload = {"mode": "rationales"}
        payload.update(report.as_dict())
    return _emit_json(payload, cfg.get("out"))


# ---------------------------------------------------------------------------
# ablation grid

def _accessible_context(records, window_s: float, lookahead_s: float) -> int:
    """Total samples visible across every second's causal window; larger W
    (or L) can only grow this."""
    total = 0
    for record in records:
        audio = load_duplex(record["audio"])
        for i in range(1, chunk(audio).n_chunks + 1):
            total += causal_window(audio, i, window_s, lookahead_s).n_samples
    return total


def _cell_metrics(records, label_map, cfg, w, l, ctx, seed, workdir: Path) -> dict:
    features, points = [], []
    sub = RunConfig({**cfg.values, "window_s": w, "lookahead_s": l})
    for record in records:
        timeline = label_map[record["audio_id"]]
        features.extend(_labeled_second_features(record, timeline, sub))
        points.extend(timeline.points)
    weights = inverse_frequency_weights(points, n_lo_classes=cfg.classes_lo,
                                        alpha=cfg.alpha, beta=cfg.beta)
    config = TrainConfig(
        learning_rate=cfg.learning_rate, epochs=cfg.epochs, seed=seed,
        alpha=cfg.alpha, beta=cfg.beta, grad_clip=cfg.grad_clip,
        context=ctx, gamma=cfg.gamma, d_model=cfg.d_model,
        weight_decay=cfg.weight_decay)
    result = train(features, points, weights, config)
    workdir.mkdir(parents=True, exist_ok=True)
    save_params(result.params, workdir / "params.json")

    hi_preds, lo_preds = [], []
    inferred = OrderedDict()
    for record in records:
        audio = load_duplex(record["audio"])
        transcripts = (load_transcripts(record["transcripts"])
                       if record["transcripts"] else None)
        tl = infer_stream(audio, transcripts, result.params,
                          window_s=w, lookahead_s=l,
                          vad_threshold=cfg.vad_threshold, frame_ms=cfg.frame_ms,
                          fillers=_fillers(cfg), audio_id=record["audio_id"])
        inferred[record["audio_id"]] = tl
        by_t = {p.t: p for p in tl.points}
        for gp in label_map[record["audio_id"]].points:
            pp = by_t.get(gp.t)
            if pp is None:
                continue
            if gp.hi is not None:
                hi_preds.append(ScoredPrediction(int(gp.hi), pp.p_hi))
            if gp.lo is not None:
                lo_preds.append(ScoredPrediction(low_index(gp.lo, cfg.classes_lo),
                                                 pp.p_lo))
    write_inference(inferred.values(), workdir / "inference.jsonl")
    out = {}
    for head, preds in (("hi", hi_preds), ("lo", lo_preds)):
        if not preds:
            raise ValueError(f"no labeled seconds to score for the {head} head")
        report = classification_report(preds)
        out[f"{head}_micro_f1"] = report.metrics["micro_f1"]
        out[f"{head}_macro_f1"] = report.metrics["macro_f1"]
    return out


_GRID_METRICS = ("hi_micro_f1", "hi_macro_f1", "lo_micro_f1", "lo_macro_f1")


def cmd_ablate(cfg: RunConfig) -> int:
    records = load_dataset_manifest(cfg.manifest)
    label_map = {}
    for record in records:
        if not record["labels"]:
            raise ValueError(f"{record['audio_id']}: ablation requires labels")
        timelines = read_timelines(record["labels"])
        if record["audio_id"] not in timelines:
            raise ValueError(
                f"{record['labels']}: no labels for audio_id {record['audio_id']!r}")
        label_map[record["audio_id"]] = timelines[record["audio_id"]]

    windows = [float(w) for w in cfg.windows]
    lookaheads = [float(l) for l in cfg.lookaheads]
    contexts = list(cfg.get("contexts") or [cfg.context])
    seeds = [int(s) for s in (cfg.get("seeds") or [cfg.seed])]
    for ctx in contexts:
        if ctx not in CONTEXT_MODES:
            raise ValueError(f"unknown context mode {ctx!r}")
    out_dir = Path(cfg.get("out_dir") or cache_dir() / "ablate")
    out_dir.mkdir(parents=True, exist_ok=True)

    cells = list(itertools.product(windows, lookaheads, contexts))
    tasks = [(w, l, ctx, seed) for (w, l, ctx) in cells for seed in seeds]

    def run_task(task):
        w, l, ctx, seed = task
        name = f"W{w:g}_L{l:g}_{ctx}_s{seed}"
        try:
            result = _cell_metrics(records, label_map, cfg, w, l, ctx, seed,
                                   out_dir / "cells" / name)
            return name, {"status": "ok", **result}
        except Exception as exc:  # cell isolation: one failure must not kill the grid
            return name, {"status": f"error: {exc}"}

    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        status = OrderedDict(pool.map(run_task, tasks))
    context_samples = {
        (w, l): _accessible_context(records, w, l)
        for w in windows for l in lookaheads
    }

    rows = []
    n_failed = 0
    for (w, l, ctx) in cells:
        cell_runs = []
        for seed in seeds:
            entry = status[f"W{w:g}_L{l:g}_{ctx}_s{seed}"]
            if entry["status"] == "ok":
                cell_runs.append(entry)
            else:
                n_failed += 1
        row = {"window_s": f"{w:g}", "lookahead_s": f"{l:g}", "context": ctx,
               "n_seeds": len(cell_runs),
               "accessible_context_samples": context_samples[(w, l)]}
        for m in _GRID_METRICS:
            vals = [run[m] for run in cell_runs]
            if vals:
                mean = float(np.mean(vals))
                std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
                row[f"{m}_mean"] = f"{mean:.6f}"
                row[f"{m}_std"] = f"{std:.6f}"
            else:
                row[f"{m}_mean"] = ""
                row[f"{m}_std"] = ""
        rows.append(row)

    fields = (["window_s", "lookahead_s", "context", "n_seeds",
               "accessible_context_samples"]
              + [f"{m}_{agg}" for m in _GRID_METRICS for agg in ("mean", "std")])
    with open(out_dir / "grid.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    (out_dir / "status.json").write_text(
        json.dumps(status, indent=2, sort_keys=True) + "\n")
    print(f"grid: {len(cells)} cells x {len(seeds)} seeds, {n_failed} failed runs; "
          f"wrote {out_dir / 'grid.csv'}")
    return 1 if n_failed else 0


# ---------------------------------------------------------------------------
# stitch

def cmd_stitch(cfg: RunConfig) -> int:
    script = parse_script(Path(cfg.script).read_text())
    entries = load_clip_manifest(cfg.clips)
    if len(entries) != len(script):
        raise ValueError(f"{len(entries)} clips for {len(script)} script lines")
    base = Path(cfg.clips).parent
    clips, rates, durations = [], [], []
    for _, path, duration_ms in entries:
        samples, rate = load_clip(_resolve_path(base, path))
        clips.append(samples)
        rates.append(rate)
        durations.append(duration_ms if duration_ms is not None
                         else 1000.0 * len(samples) / rate)
    if len(set(rates)) > 1:
        raise ValueError(f"clip sample rates differ: {sorted(set(rates))}")
    plan = plan_timestamps(script, durations, inter_turn_gap_ms=cfg.gap_ms,
                           interruption_cut_ms=cfg.cut_ms)
    audio = stitch(plan, clips, rates[0])
    save_duplex(audio, cfg.out_audio)
    timeline = emit_labels(plan, audio_id=Path(cfg.out_audio).stem)
    write_timelines([timeline], cfg.out_labels)
    if cfg.get("out_plan"):
        save_plan(plan, cfg.out_plan)
    print(f"stitched {len(script)} turns into {audio.duration_s:.2f} s of audio, "
          f"{len(timeline.points)} labeled seconds")
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of defaults; flags override it")
    p.add_argument("--window-s", dest="window_s", type=float)
    p.add_argument("--lookahead-s", dest="lookahead_s", type=float)
    p.add_argument("--context", choices=CONTEXT_MODES)
    p.add_argument("--classes-lo", dest="classes_lo", type=int, choices=(3, 4))
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--vad-threshold", dest="vad_threshold", type=float)
    p.add_argument("--frame-ms", dest="frame_ms", type=float)
    p.add_argument("--min-silence-ms", dest="min_silence_ms", type=float)
    p.add_argument("--filler-lexicon", dest="filler_lexicon")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duplexkit",
        description="Two-channel conversation analysis, labeling, and stitching.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="turn-taking event rates over a corpus")
    p.add_argument("--audio", nargs="*", help="stereo WAV paths")
    p.add_argument("--vad-jsonl", dest="vad_jsonl", nargs="*",
                   help="precomputed VAD mask JSONL paths (skips compute_vad)")
    p.add_argument("--out", help="write the JSON report here as well as stdout")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="fit the per-second act detector")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--grad-clip", dest="grad_clip", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--d-model", dest="d_model", type=int)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="streaming per-second predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True, help="timeline JSONL path")
    _add_common(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("graph", help="per-second concept graphs + corpus index")
    p.add_argument("--triples", required=True)
    p.add_argument("--labels", help="act labels used for the SA nodes")
    p.add_argument("--rationales", help="ground-truth rationales for the index")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--mode", choices=("labels", "rationales"), required=True)
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="window x lookahead x context grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--windows", nargs="+", type=float, required=True)
    p.add_argument("--lookaheads", nargs="+", type=float, required=True)
    p.add_argument("--contexts", nargs="+")
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--out-dir", dest="out_dir",
                   help=f"grid output directory (default: ${CACHE_ENV}/ablate)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--grad-clip", dest="grad_clip", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--d-model", dest="d_model", type=int)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("stitch", help="script + clips to stereo WAV + labels")
    p.add_argument("--script", required=True)
    p.add_argument("--clips", required=True, help="clip manifest JSONL")
    p.add_argument("--out-audio", dest="out_audio", required=True)
    p.add_argument("--out-labels", dest="out_labels", required=True)
    p.add_argument("--out-plan", dest="out_plan")
    p.add_argument("--gap-ms", dest="gap_ms", type=float)
    p.add_argument("--cut-ms", dest="cut_ms", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_stitch)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.func(cfg)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
