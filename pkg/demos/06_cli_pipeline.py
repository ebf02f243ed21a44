"""Drive the command line end to end on a generated corpus.

Creates a small labeled dataset in a scratch directory, then shells out to
the CLI for corpus statistics, training, streaming inference, evaluation,
and a miniature ablation grid. Every subcommand reads the same dataset
manifest.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from duplexkit.audio_io import DuplexAudio, save_duplex
from duplexkit.behavior_labels import (
    HighAct,
    LabelTimeline,
    LowAct,
    TimelinePoint,
    write_timelines,
)

RATE = 8000
SECONDS = 30


def build_dataset(root: Path) -> Path:
    lines, timelines = [], []
    for k in range(2):
        rng = np.random.default_rng(20 + k)
        left = np.zeros(SECONDS * RATE)
        right = np.zeros(SECONDS * RATE)
        base = np.arange(RATE) / RATE
        points = []
        for s in range(SECONDS):
            c = int(rng.integers(4))
            wave = 0.4 * np.sin(2 * np.pi * (180.0 + 60.0 * c) * base)
            (left if c % 2 == 0 else right)[s * RATE:(s + 1) * RATE] = wave
            points.append(TimelinePoint(t=s, hi=HighAct(c), lo=LowAct(c)))
        save_duplex(DuplexAudio(RATE, left, right), root / f"conv{k}.wav")
        timelines.append(LabelTimeline(f"conv{k}", points))
        write_timelines(timelines[-1:], root / f"conv{k}.labels.jsonl")
        lines.append(json.dumps({"audio_id": f"conv{k}",
                                 "audio": f"conv{k}.wav",
                                 "labels": f"conv{k}.labels.jsonl"}))
    write_timelines(timelines, root / "gt.jsonl")
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def run(*args):
    cmd = [sys.executable, "-m", "duplexkit.cli", *args]
    print(f"\n$ duplexkit {' '.join(args)}")
    proc = subprocess.run(cmd, capture_output=True, text=True)
    print(proc.stdout.rstrip())
    if proc.returncode != 0:
        print(proc.stderr.rstrip(), file=sys.stderr)
        raise SystemExit(proc.returncode)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        manifest = build_dataset(root)
        params = root / "params.json"
        preds = root / "preds.jsonl"

        run("stats", "--audio", str(root / "conv0.wav"), str(root / "conv1.wav"))
        run("train", "--manifest", str(manifest), "--epochs", "40",
            "--learning-rate", "0.05", "--window-s", "5", "--d-model", "16",
            "--out", str(params))
        run("infer", "--manifest", str(manifest), "--params", str(params),
            "--window-s", "5", "--out", str(preds))
        run("eval", "--mode", "labels", "--pred", str(preds),
            "--gt", str(root / "gt.jsonl"))
        run("ablate", "--manifest", str(manifest),
            "--windows", "5", "15", "--lookaheads", "0",
            "--seeds", "1", "2", "--epochs", "5", "--d-model", "8",
            "--out-dir", str(root / "grid"))
        print("\ngrid.csv:")
        print((root / "grid" / "grid.csv").read_text().rstrip())


if __name__ == "__main__":
    main()
