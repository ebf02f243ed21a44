"""Text overlap metrics, speaking style, and rationale alignment.

Scores candidate sentences against references with unigram BLEU, ROUGE-1,
ROUGE-L, and tf cosine similarity, measures words per minute and filler
rate against the built-in reference row, and aligns two prediction files
against ground-truth rationales keyed by (conversation, second).
"""

import json
import tempfile
from pathlib import Path

from duplexkit.metrics import (
    align_and_score,
    bleu1,
    rouge1,
    rouge_l,
    speaking_style,
    text_similarity,
    tokenize,
)

PAIRS = [
    ("the trail stays dry after noon", "the trail is dry by noon"),
    ("pack the rain shells", "pack rain shells and a tarp"),
    ("yeah okay", "sounds good"),
]

TRANSCRIPT = ("so um I think we take the early bus you know and uh walk the "
              "river loop before it gets hot")


def main():
    for cand, ref in PAIRS:
        c, r = tokenize(cand), tokenize(ref)
        print(f"candidate: {cand!r}")
        print(f"reference: {ref!r}")
        print(f"  bleu1 {bleu1(c, r):.4f}  rouge1 {rouge1(c, r):.4f}  "
              f"rougeL {rouge_l(c, r):.4f}  cosine {text_similarity(c, r):.4f}")

    print("\nspeaking style over 8.5 seconds:")
    print(speaking_style(TRANSCRIPT, 8.5).render())

    # two inference runs against ground truth, matched on (conversation, second)
    gt = [{"audio_id": "conv0", "t": t, "rationale_gt": text}
          for t, text in enumerate(["the bus leaves early",
                                    "the loop follows the river",
                                    "it gets hot after noon"])]
    runs = [
        [{"audio_id": "conv0", "t": 0, "rationale": "the bus leaves very early"},
         {"audio_id": "conv0", "t": 1, "rationale": "the loop follows a river"},
         {"audio_id": "conv0", "t": 2, "rationale": "afternoons get hot"}],
        [{"audio_id": "conv0", "t": 0, "rationale": "the bus is early"},
         {"audio_id": "conv0", "t": 1, "rationale": "a river loop"},
         {"audio_id": "conv0", "t": 2, "rationale": "it gets hot after noon"}],
    ]
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        gt_path = root / "gt.jsonl"
        gt_path.write_text("\n".join(json.dumps(r) for r in gt) + "\n")
        pred_paths = []
        for i, rows in enumerate(runs):
            p = root / f"run{i}.jsonl"
            p.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
            pred_paths.append(p)
        report = align_and_score(pred_paths, gt_path)
    print("\nrationale alignment over two runs:")
    print(report.render())


if __name__ == "__main__":
    main()
