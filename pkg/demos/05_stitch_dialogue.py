"""Synthesize a full-duplex conversation from an annotated script.

The script grammar marks where a backchannel or interruption should land
inside the parent turn. Planning converts marker positions into start
times, stitching renders each speaker onto their own channel with a fade at
interruption cuts, and the result is written as a stereo wav plus a
per-second label timeline. Finally the audio is re-analyzed to confirm the
planned overlaps are audible.
"""

from pathlib import Path

import numpy as np

from duplexkit.audio_io import save_duplex
from duplexkit.behavior_labels import LOW_NAMES
from duplexkit.stitcher import emit_labels, parse_script, plan_timestamps, stitch
from duplexkit.vad_events import compute_vad, extract_events

RATE = 16000

SCRIPT = """\
(1) speaker1: so I checked the [backchannel] forecast for the weekend trip {Constatives}
(2) speaker2(backchannel): right {Acknowledgments}
(3) speaker2: we should pack the [interruption] rain shells and maybe the tarp {Directives}
(4) speaker1(interruption): the tarp is already in the car {Constatives}
(5) speaker2: even better {Acknowledgments}
"""

DURATIONS_MS = [3200.0, 700.0, 2900.0, 2300.0, 1200.0]


def main():
    script = parse_script(SCRIPT)
    plan = plan_timestamps(script, DURATIONS_MS)
    print("plan:")
    for p in plan.placements:
        tag = f" ({p.event})" if p.event else ""
        print(f"  ({p.index}) {p.speaker:<9} {p.start_ms:7.1f} .. {p.end_ms:7.1f} ms"
              f"{tag}")

    clips = []
    for p in plan.placements:
        n = int(round(p.clip_ms * RATE / 1000.0))
        freq = 220.0 if p.channel == "left" else 330.0
        clips.append(0.4 * np.sin(2 * np.pi * freq * np.arange(n) / RATE))

    audio = stitch(plan, clips, RATE)
    out = Path(__file__).parent / "out"
    out.mkdir(exist_ok=True)
    save_duplex(audio, out / "stitched.wav")
    print(f"\nwrote {out / 'stitched.wav'} "
          f"({len(audio.left) / RATE:.2f} s at {RATE} Hz)")

    timeline = emit_labels(plan, audio_id="stitched")
    print("labels:", " ".join(LOW_NAMES[pt.lo] for pt in timeline.points))

    events = extract_events(compute_vad(audio))
    overlaps = [e for e in events if e.kind == "Overlap"]
    print(f"\nre-analysis finds {len(overlaps)} overlaps:")
    for ov in overlaps:
        print(f"  {ov.start_ms:7.1f} .. {ov.end_ms:7.1f} ms")


if __name__ == "__main__":
    main()
