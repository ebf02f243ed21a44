"""Segment a synthetic two-channel conversation into turn-taking events.

Builds 18 seconds of audio where the left speaker talks twice and the right
speaker answers twice, with a short gap, a within-speaker pause, and one
second of deliberate overlap. Runs energy VAD, extracts IPUs and the
silence/overlap events between them, and prints corpus statistics next to
the built-in simulation reference rates.
"""

import json

import numpy as np

from duplexkit.audio_io import DuplexAudio
from duplexkit.vad_events import compute_vad, corpus_stats, extract_events, stats_report

RATE = 16000


def tone(seconds, freq, amp=0.3):
    t = np.arange(int(seconds * RATE)) / RATE
    return amp * np.sin(2 * np.pi * freq * t)


def place(channel, start_s, clip):
    i = int(start_s * RATE)
    channel[i:i + len(clip)] = clip


def main():
    total_s = 18.0
    left = np.zeros(int(total_s * RATE))
    right = np.zeros(int(total_s * RATE))

    place(left, 0.0, tone(5.0, 220.0))    # left opens
    place(right, 5.2, tone(3.8, 330.0))   # right takes over after a 200 ms gap
    place(right, 9.4, tone(2.6, 330.0))   # same speaker resumes: a pause
    place(left, 11.0, tone(4.0, 220.0))   # left barges in one second early

    audio = DuplexAudio(RATE, left, right)
    mask = compute_vad(audio)
    events = extract_events(mask)

    print("events:")
    for ev in events:
        print(f"  {ev.kind:<8} {ev.channel:<6} {ev.start_ms:8.0f} .. {ev.end_ms:8.0f} ms")

    stats = corpus_stats(events, total_s * 1000.0)
    print()
    print(json.dumps(stats_report(stats), indent=2))


if __name__ == "__main__":
    main()
