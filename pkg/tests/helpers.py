"""Fixture generators shared across the test modules."""

import numpy as np

from duplexkit.audio_io import DuplexAudio, save_duplex
from duplexkit.vad_events import VadMask


def tone(seconds, rate=16000, freq=220.0, amp=0.3, phase=0.0):
    t = np.arange(int(round(seconds * rate))) / rate
    return amp * np.sin(2 * np.pi * freq * t + phase)


def silence(seconds, rate=16000):
    return np.zeros(int(round(seconds * rate)))


def burst_channel(rng, pattern, rate=16000, amp=0.4):
    """Concatenate (voiced, seconds) segments; voiced spans carry noise."""
    parts = []
    for voiced, seconds in pattern:
        n = int(round(seconds * rate))
        parts.append(amp * rng.standard_normal(n) if voiced else np.zeros(n))
    return np.concatenate(parts)


def mask_from_intervals(total_ms, left, right, frame_ms=20.0):
    """VadMask from explicit [start_ms, end_ms) voiced intervals. Interval
    bounds must sit on the frame grid."""
    n = int(round(total_ms / frame_ms))

    def fill(intervals):
        arr = np.zeros(n, dtype=bool)
        for start, end in intervals:
            f0, f1 = start / frame_ms, end / frame_ms
            assert f0 == int(f0) and f1 == int(f1), "interval off the frame grid"
            arr[int(f0):int(f1)] = True
        return arr

    return VadMask(frame_ms=frame_ms, left=fill(left), right=fill(right))


def random_mask(rng, n_frames, frame_ms=20.0, p_switch=0.1):
    """Markov on/off chains per channel; short runs exercise the merge rule."""

    def chain():
        state = bool(rng.random() < 0.5)
        out = np.empty(n_frames, dtype=bool)
        for i in range(n_frames):
            if rng.random() < p_switch:
                state = not state
            out[i] = state
        return out

    return VadMask(frame_ms=frame_ms, left=chain(), right=chain())


def write_stereo(path, left, right, rate=16000):
    save_duplex(DuplexAudio(rate, left, right), path)
    return path
