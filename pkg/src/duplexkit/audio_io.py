"""Two-channel WAV loading, resampling, and the one-second chunk grid.

Everything downstream works on a ``DuplexAudio``: two equal-length float64
sample arrays (left/right) in [-1, 1] plus a sample rate. Analysis runs on a
grid of one-second chunks; streaming-style consumers see the past through
``causal_window``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly


class AudioFormatError(ValueError):
    """Raised for unreadable, unsupported, or empty audio input."""


@dataclass
class DuplexAudio:
    """Stereo audio buffer. Arrays are read-only after construction."""

    sample_rate: int
    left: np.ndarray
    right: np.ndarray
    mono_duplicated: bool = False

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise AudioFormatError(f"sample rate must be positive, got {self.sample_rate}")
        self.left = np.asarray(self.left, dtype=np.float64)
        self.right = np.asarray(self.right, dtype=np.float64)
        if self.left.ndim != 1 or self.right.ndim != 1:
            raise AudioFormatError("channels must be 1-d sample arrays")
        if len(self.left) != len(self.right):
            raise AudioFormatError(
                f"channel length mismatch: {len(self.left)} vs {len(self.right)}"
            )
        if len(self.left) == 0:
            raise AudioFormatError("zero-length audio")
        self.left.flags.writeable = False
        self.right.flags.writeable = False

    @property
    def n_samples(self) -> int:
        return len(self.left)

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate

    def channel(self, name: str) -> np.ndarray:
        if name == "left":
            return self.left
        if name == "right":
            return self.right
        raise ValueError(f"unknown channel {name!r}")


@dataclass(frozen=True)
class ChunkGrid:
    """One-second chunk grid: block size in samples and number of full chunks.

    Chunks are 1-based; chunk i covers samples [boundary(i-1), boundary(i)).
    A trailing partial second is dropped. ``short`` flags audio shorter than
    one second (zero chunks).
    """

    n_block: int
    n_chunks: int
    short: bool = False

    def boundary(self, i: int) -> int:
        """B_i = i * n_block, the sample index where chunk i+1 begins."""
        return i * self.n_block

    def sample_span(self, i: int) -> tuple[int, int]:
        """Half-open sample range of chunk i (1-based)."""
        if not 1 <= i <= self.n_chunks:
            raise IndexError(f"chunk index {i} out of range [1, {self.n_chunks}]")
        return (i - 1) * self.n_block, i * self.n_block


@dataclass(frozen=True)
class CausalWindow:
    """Sample span feeding the prediction for one second of the stream."""

    index: int
    window_s: float
    lookahead_s: float
    start: int
    end: int

    @property
    def n_samples(self) -> int:
        return self.end - self.start


def load_duplex(path) -> DuplexAudio:
    """Read a PCM16 or float32 RIFF/WAVE file into a DuplexAudio.

    Integer samples are scaled by 1/32768. Mono input is duplicated onto both
    channels and flagged via ``mono_duplicated`` (with a warning). More than
    two channels or other encodings are rejected.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise AudioFormatError(f"unreadable WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise AudioFormatError(f"unsupported sample encoding {data.dtype} in {path}")
    if samples.size == 0:
        raise AudioFormatError(f"zero-length audio in {path}")
    if samples.ndim == 1:
        warnings.warn(f"{path}: mono input duplicated onto both channels")
        return DuplexAudio(rate, samples, samples.copy(), mono_duplicated=True)
    if samples.shape[1] == 1:
        mono = samples[:, 0]
        warnings.warn(f"{path}: mono input duplicated onto both channels")
        return DuplexAudio(rate, mono, mono.copy(), mono_duplicated=True)
    if samples.shape[1] == 2:
        return DuplexAudio(rate, samples[:, 0].copy(), samples[:, 1].copy())
    raise AudioFormatError(f"{path}: expected 1 or 2 channels, got {samples.shape[1]}")


def save_duplex(audio: DuplexAudio, path) -> None:
    """Write audio as 2-channel PCM16. Samples are clipped to [-1, 1] first."""
    stereo = np.stack([audio.left, audio.right], axis=1)
    stereo = np.clip(stereo, -1.0, 1.0)
    pcm = np.clip(np.round(stereo * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(path, audio.sample_rate, pcm)


def _resample_channel(x: np.ndarray, source: int, target: int, method: str) -> np.ndarray:
    n_out = int(round(len(x) * target / source))
    if method == "linear":
        positions = np.arange(n_out) * (source / target)
        return np.interp(positions, np.arange(len(x)), x)
    if method == "sinc":
        g = np.gcd(source, target)
        y = resample_poly(x, target // g, source // g)
        if len(y) > n_out:
            y = y[:n_out]
        elif len(y) < n_out:
            y = np.pad(y, (0, n_out - len(y)), mode="edge")
        return y
    raise ValueError(f"unknown resample method {method!r}")


def resample(audio: DuplexAudio, target_rate: int, method: str = "linear") -> DuplexAudio:
    """Resample both channels to target_rate.

    ``method`` is "linear" (default) or "sinc" (windowed-sinc polyphase).
    Output length is round(n_samples * target/source); channels stay aligned.
    Identity when target_rate equals the source rate.
    """
    if target_rate <= 0:
        raise AudioFormatError(f"target rate must be positive, got {target_rate}")
    if target_rate == audio.sample_rate:
        return audio
    left = _resample_channel(audio.left, audio.sample_rate, target_rate, method)
    right = _resample_channel(audio.right, audio.sample_rate, target_rate, method)
    return DuplexAudio(target_rate, left, right, mono_duplicated=audio.mono_duplicated)


def chunk(audio: DuplexAudio) -> ChunkGrid:
    """Lay the one-second grid over the audio; partial trailing second dropped."""
    n_block = audio.sample_rate
    n_chunks = audio.n_samples // n_block
    return ChunkGrid(n_block=n_block, n_chunks=n_chunks, short=n_chunks == 0)


def causal_window(
    audio: DuplexAudio, index: int, window_s: float, lookahead_s: float = 0.0
) -> CausalWindow:
    """Sample span available when predicting second ``index`` (1-based).

    The span is [max(0, B - window*rate), min(T, B + lookahead*rate)) where
    B is the boundary at which second ``index`` begins. With zero lookahead
    no sample at or past B is included, so the window at index 1 is empty.
    """
    grid = chunk(audio)
    if not 1 <= index <= grid.n_chunks:
        raise IndexError(f"second index {index} out of range [1, {grid.n_chunks}]")
    if window_s <= 0:
        raise ValueError(f"window_s must be positive, got {window_s}")
    if lookahead_s < 0:
        raise ValueError(f"lookahead_s must be non-negative, got {lookahead_s}")
    rate = audio.sample_rate
    boundary = (index - 1) * grid.n_block
    start = max(0, boundary - int(round(window_s * rate)))
    end = min(audio.n_samples, boundary + int(round(lookahead_s * rate)))
    end = max(end, start)
    return CausalWindow(
        index=index, window_s=window_s, lookahead_s=lookahead_s, start=start, end=end
    )
