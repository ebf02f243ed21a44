import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.io import wavfile

from duplexkit.audio_io import (
    AudioFormatError,
    DuplexAudio,
    causal_window,
    chunk,
    load_duplex,
    resample,
    save_duplex,
)
from helpers import tone


def test_duplex_audio_validates_and_freezes():
    audio = DuplexAudio(16000, np.zeros(16000), np.zeros(16000))
    assert audio.n_samples == 16000
    assert audio.duration_s == 1.0
    with pytest.raises(ValueError):
        DuplexAudio(16000, np.zeros(10), np.zeros(11))
    with pytest.raises(ValueError):
        DuplexAudio(16000, np.zeros(0), np.zeros(0))
    with pytest.raises(ValueError):
        audio.left[0] = 1.0  # numpy read-only arrays raise ValueError


def test_channel_accessor():
    audio = DuplexAudio(8000, np.ones(100), np.zeros(100))
    assert audio.channel("left")[0] == 1.0
    assert audio.channel("right")[0] == 0.0


def test_int16_round_trip(tmp_path):
    rate = 16000
    left = tone(0.5, rate, 220.0)
    right = tone(0.5, rate, 330.0)
    path = tmp_path / "a.wav"
    save_duplex(DuplexAudio(rate, left, right), path)
    loaded = load_duplex(path)
    assert loaded.sample_rate == rate
    assert not loaded.mono_duplicated
    # int16 quantization: within half a step of the original
    assert np.abs(loaded.left - left).max() <= 0.5 / 32768 + 1e-12
    assert np.abs(loaded.right - right).max() <= 0.5 / 32768 + 1e-12


def test_save_clips_out_of_range_samples(tmp_path):
    rate = 8000
    hot = 2.0 * np.ones(rate)
    path = tmp_path / "hot.wav"
    save_duplex(DuplexAudio(rate, hot, -hot), path)
    loaded = load_duplex(path)
    assert loaded.left.max() <= 1.0
    assert loaded.right.min() >= -1.0
    assert loaded.left.min() > 0.99


def test_mono_is_duplicated_with_warning(tmp_path):
    rate = 16000
    mono = (tone(0.25, rate) * 32768).astype(np.int16)
    path = tmp_path / "mono.wav"
    wavfile.write(path, rate, mono)
    with pytest.warns(UserWarning):
        loaded = load_duplex(path)
    assert loaded.mono_duplicated
    assert np.array_equal(loaded.left, loaded.right)


def test_float32_samples_pass_through(tmp_path):
    rate = 16000
    data = np.stack([tone(0.25, rate), tone(0.25, rate, 440.0)],
                    axis=1).astype(np.float32)
    path = tmp_path / "f32.wav"
    wavfile.write(path, rate, data)
    loaded = load_duplex(path)
    assert np.allclose(loaded.left, data[:, 0], atol=1e-7)


def test_three_channel_file_rejected(tmp_path):
    rate = 8000
    data = np.zeros((rate, 3), dtype=np.int16)
    path = tmp_path / "tri.wav"
    wavfile.write(path, rate, data)
    with pytest.raises(AudioFormatError):
        load_duplex(path)


def test_chunk_grid_drops_trailing_partial():
    rate = 16000
    audio = DuplexAudio(rate, np.zeros(int(3.5 * rate)), np.zeros(int(3.5 * rate)))
    grid = chunk(audio)
    assert grid.n_block == rate
    assert grid.n_chunks == 3
    assert not grid.short
    assert grid.boundary(0) == 0
    assert grid.boundary(1) == rate
    assert grid.sample_span(1) == (0, rate)
    assert grid.sample_span(3) == (2 * rate, 3 * rate)
    with pytest.raises(IndexError):
        grid.sample_span(4)
    with pytest.raises(IndexError):
        grid.sample_span(0)


def test_sub_second_audio_yields_zero_chunks_flagged():
    rate = 16000
    audio = DuplexAudio(rate, np.zeros(rate // 2), np.zeros(rate // 2))
    grid = chunk(audio)
    assert grid.n_chunks == 0
    assert grid.short


@given(n_seconds=st.integers(1, 9), extra=st.integers(0, 15999))
@settings(max_examples=40, deadline=None)
def test_chunk_spans_tile_the_complete_seconds(n_seconds, extra):
    rate = 16000
    n = n_seconds * rate + extra
    grid = chunk(DuplexAudio(rate, np.zeros(n), np.zeros(n)))
    assert grid.n_chunks == n // rate
    assert not grid.short
    spans = [grid.sample_span(i) for i in range(1, grid.n_chunks + 1)]
    assert spans[0][0] == 0
    for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
        assert a1 == b0
        assert a1 - a0 == rate
    assert spans[-1][1] == grid.n_chunks * rate


def test_causal_window_formula():
    rate = 16000
    audio = DuplexAudio(rate, np.zeros(10 * rate), np.zeros(10 * rate))
    # second 4 with a 2 s window: [B_3 - 2s, B_3) = [1*rate, 3*rate)
    win = causal_window(audio, 4, window_s=2.0)
    assert (win.start, win.end) == (1 * rate, 3 * rate)
    assert win.n_samples == 2 * rate
    # lookahead extends the right edge
    win = causal_window(audio, 4, window_s=2.0, lookahead_s=1.5)
    assert (win.start, win.end) == (1 * rate, 3 * rate + int(1.5 * rate))
    # clamped at both ends
    win = causal_window(audio, 2, window_s=30.0, lookahead_s=30.0)
    assert (win.start, win.end) == (0, 10 * rate)


def test_first_second_window_is_empty_without_lookahead():
    rate = 8000
    audio = DuplexAudio(rate, np.zeros(3 * rate), np.zeros(3 * rate))
    win = causal_window(audio, 1, window_s=30.0)
    assert win.n_samples == 0
    # with lookahead the first window sees the opening samples
    win = causal_window(audio, 1, window_s=30.0, lookahead_s=1.0)
    assert (win.start, win.end) == (0, rate)


def test_causal_window_never_empty_from_second_two():
    rate = 8000
    audio = DuplexAudio(rate, np.zeros(5 * rate), np.zeros(5 * rate))
    for i in range(2, 6):
        for w in (0.25, 1.0, 30.0):
            assert causal_window(audio, i, window_s=w).n_samples > 0


def test_causal_window_validates_arguments():
    rate = 8000
    audio = DuplexAudio(rate, np.zeros(2 * rate), np.zeros(2 * rate))
    with pytest.raises(IndexError):
        causal_window(audio, 0, 1.0)
    with pytest.raises(IndexError):
        causal_window(audio, 3, 1.0)
    with pytest.raises(ValueError):
        causal_window(audio, 1, 0.0)
    with pytest.raises(ValueError):
        causal_window(audio, 1, 1.0, lookahead_s=-1.0)


@given(index=st.integers(2, 8), w1=st.floats(0.5, 10.0), grow=st.floats(0.0, 10.0))
@settings(max_examples=40, deadline=None)
def test_wider_window_never_sees_less(index, w1, grow):
    rate = 8000
    audio = DuplexAudio(rate, np.zeros(8 * rate), np.zeros(8 * rate))
    a = causal_window(audio, index, window_s=w1)
    b = causal_window(audio, index, window_s=w1 + grow)
    assert b.start <= a.start
    assert b.end == a.end
    assert b.n_samples >= a.n_samples


def test_resample_identity_same_rate():
    rate = 16000
    audio = DuplexAudio(rate, tone(0.5, rate), tone(0.5, rate, 440.0))
    out = resample(audio, rate)
    assert out.sample_rate == rate
    assert np.array_equal(out.left, audio.left)


@pytest.mark.parametrize("method", ["linear", "sinc"])
def test_downsample_length_and_dc(method):
    source, target = 48000, 16000
    n = source // 2
    audio = DuplexAudio(source, 0.5 * np.ones(n), -0.25 * np.ones(n))
    out = resample(audio, target, method=method)
    assert out.n_samples == round(n * target / source)
    interior = slice(100, -100)
    assert np.allclose(out.left[interior], 0.5, atol=1e-6)
    assert np.allclose(out.right[interior], -0.25, atol=1e-6)


@pytest.mark.parametrize("method", ["linear", "sinc"])
def test_downsample_preserves_tone_rms(method):
    # analytic RMS of a sine is amp / sqrt(2); check both against it
    source, target = 48000, 16000
    amp = 0.5
    x = tone(1.0, source, freq=440.0, amp=amp)
    out = resample(DuplexAudio(source, x, x), target, method=method)
    rms_out = np.sqrt(np.mean(out.left[400:-400] ** 2))
    assert abs(rms_out - amp / np.sqrt(2)) < 0.01 * amp / np.sqrt(2)


def test_resample_round_trip_energy():
    # band-limited below rate/4: energy within 2% after down-and-back
    rate = 16000
    x = tone(1.0, rate, freq=1000.0, amp=0.4) + tone(1.0, rate, freq=2500.0, amp=0.2)
    down = resample(DuplexAudio(rate, x, x), 8000, method="sinc")
    back = resample(down, rate, method="sinc")
    e_in = np.sum(x[800:-800] ** 2)
    e_out = np.sum(back.left[800:-800] ** 2)
    assert abs(e_out - e_in) / e_in < 0.02


def test_causal_window_span_arithmetic():
    rate = 16000
    n = 50 * rate
    audio = DuplexAudio(rate, np.zeros(n), np.zeros(n))
    assert (causal_window(audio, 5, 30.0).start,
            causal_window(audio, 5, 30.0).end) == (0, 4 * rate)
    win = causal_window(audio, 40, 30.0)
    assert (win.start, win.end) == (9 * rate, 39 * rate)
    win = causal_window(audio, 40, 30.0, lookahead_s=5.0)
    assert win.end == min(n, 44 * rate)


def test_resample_rejects_bad_args():
    audio = DuplexAudio(16000, np.zeros(16000), np.zeros(16000))
    with pytest.raises(ValueError):
        resample(audio, 0)
    with pytest.raises(ValueError):
        resample(audio, 8000, method="cubic")
