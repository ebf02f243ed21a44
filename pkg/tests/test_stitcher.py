import json
import math

import numpy as np
import pytest
from scipy.io import wavfile

from duplexkit.behavior_labels import HighAct, LowAct
from duplexkit.stitcher import (
    FADE_MS,
    SOFT_CLIP_KNEE,
    ScriptError,
    ScriptUtterance,
    emit_labels,
    load_clip,
    load_clip_manifest,
    parse_script,
    plan_timestamps,
    render_script,
    save_plan,
    soft_clip,
    stitch,
)
from duplexkit.vad_events import compute_vad, extract_events

SCRIPT = """\
(1) speaker1: I was thinking we could [backchannel] head out early tomorrow {Constatives}
(2) speaker2(backchannel): Yeah. {Acknowledgments}
(3) speaker2: Actually hold on, is the [interruption] forecast even good? {Directives}
(4) speaker1(interruption): It's supposed to be clear all weekend, I promise. {Commissives}
(5) speaker2: Fine, early it is. {Acknowledgments}
"""
DURATIONS = [3000.0, 800.0, 2600.0, 2200.0, 1500.0]


# ---------------------------------------------------------------------------
# grammar

def test_parse_fixture_structure():
    utts = parse_script(SCRIPT)
    assert [u.index for u in utts] == [1, 2, 3, 4, 5]
    assert [u.speaker for u in utts] == ["speaker1", "speaker2", "speaker2",
                                         "speaker1", "speaker2"]
    assert [u.event for u in utts] == [None, "backchannel", None,
                                       "interruption", None]
    assert utts[0].text == "I was thinking we could head out early tomorrow"
    assert utts[0].marker == "backchannel"
    assert utts[0].own_marker_offset == 24
    assert utts[1].marker_offset == 24          # copied from the parent
    assert utts[2].text == "Actually hold on, is the forecast even good?"
    assert utts[2].own_marker_offset == 25
    assert utts[3].marker_offset == 25
    assert [u.intent for u in utts] == [
        HighAct.CONSTATIVE, HighAct.ACKNOWLEDGMENT, HighAct.DIRECTIVE,
        HighAct.COMMISSIVE, HighAct.ACKNOWLEDGMENT]


def test_marker_at_text_edges_keeps_boundary_offsets():
    utts = parse_script(
        "(1) speaker1: [backchannel] hey there {Constatives}\n"
        "(2) speaker2(backchannel): mm {Acknowledgments}\n")
    assert utts[0].text == "hey there"
    assert utts[0].own_marker_offset == 0
    utts = parse_script(
        "(1) speaker1: hey there [backchannel] {Constatives}\n"
        "(2) speaker2(backchannel): mm {Acknowledgments}\n")
    assert utts[0].text == "hey there"
    assert utts[0].own_marker_offset == 9


@pytest.mark.parametrize("script, message", [
    ("speaker1: hi {Constatives}", "does not match"),
    ("(2) speaker1: hi {Constatives}", "expected index 1"),
    ("(1) speaker3: hi {Constatives}", "unknown speaker"),
    ("(1) speaker1(overlap): hi {Constatives}", "unknown event"),
    ("(1) speaker1: hi there", "missing intent"),
    ("(1) speaker1: hi {Weird}", "unknown intent"),
    ("(1) speaker1: hi {Constatives}\n"
     "(2) speaker2(backchannel): mm {Acknowledgments}", "without a"),
    ("(1) speaker1: hi [interruption] there {Constatives}\n"
     "(2) speaker2(backchannel): mm {Acknowledgments}", "without a"),
    ("(1) speaker1: hi [backchannel] there {Constatives}\n"
     "(2) speaker2: and then {Constatives}", "no matching event"),
    ("(1) speaker1: hi [backchannel] there {Constatives}", "no matching event"),
    ("(1) speaker1: a [backchannel] b [backchannel] c {Constatives}",
     "more than one"),
])
def test_grammar_violations(script, message):
    with pytest.raises(ScriptError, match=message):
        parse_script(script)


def test_blank_script_parses_empty():
    assert parse_script("") == []
    assert parse_script("\n  \n") == []


def test_render_parse_round_trip():
    utts = parse_script(SCRIPT)
    again = parse_script(render_script(utts))
    assert again == utts


def test_render_round_trips_edge_markers():
    for script in (
        "(1) speaker1: [backchannel] hey {Constatives}\n"
        "(2) speaker2(backchannel): mm {Acknowledgments}",
        "(1) speaker1: hey [backchannel] {Constatives}\n"
        "(2) speaker2(backchannel): mm {Acknowledgments}",
    ):
        utts = parse_script(script)
        assert parse_script(render_script(utts)) == utts


# ---------------------------------------------------------------------------
# timestamp planning

def test_plan_arithmetic_hand_computed():
    plan = plan_timestamps(parse_script(SCRIPT), DURATIONS)
    p = plan.placements
    assert p[0].start_ms == 0.0
    assert p[0].audible_ms == 3000.0
    # backchannel child: 3000 * 24/47 into the parent, parent untouched
    assert p[1].start_ms == pytest.approx(3000.0 * 24 / 47)
    assert p[0].audible_ms == 3000.0
    # next floor turn waits for the max audible end plus the gap
    assert p[2].start_ms == pytest.approx(3200.0)
    # interruption child: 3200 + 2600 * 25/44
    assert p[3].start_ms == pytest.approx(3200.0 + 2600.0 * 25 / 44)
    # parent truncated 300 ms after the child start
    assert p[2].audible_ms == pytest.approx(p[3].start_ms + 300.0 - 3200.0)
    assert p[2].audible_ms < 2600.0
    assert p[4].start_ms == pytest.approx(p[3].end_ms + 200.0)
    assert plan.total_ms == pytest.approx(p[4].start_ms + 1500.0)
    assert [q.channel for q in p] == ["left", "right", "right", "left", "right"]
    assert [q.parent_index for q in p] == [None, 1, None, 3, None]


def test_backchannel_never_truncates():
    script = parse_script(
        "(1) speaker1: one two [backchannel] three four {Constatives}\n"
        "(2) speaker2(backchannel): yeah {Acknowledgments}\n")
    plan = plan_timestamps(script, [2000.0, 1500.0])
    assert plan.placements[0].audible_ms == 2000.0
    # child may outlast the parent; the cursor honours the later end
    assert plan.total_ms == pytest.approx(plan.placements[1].end_ms)


def test_interruption_cut_respects_short_parents():
    # child lands 90% in: the cut would fall past the clip end, so no change
    script = parse_script(
        "(1) speaker1: aaaaaaaaa [interruption] b {Constatives}\n"
        "(2) speaker2(interruption): got it {Directives}\n")
    assert script[0].text == "aaaaaaaaa b"
    plan = plan_timestamps(script, [1000.0, 500.0], interruption_cut_ms=300.0)
    child_start = 1000.0 * 10 / 11
    assert plan.placements[1].start_ms == pytest.approx(child_start)
    assert plan.placements[0].audible_ms == pytest.approx(1000.0)


def test_gap_is_configurable():
    script = parse_script("(1) speaker1: a b {Constatives}\n"
                          "(2) speaker2: c d {Constatives}\n")
    plan = plan_timestamps(script, [1000.0, 1000.0], inter_turn_gap_ms=1500.0)
    assert plan.placements[1].start_ms == 2500.0


@pytest.mark.parametrize("body", [
    "[backchannel] hey",   # offset 0 -> fraction 0
    "hey [backchannel]",   # offset len(text) -> fraction 1
])
def test_marker_on_the_boundary_cannot_be_placed(body):
    script = parse_script(f"(1) speaker1: {body} {{Constatives}}\n"
                          "(2) speaker2(backchannel): mm {Acknowledgments}\n")
    with pytest.raises(ScriptError, match="strictly inside"):
        plan_timestamps(script, [1000.0, 400.0])


def test_plan_validates_durations():
    script = parse_script("(1) speaker1: hi there {Constatives}\n")
    with pytest.raises(ValueError, match="durations"):
        plan_timestamps(script, [])
    with pytest.raises(ValueError, match="positive"):
        plan_timestamps(script, [0.0])


def test_plan_serializes_to_json(tmp_path):
    plan = plan_timestamps(parse_script(SCRIPT), DURATIONS)
    path = tmp_path / "plan.json"
    save_plan(plan, path)
    with open(path) as fh:
        loaded = json.load(fh)
    assert loaded["total_ms"] == pytest.approx(plan.total_ms)
    assert len(loaded["placements"]) == 5
    assert loaded["placements"][3]["event"] == "interruption"
    assert loaded["placements"][3]["intent"] == "Commissive"


# ---------------------------------------------------------------------------
# mixing

def test_soft_clip_is_identity_below_the_knee():
    x = np.array([-0.8, -0.3, 0.0, 0.5, 0.8])
    assert np.array_equal(soft_clip(x), x)


def test_soft_clip_compresses_and_bounds():
    x = np.array([0.9, 1.5, 4.0, -2.0])
    y = soft_clip(x)
    assert (np.abs(y) < 1.0).all()
    assert y[0] == pytest.approx(0.8 + 0.2 * math.tanh(0.1 / 0.2))
    assert y[3] == pytest.approx(-(0.8 + 0.2 * math.tanh(1.2 / 0.2)))
    # monotone: larger input, larger output
    order = np.argsort(x)
    assert (np.diff(y[order]) > 0).all()


def _const_clips(rate):
    return [np.full(int(d * rate / 1000), 0.5) for d in DURATIONS]


def test_stitch_channel_discipline():
    rate = 1000  # 1 sample per ms keeps the index arithmetic exact
    plan = plan_timestamps(parse_script(SCRIPT), DURATIONS)
    audio = stitch(plan, _const_clips(rate), rate)
    assert audio.sample_rate == rate
    assert len(audio.left) == int(math.ceil(plan.total_ms))
    # speaker1 lives on the left: utterances 1 and 4 only
    p4 = plan.placements[3]
    left_active = np.flatnonzero(audio.left != 0.0)
    assert left_active.min() == 0
    assert 3000 <= int(round(p4.start_ms))  # silence between the two spans
    assert np.all(audio.left[3000:int(round(p4.start_ms))] == 0.0)
    # speaker2's channel is silent between the truncated turn and the last one
    p3, p5 = plan.placements[2], plan.placements[4]
    r_stop = int(round(p3.start_ms + p3.audible_ms))
    r_resume = int(round(p5.start_ms))
    assert np.all(audio.right[r_stop:r_resume] == 0.0)
    assert np.any(audio.right[r_resume:] != 0.0)


def test_stitch_truncation_applies_linear_fade():
    rate = 1000
    plan = plan_timestamps(parse_script(SCRIPT), DURATIONS)
    audio = stitch(plan, _const_clips(rate), rate)
    p3 = plan.placements[2]
    start = int(round(p3.start_ms))
    n_audible = int(round(p3.audible_ms))
    fade_n = int(round(FADE_MS * rate / 1000.0))
    tail = audio.right[start + n_audible - fade_n:start + n_audible]
    assert tail[0] == pytest.approx(0.5)
    assert tail[-1] == pytest.approx(0.0)
    assert (np.diff(tail) <= 1e-12).all()
    # just before the fade the parent is still at full level
    assert audio.right[start + n_audible - fade_n - 1] == pytest.approx(0.5)


def test_stitch_soft_clips_hot_signals():
    script = parse_script("(1) speaker1: loud {Constatives}\n")
    plan = plan_timestamps(script, [1000.0])
    audio = stitch(plan, [np.full(1000, 0.95)], 1000)
    peak = np.abs(audio.left).max()
    assert peak == pytest.approx(0.8 + 0.2 * math.tanh(0.15 / 0.2))
    assert peak < 0.95


def test_stitch_validates_clip_lengths():
    plan = plan_timestamps(parse_script(SCRIPT), DURATIONS)
    clips = _const_clips(1000)
    clips[2] = clips[2][:-100]  # 100 ms short
    with pytest.raises(ValueError, match="clip is"):
        stitch(plan, clips, 1000)
    with pytest.raises(ValueError, match="clips for"):
        stitch(plan, clips[:-1], 1000)


# ---------------------------------------------------------------------------
# labels

def test_emit_labels_hand_enumeration():
    plan = plan_timestamps(parse_script(SCRIPT), DURATIONS)
    tl = emit_labels(plan, audio_id="demo")
    assert tl.audio_id == "demo"
    assert len(tl.points) == 9
    assert [p.lo for p in tl.points] == [
        LowAct.CONTINUATION, LowAct.BACKCHANNEL, LowAct.BACKCHANNEL,
        LowAct.TURN_TAKING, LowAct.INTERRUPTION, LowAct.INTERRUPTION,
        LowAct.INTERRUPTION, LowAct.TURN_TAKING, LowAct.CONTINUATION,
    ]
    assert [p.hi for p in tl.points] == [
        HighAct.CONSTATIVE, HighAct.CONSTATIVE, HighAct.CONSTATIVE,
        HighAct.DIRECTIVE, HighAct.DIRECTIVE, HighAct.COMMISSIVE,
        HighAct.COMMISSIVE, HighAct.ACKNOWLEDGMENT, HighAct.ACKNOWLEDGMENT,
    ]


def test_emit_labels_uncovered_second_has_no_intent():
    script = parse_script("(1) speaker1: a b {Constatives}\n"
                          "(2) speaker2: c d {Directives}\n")
    plan = plan_timestamps(script, [800.0, 800.0], inter_turn_gap_ms=1500.0)
    tl = emit_labels(plan)
    assert [p.hi for p in tl.points] == [
        HighAct.CONSTATIVE, None, HighAct.DIRECTIVE, HighAct.DIRECTIVE]
    assert [p.lo for p in tl.points] == [
        LowAct.CONTINUATION, LowAct.CONTINUATION, LowAct.TURN_TAKING,
        LowAct.CONTINUATION]


def test_same_speaker_turns_do_not_mark_turn_taking():
    script = parse_script("(1) speaker1: a b {Constatives}\n"
                          "(2) speaker1: c d {Directives}\n")
    plan = plan_timestamps(script, [900.0, 900.0])
    tl = emit_labels(plan)
    assert all(p.lo != LowAct.TURN_TAKING for p in tl.points)


# ---------------------------------------------------------------------------
# clip I/O

def test_load_clip_manifest_orders_and_validates(tmp_path):
    path = tmp_path / "clips.jsonl"
    path.write_text(
        '{"index": 2, "path": "b.wav", "duration_ms": 500}\n'
        '{"index": 1, "path": "a.wav"}\n')
    entries = load_clip_manifest(path)
    assert entries == [(1, "a.wav", None), (2, "b.wav", 500)]
    path.write_text('{"index": 3, "path": "c.wav"}\n')
    with pytest.raises(ValueError, match="1..N"):
        load_clip_manifest(path)
    path.write_text('{"path": "c.wav"}\n')
    with pytest.raises(ValueError, match=":1:"):
        load_clip_manifest(path)


def test_load_clip_mono_and_stereo(tmp_path):
    rate = 8000
    mono = (0.25 * np.sin(2 * np.pi * 220.0 * np.arange(rate) / rate))
    mono_path = tmp_path / "mono.wav"
    wavfile.write(mono_path, rate, (mono * 32767).astype(np.int16))
    samples, got_rate = load_clip(mono_path)
    assert got_rate == rate
    assert samples.shape == (rate,)
    assert np.max(np.abs(samples - mono)) < 1e-3

    stereo = np.stack([mono, -mono], axis=1)
    stereo_path = tmp_path / "stereo.wav"
    wavfile.write(stereo_path, rate, (stereo * 32767).astype(np.int16))
    with pytest.warns(UserWarning, match="downmixed"):
        samples, _ = load_clip(stereo_path)
    assert np.max(np.abs(samples)) < 1e-3  # channels cancel


# ---------------------------------------------------------------------------
# round trip through the analyzer

def test_stitched_fixture_reanalysis_finds_the_overlaps():
    rate = 8000
    script = parse_script(SCRIPT)
    plan = plan_timestamps(script, DURATIONS)
    clips = []
    for p, d in zip(plan.placements, DURATIONS):
        n = int(d * rate / 1000)
        freq = 220.0 if p.channel == "left" else 330.0
        clips.append(0.4 * np.sin(2 * np.pi * freq * np.arange(n) / rate))
    audio = stitch(plan, clips, rate)
    events = extract_events(compute_vad(audio))
    overlaps = [e for e in events if e.kind == "Overlap"]
    assert len(overlaps) >= 2  # backchannel and interruption both overlap
    # overlap spans must sit inside the children's planned extents
    child_spans = [(p.start_ms, p.end_ms) for p in plan.placements if p.event]
    for ov in overlaps:
        assert any(s - 60.0 <= ov.start_ms and ov.end_ms <= e + 60.0
                   for s, e in child_spans)
