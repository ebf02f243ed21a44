import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duplexkit.behavior_labels import HighAct, LowAct
from duplexkit.thought_graph import (
    ThoughtGraph,
    Triple,
    augment_with_speech_acts,
    build_text_graph,
    deserialize,
    read_triples,
    sa_high_label,
    sa_low_label,
    serialize,
    union_nodes,
    write_triples,
)

from oracles import brute_adjacency

# hand-enumerated fixture: "rain" reached via two triples, repeated edge,
# case-insensitive merge of "Rain"/"rain"
FIXTURE = [
    Triple("sky", "produces", "Rain"),
    Triple("rain", "wets", "ground"),
    Triple("sky", "produces", "Rain"),
    Triple("ground", "absorbs", "rain"),
]
# nodes in first appearance order: sky, Rain, ground
FIXTURE_LABELS = ["sky", "Rain", "ground"]
FIXTURE_ADJ = np.array([
    [1, 2, 0],   # sky -> Rain twice, plus self loop
    [0, 1, 1],
    [0, 1, 1],
], dtype=np.int64)


def test_oracle_matches_hand_enumeration():
    labels, adj = brute_adjacency(FIXTURE)
    assert labels == FIXTURE_LABELS
    assert np.array_equal(adj, FIXTURE_ADJ)


def test_build_matches_hand_enumeration():
    g = build_text_graph(FIXTURE)
    assert g.labels == FIXTURE_LABELS
    assert g.kinds == ["text"] * 3
    assert np.array_equal(g.adjacency, FIXTURE_ADJ)


def test_self_triple_raises_diagonal_to_two():
    g = build_text_graph([Triple("echo", "repeats", "echo")])
    assert g.labels == ["echo"]
    assert np.array_equal(g.adjacency, np.array([[2]]))


def test_empty_triples_give_empty_graph():
    g = build_text_graph([])
    assert g.n == 0
    assert g.adjacency.shape == (0, 0)


def test_trace_is_n_when_subjects_differ_from_objects():
    g = build_text_graph([Triple("a", "r", "b"), Triple("b", "r", "c"),
                          Triple("a", "q", "c")])
    assert np.trace(g.adjacency) == g.n


def test_triple_rejects_blank_spans():
    with pytest.raises(ValueError):
        Triple("  ", "r", "b")
    with pytest.raises(ValueError):
        Triple("a", "r", "\t")


_spans = st.text(alphabet="abcXY ", min_size=1, max_size=6).filter(
    lambda s: s.strip())


@given(triples=st.lists(
    st.builds(Triple, subject=_spans, relation=st.just("rel"), object=_spans),
    max_size=30))
@settings(max_examples=80, deadline=None)
def test_build_matches_pair_counting_oracle(triples):
    g = build_text_graph(triples)
    labels, adj = brute_adjacency(triples)
    assert g.labels == labels
    assert np.array_equal(g.adjacency, adj)
    assert (np.diag(g.adjacency) >= 1).all()


# ---------------------------------------------------------------------------
# speech act augmentation

def test_augmentation_appends_identity_block():
    g = augment_with_speech_acts(build_text_graph(FIXTURE),
                                 HighAct.DIRECTIVE, LowAct.BACKCHANNEL)
    assert g.labels == FIXTURE_LABELS + ["SA_High=Directive", "SA_Low=Backchannel"]
    assert g.kinds == ["text"] * 3 + ["sa_high", "sa_low"]
    assert np.array_equal(g.adjacency[:3, :3], FIXTURE_ADJ)
    assert np.array_equal(g.adjacency[3:, 3:], np.eye(2, dtype=np.int64))
    assert not g.adjacency[:3, 3:].any()
    assert not g.adjacency[3:, :3].any()
    assert g.augmented


def test_double_augmentation_is_rejected():
    g = augment_with_speech_acts(build_text_graph(FIXTURE),
                                 HighAct.CONSTATIVE, LowAct.TURN_TAKING)
    with pytest.raises(ValueError):
        augment_with_speech_acts(g, HighAct.CONSTATIVE, LowAct.TURN_TAKING)


def test_sa_labels_name_the_acts():
    assert sa_high_label(HighAct.COMMISSIVE) == "SA_High=Commissive"
    assert sa_low_label(LowAct.INTERRUPTION) == "SA_Low=Interruption"


def test_union_nodes_collects_text_and_act_labels():
    got = union_nodes(FIXTURE, HighAct.CONSTATIVE, LowAct.CONTINUATION)
    assert got == {"sky", "Rain", "ground",
                   "SA_High=Constative", "SA_Low=Continuation"}


# ---------------------------------------------------------------------------
# serialization

def test_round_trip_plain_and_augmented():
    for g in (build_text_graph(FIXTURE),
              augment_with_speech_acts(build_text_graph(FIXTURE),
                                       HighAct.DIRECTIVE, LowAct.BACKCHANNEL),
              build_text_graph([])):
        nodes_b, adj_b = serialize(g)
        assert deserialize(nodes_b, adj_b) == g


def test_serialize_is_deterministic():
    g = build_text_graph(FIXTURE)
    assert serialize(g) == serialize(g)


def _blobs(**adj_overrides):
    g = build_text_graph(FIXTURE)
    nodes_b, adj_b = serialize(g)
    if adj_overrides:
        adj = json.loads(adj_b)
        adj.update(adj_overrides)
        adj_b = json.dumps(adj, separators=(",", ":")).encode()
    return nodes_b, adj_b


@pytest.mark.parametrize("mutate, message", [
    (lambda a: a["entries"].append([0, 2, 0]), "non-positive"),
    (lambda a: a["entries"].append([0, 2, -1]), "non-positive"),
    (lambda a: a["entries"].append([5, 0, 1]), "out of range"),
    (lambda a: a["entries"].insert(0, a["entries"][0]), "row-major"),
    (lambda a: a["entries"].reverse(), "row-major"),
    (lambda a: a.update(n=99), "does not match"),
])
def test_deserialize_rejects_malformed_adjacency(mutate, message):
    nodes_b, adj_b = _blobs()
    adj = json.loads(adj_b)
    mutate(adj)
    bad = json.dumps(adj, separators=(",", ":")).encode()
    with pytest.raises(ValueError, match=message):
        deserialize(nodes_b, bad)


def test_deserialize_rejects_duplicate_text_nodes():
    nodes = json.dumps([{"label": "Sky", "kind": "text"},
                        {"label": "sky ", "kind": "text"}]).encode()
    adj = json.dumps({"n": 2, "entries": [[0, 0, 1], [1, 1, 1]]}).encode()
    with pytest.raises(ValueError, match="duplicate text node"):
        deserialize(nodes, adj)


def test_deserialize_rejects_duplicate_act_nodes():
    nodes = json.dumps([{"label": "SA_High=Constative", "kind": "sa_high"},
                        {"label": "SA_High=Directive", "kind": "sa_high"}]).encode()
    adj = json.dumps({"n": 2, "entries": [[0, 0, 1], [1, 1, 1]]}).encode()
    with pytest.raises(ValueError, match="more than one"):
        deserialize(nodes, adj)


def test_deserialize_rejects_garbage_json():
    with pytest.raises(ValueError, match="malformed"):
        deserialize(b"{not json", b"{}")


# ---------------------------------------------------------------------------
# triples file I/O

def test_triples_round_trip_preserves_grouping(tmp_path):
    records = [
        ("conv1", 0, Triple("a", "r", "b")),
        ("conv1", 0, Triple("b", "r", "c")),
        ("conv1", 3, Triple("c", "r", "d")),
        ("conv2", 0, Triple("x", "r", "y")),
    ]
    path = tmp_path / "triples.jsonl"
    write_triples(records, path)
    groups = read_triples(path)
    assert list(groups) == [("conv1", 0), ("conv1", 3), ("conv2", 0)]
    assert groups[("conv1", 0)] == [Triple("a", "r", "b"), Triple("b", "r", "c")]
    assert groups[("conv2", 0)] == [Triple("x", "r", "y")]


def test_read_triples_reports_line_numbers(tmp_path):
    path = tmp_path / "triples.jsonl"
    path.write_text('{"audio_id": "a", "t": 0, "subject": "s", '
                    '"relation": "r", "object": "o"}\n{"t": 1}\n')
    with pytest.raises(ValueError, match=":2:"):
        read_triples(path)
