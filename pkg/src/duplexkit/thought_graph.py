"""Per-second concept graphs built from subject-relation-object triples.

Nodes are the unique subject and object spans (relations are edge counts,
not nodes), in first-appearance order with case-insensitive, trimmed
de-duplication. The adjacency matrix is I + sum of e_subject e_object^T, so
every node carries a structural self-loop and repeated triples accumulate
counts. A graph can be augmented once with two speech-act nodes that sit in
their own block (identity padding, no edges into the text block).
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .behavior_labels import HIGH_NAMES, LOW_NAMES, HighAct, LowAct

NODE_KINDS = ("text", "sa_high", "sa_low")


@dataclass(frozen=True)
class Triple:
    subject: str
    relation: str
    object: str

    def __post_init__(self):
        if not self.subject.strip():
            raise ValueError("triple subject is empty after trimming")
        if not self.object.strip():
            raise ValueError("triple object is empty after trimming")


@dataclass
class ThoughtGraph:
    labels: list
    kinds: list
    adjacency: np.ndarray

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=np.int64)
        n = len(self.labels)
        if len(self.kinds) != n:
            raise ValueError("labels and kinds length mismatch")
        if self.adjacency.shape != (n, n):
            raise ValueError(f"adjacency shape {self.adjacency.shape} != ({n}, {n})")
        for kind in self.kinds:
            if kind not in NODE_KINDS:
                raise ValueError(f"unknown node kind {kind!r}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def augmented(self) -> bool:
        return any(k != "text" for k in self.kinds)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThoughtGraph):
            return NotImplemented
        return (self.labels == other.labels and self.kinds == other.kinds
                and np.array_equal(self.adjacency, other.adjacency))


def _node_key(span: str) -> str:
    return span.strip().lower()


def build_text_graph(triples) -> ThoughtGraph:
    """Graph over the triples' subject/object spans.

    Node order is first appearance (subject before object within a triple);
    spans equal after trim+lowercase share a node labeled by the first-seen
    surface form. A triple whose subject equals its object increments that
    node's diagonal beyond the structural self-loop.
    """
    labels: list[str] = []
    index: dict[str, int] = {}
    pairs = []
    for tr in triples:
        ids = []
        for span in (tr.subject, tr.object):
            key = _node_key(span)
            if key not in index:
                index[key] = len(labels)
                labels.append(span.strip())
            ids.append(index[key])
        pairs.append(ids)
    n = len(labels)
    adjacency = np.eye(n, dtype=np.int64)
    for s, o in pairs:
        adjacency[s, o] += 1
    return ThoughtGraph(labels=labels, kinds=["text"] * n, adjacency=adjacency)


def sa_high_label(hi: HighAct) -> str:
    return f"SA_High={HIGH_NAMES[hi]}"


def sa_low_label(lo: LowAct) -> str:
    return f"SA_Low={LOW_NAMES[lo]}"


def augment_with_speech_acts(graph: ThoughtGraph, hi: HighAct, lo: LowAct) -> ThoughtGraph:
    """Append the two speech-act nodes as an identity block. One-shot:
    augmenting an already augmented graph is an error."""
    if graph.augmented:
        raise ValueError("graph already carries speech-act nodes")
    labels = list(graph.labels) + [sa_high_label(hi), sa_low_label(lo)]
    kinds = list(graph.kinds) + ["sa_high", "sa_low"]
    n = graph.n
    adjacency = np.eye(n + 2, dtype=np.int64)
    adjacency[:n, :n] = graph.adjacency
    return ThoughtGraph(labels=labels, kinds=kinds, adjacency=adjacency)


def union_nodes(triples, hi: HighAct, lo: LowAct) -> set:
    """Node label set of the augmented graph for these triples and acts."""
    graph = augment_with_speech_acts(build_text_graph(triples), hi, lo)
    return set(graph.labels)


def serialize(graph: ThoughtGraph) -> tuple[bytes, bytes]:
    """Canonical (nodes, adjacency) byte blobs.

    Nodes: JSON array of {label, kind}. Adjacency: {"n": n, "entries":
    [[row, col, count], ...]} listing nonzero counts in row-major order.
    """
    nodes = [{"label": lb, "kind": kd} for lb, kd in zip(graph.labels, graph.kinds)]
    rows, cols = np.nonzero(graph.adjacency)
    entries = [[int(r), int(c), int(graph.adjacency[r, c])] for r, c in zip(rows, cols)]
    nodes_bytes = json.dumps(nodes, separators=(",", ":")).encode()
    adj_bytes = json.dumps({"n": graph.n, "entries": entries},
                           separators=(",", ":")).encode()
    return nodes_bytes, adj_bytes


def deserialize(nodes_bytes: bytes, adj_bytes: bytes) -> ThoughtGraph:
    """Strict inverse of serialize: rejects zero/negative counts, out-of-range
    or duplicate indices, non-canonical entry order, and duplicate text labels."""
    try:
        nodes = json.loads(nodes_bytes)
        adj = json.loads(adj_bytes)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed graph JSON: {exc}") from exc
    if not isinstance(nodes, list):
        raise ValueError("nodes blob must be a JSON array")
    labels, kinds = [], []
    seen_text = set()
    for rec in nodes:
        try:
            label, kind = rec["label"], rec["kind"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed node record {rec!r}") from exc
        if kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {kind!r}")
        if kind == "text":
            key = _node_key(label)
            if key in seen_text:
                raise ValueError(f"duplicate text node {label!r}")
            seen_text.add(key)
        labels.append(label)
        kinds.append(kind)
    for kind in ("sa_high", "sa_low"):
        if kinds.count(kind) > 1:
            raise ValueError(f"more than one {kind} node")
    n = adj.get("n")
    entries = adj.get("entries")
    if n != len(labels):
        raise ValueError(f"adjacency n={n} does not match {len(labels)} nodes")
    if not isinstance(entries, list):
        raise ValueError("adjacency entries must be a list")
    adjacency = np.zeros((n, n), dtype=np.int64)
    prev = None
    for entry in entries:
        if not (isinstance(entry, list) and len(entry) == 3):
            raise ValueError(f"malformed adjacency entry {entry!r}")
        r, c, count = entry
        if not all(isinstance(v, int) for v in entry):
            raise ValueError(f"non-integer adjacency entry {entry!r}")
        if not (0 <= r < n and 0 <= c < n):
            raise ValueError(f"adjacency index ({r}, {c}) out of range for n={n}")
        if count <= 0:
            raise ValueError(f"adjacency entry ({r}, {c}) lists non-positive count {count}")
        if prev is not None and (r, c) <= prev:
            raise ValueError("adjacency entries must be row-major sorted and unique")
        prev = (r, c)
        adjacency[r, c] = count
    return ThoughtGraph(labels=labels, kinds=kinds, adjacency=adjacency)


def read_triples(path) -> "OrderedDict[tuple, list[Triple]]":
    """Triples JSONL grouped by (audio_id, t), file order preserved."""
    groups: OrderedDict[tuple, list[Triple]] = OrderedDict()
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (rec["audio_id"], int(rec["t"]))
                triple = Triple(str(rec["subject"]), str(rec["relation"]),
                                str(rec["object"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed triple record: {exc}") from exc
            groups.setdefault(key, []).append(triple)
    return groups


def write_triples(records, path) -> None:
    """records: iterable of (audio_id, t, Triple)."""
    with open(path, "w") as fh:
        for audio_id, t, tr in records:
            fh.write(json.dumps({
                "audio_id": audio_id, "t": t,
                "subject": tr.subject, "relation": tr.relation, "object": tr.object,
            }) + "\n")
