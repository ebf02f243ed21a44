"""Build, augment, and serialize a thought graph from rationale triples.

Triples are (subject, relation, object) spans pulled from a reasoning trace.
Node identity is case-insensitive; repeated pairs accumulate in the
adjacency counts. A one-shot augmentation appends the current speech-act
labels as extra nodes.
"""

from duplexkit.behavior_labels import HighAct, LowAct
from duplexkit.thought_graph import (
    Triple,
    augment_with_speech_acts,
    build_text_graph,
    deserialize,
    serialize,
)

TRIPLES = [
    Triple("the sky", "darkens before", "rain"),
    Triple("rain", "soaks", "the trail"),
    Triple("the sky", "darkens before", "rain"),   # repeat: count goes to 2
    Triple("The Trail", "drains into", "the creek"),  # case-insensitive match
]


def show(graph):
    print("nodes:", graph.labels)
    print("adjacency:")
    for row in graph.adjacency:
        print("  ", " ".join(f"{v:2d}" for v in row))


def main():
    graph = build_text_graph(TRIPLES)
    show(graph)

    augmented = augment_with_speech_acts(graph, HighAct.DIRECTIVE, LowAct.TURN_TAKING)
    print("\nafter speech-act augmentation:")
    show(augmented)

    nodes_blob, adj_blob = serialize(augmented)
    print("\nserialized nodes:", nodes_blob.decode())
    print("serialized adjacency:", adj_blob.decode())

    restored = deserialize(nodes_blob, adj_blob)
    assert restored.labels == augmented.labels
    assert (restored.adjacency == augmented.adjacency).all()
    print("\nround trip ok")


if __name__ == "__main__":
    main()
