import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from tempgnn.data.events import LabeledInstance
from tempgnn.errors import DataError
from tempgnn.temporal.bucketizer import Bucketizer

logger = logging.getLogger(__name__)


class Direction(Enum):
    INCOMING = "incoming"
    OUTGOING = "outgoing"


@dataclass(frozen=True, kw_only=True)
class SessionGraph:
    """
    Directed session graph over unique (item, TN bucket) nodes.

    ``edges`` holds one (src, dst, te_bucket) per consecutive click pair, so
    repeated transitions stay as parallel edges. ``seq_to_node`` maps every
    prefix position back to its node. Node-side raw differences and positions
    come from each node's first occurrence.
    """

    nodes: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int, int], ...]
    seq_to_node: tuple[int, ...]
    node_positions: tuple[int, ...] = ()
    node_diffs: tuple[int, ...] = ()
    edge_diffs: tuple[int, ...] = ()
    clamped: int = 0
    _adjacency: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def node_items(self) -> list[int]:
        return [item for item, _ in self.nodes]

    @property
    def node_buckets(self) -> list[int]:
        return [bucket for _, bucket in self.nodes]

    @property
    def edge_buckets(self) -> list[int]:
        return [bucket for _, _, bucket in self.edges]

    def item_sequence(self) -> list[int]:
        return [self.nodes[k][0] for k in self.seq_to_node]

    def averaging_matrix(self, direction: Direction) -> np.ndarray:
        """[nodes x edges] matrix whose rows average each node's incident multiset (zero rows when empty)."""
        cached = self._adjacency.get(direction)
        if cached is not None:
            return cached
        matrix = np.zeros((self.node_count, self.edge_count))
        column = 1 if direction is Direction.INCOMING else 0
        for e, edge in enumerate(self.edges):
            matrix[edge[column], e] = 1.0
        degree = matrix.sum(axis=1, keepdims=True)
        matrix = np.divide(matrix, degree, out=np.zeros_like(matrix), where=degree > 0)
        self._adjacency[direction] = matrix
        return matrix


def build_graph(instance: LabeledInstance, tn_bucketizer: Optional[Bucketizer] = None,
                te_bucketizer: Optional[Bucketizer] = None) -> SessionGraph:
    """
    Without a TN bucketizer every click sits in bucket 0 and nodes are unique
    items; without a TE bucketizer every edge carries bucket 0.
    """
    items = instance.prefix_items
    stamps = instance.timestamps
    if not items:
        raise DataError("cannot build a graph from an empty prefix")

    raw_tn = [instance.prediction_timestamp - ts for ts in stamps]
    clamped = sum(1 for diff in raw_tn if diff < 0)
    tn_diffs = [max(0, diff) for diff in raw_tn]
    tn_buckets = tn_bucketizer.bucketize_many(tn_diffs) if tn_bucketizer else np.zeros(len(items), dtype=np.int64)

    index: dict[tuple[int, int], int] = {}
    nodes, positions, node_diffs, seq_to_node = [], [], [], []
    for position, (item, bucket) in enumerate(zip(items, tn_buckets)):
        key = (int(item), int(bucket))
        if key not in index:
            index[key] = len(nodes)
            nodes.append(key)
            positions.append(position)
            node_diffs.append(tn_diffs[position])
        seq_to_node.append(index[key])

    te_diffs = [max(0, b - a) for a, b in zip(stamps, stamps[1:])]
    te_buckets = te_bucketizer.bucketize_many(te_diffs) if te_bucketizer and te_diffs else [0] * len(te_diffs)
    edges = tuple((seq_to_node[j], seq_to_node[j + 1], int(te_buckets[j])) for j in range(len(te_diffs)))

    if clamped:
        logger.debug("session %s: %d TN differences clamped at 0", instance.prefix.session_id, clamped)
    return SessionGraph(nodes=tuple(nodes), edges=edges, seq_to_node=tuple(seq_to_node),
                        node_positions=tuple(positions), node_diffs=tuple(node_diffs), edge_diffs=tuple(te_diffs),
                        clamped=clamped)


def neighbors(graph: SessionGraph, node: int, direction: Direction) -> list[tuple[int, int]]:
    if not 0 <= node < graph.node_count:
        raise IndexError("node {} outside [0, {})".format(node, graph.node_count))
    if direction is Direction.INCOMING:
        return [(src, bucket) for src, dst, bucket in graph.edges if dst == node]
    return [(dst, bucket) for src, dst, bucket in graph.edges if src == node]


def format_graph(graph: SessionGraph) -> str:
    lines = []
    for k, (item, bucket) in enumerate(graph.nodes):
        outgoing = ", ".join("{}@te{}".format(dst, te) for dst, te in neighbors(graph, k, Direction.OUTGOING))
        lines.append("node {}: item={} tn={}; out -> [{}]".format(k, item, bucket, outgoing))
    return "\n".join(lines)
