import numpy as np
import pytest

from tempgnn.data import LabeledInstance
from tempgnn.graph import Direction, build_graph, format_graph, neighbors
from tempgnn.temporal import QuantileBucketizer, fit_buckets

from tests.conftest import make_session


def instance(items, timestamps, prediction_timestamp=None):
    prefix = make_session("s", ["i{}".format(i) for i in items], timestamps, prediction_timestamp)
    return LabeledInstance(prefix=prefix, prefix_items=tuple(items), target_item=0)


class TestBuildGraph:

    def test_repeated_items_share_node(self):
        graph = build_graph(instance([0, 1, 0, 2], [0, 1, 2, 3]))
        assert graph.nodes == ((0, 0), (1, 0), (2, 0))
        assert graph.seq_to_node == (0, 1, 0, 2)
        assert graph.edges == ((0, 1, 0), (1, 0, 0), (0, 2, 0))
        assert graph.node_positions == (0, 1, 3)

    def test_tn_bucket_splits_item(self):
        tn = QuantileBucketizer(np.array([50]), 2)
        graph = build_graph(instance([5, 5], [0, 100], 100), tn_bucketizer=tn)
        assert graph.nodes == ((5, 1), (5, 0))
        assert graph.node_diffs == (100, 0)
        assert graph.edges == ((0, 1, 0),)

    def test_te_buckets_on_edges(self):
        te = QuantileBucketizer(np.array([100]), 2)
        graph = build_graph(instance([0, 1, 2], [0, 10, 1000]), te_bucketizer=te)
        assert graph.edge_buckets == [0, 1]
        assert graph.edge_diffs == (10, 990)

    def test_self_loop(self):
        graph = build_graph(instance([3, 3], [7, 7]))
        assert graph.node_count == 1
        assert graph.edges == ((0, 0, 0),)
        assert neighbors(graph, 0, Direction.INCOMING) == [(0, 0)]
        assert neighbors(graph, 0, Direction.OUTGOING) == [(0, 0)]

    def test_single_click_has_no_edges(self):
        graph = build_graph(instance([4], [0]))
        assert graph.edge_count == 0
        assert graph.averaging_matrix(Direction.INCOMING).shape == (1, 0)

    def test_parallel_edges_kept_as_multiset(self):
        graph = build_graph(instance([0, 1, 0, 1], [0, 1, 2, 3]))
        assert neighbors(graph, 0, Direction.OUTGOING) == [(1, 0), (1, 0)]
        assert neighbors(graph, 1, Direction.INCOMING) == [(0, 0), (0, 0)]
        assert neighbors(graph, 0, Direction.INCOMING) == [(1, 0)]

    @pytest.mark.parametrize("tn_bucketizer", [None, fit_buckets([0, 5_000, 90_000], 1)])
    def test_collapsed_graph_matches_item_graph(self, rng, tn_bucketizer):
        for _ in range(100):
            items = rng.integers(0, 6, size=rng.integers(1, 12)).tolist()
            stamps = np.cumsum(rng.integers(0, 100_000, size=len(items))).tolist()
            graph = build_graph(instance(items, stamps), tn_bucketizer=tn_bucketizer)
            assert len(graph.nodes) == len(set(items))
            assert set(graph.node_items) == set(items)
            item_edges = {(graph.nodes[src][0], graph.nodes[dst][0]) for src, dst, _ in graph.edges}
            assert item_edges == set(zip(items, items[1:]))
            assert graph.item_sequence() == items
            assert graph.edge_count == len(items) - 1

    def test_neighbor_out_of_range(self):
        graph = build_graph(instance([0, 1], [0, 1]))
        with pytest.raises(IndexError):
            neighbors(graph, 2, Direction.OUTGOING)


class TestAveragingMatrix:

    def test_rows_average_incident_edges(self):
        graph = build_graph(instance([0, 1, 0, 1], [0, 1, 2, 3]))
        np.testing.assert_allclose(graph.averaging_matrix(Direction.INCOMING), [[0.0, 1.0, 0.0], [0.5, 0.0, 0.5]])
        np.testing.assert_allclose(graph.averaging_matrix(Direction.OUTGOING), [[0.5, 0.0, 0.5], [0.0, 1.0, 0.0]])

    def test_isolated_direction_gives_zero_row(self):
        graph = build_graph(instance([0, 1], [0, 1]))
        np.testing.assert_array_equal(graph.averaging_matrix(Direction.INCOMING), [[0.0], [1.0]])

    def test_cached_per_direction(self):
        graph = build_graph(instance([0, 1], [0, 1]))
        assert graph.averaging_matrix(Direction.OUTGOING) is graph.averaging_matrix(Direction.OUTGOING)


def test_format_graph():
    text = format_graph(build_graph(instance([0, 1], [0, 1])))
    assert text.splitlines() == ["node 0: item=0 tn=0; out -> [1@te0]", "node 1: item=1 tn=0; out -> []"]
