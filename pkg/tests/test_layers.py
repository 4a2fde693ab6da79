import math

import numpy as np
import pytest

from tempgnn.data import LabeledInstance
from tempgnn.errors import VocabularyError
from tempgnn.graph import Direction, build_graph
from tempgnn.model import ModelConfig, ModelParams
from tempgnn.model.layers import attention, edge_vectors, ggnn_update, highway, init_nodes, init_star, message_pass, \
    readout, score_and_loss, star_mix, star_update
from tempgnn.tensor import Tensor
from tempgnn.temporal import EncoderVariant

from tests.conftest import make_session

DIM = 3


def graph_of(items, timestamps=None):
    timestamps = timestamps or list(range(len(items)))
    prefix = make_session("s", ["i{}".format(i) for i in items], timestamps)
    return build_graph(LabeledInstance(prefix=prefix, prefix_items=tuple(items), target_item=0))


@pytest.fixture
def params(rng):
    config = ModelConfig(dim=DIM, layers=1, buckets_tn=2, buckets_te=2)
    tensors = ModelParams.initialize(config, 5, rng).view()
    tensors.update(msg_in_weight=Tensor(np.eye(DIM)), msg_in_bias=Tensor(np.zeros(DIM)),
                   msg_out_weight=Tensor(np.eye(DIM)), msg_out_bias=Tensor(np.zeros(DIM)))
    return tensors


@pytest.fixture
def pair():
    return graph_of([0, 1]), Tensor([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), Tensor([[0.0, 0.0, 2.0]])


class TestMessagePassing:

    def test_no_neighbors_gives_bias(self, params):
        params["msg_in_bias"] = Tensor([0.1, -0.2, 0.3])
        graph = graph_of([4])
        out = message_pass(graph, Tensor(np.ones((1, DIM))), None, params, Direction.INCOMING)
        np.testing.assert_allclose(out.data, [[0.1, -0.2, 0.3]])

    @pytest.mark.parametrize("bias, expected", [(50.0, [0.0, 0.0, 2.0]), (-50.0, [1.0, 0.0, 0.0])])
    def test_gate_saturation(self, params, pair, bias, expected):
        graph, nodes, edges = pair
        params["in_gate_weight"] = Tensor(np.zeros((DIM, 3 * DIM)))
        params["in_gate_bias"] = Tensor(np.full(DIM, bias))
        out = message_pass(graph, nodes, edges, params, Direction.INCOMING, EncoderVariant.QUANTILE_ACT_GATE)
        np.testing.assert_allclose(out.data, [[0.0, 0.0, 0.0], expected], atol=1e-12)

    def test_additive_edge_vectors(self, params, pair):
        graph, nodes, edges = pair
        out = message_pass(graph, nodes, edges, params, Direction.INCOMING, EncoderVariant.QUANTILE_ACT)
        np.testing.assert_allclose(out.data, [[0.0, 0.0, 0.0], [1.0, 0.0, 2.0]])

    def test_without_edge_vectors(self, params, pair):
        graph, nodes, _ = pair
        out = message_pass(graph, nodes, None, params, Direction.OUTGOING, EncoderVariant.NONE)
        np.testing.assert_allclose(out.data, [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])

    def test_tied_gates_reuse_incoming(self, params, pair):
        graph, nodes, edges = pair
        del params["out_gate_weight"], params["out_gate_bias"]
        params["in_gate_weight"] = Tensor(np.zeros((DIM, 3 * DIM)))
        params["in_gate_bias"] = Tensor(np.full(DIM, 50.0))
        out = message_pass(graph, nodes, edges, params, Direction.OUTGOING, EncoderVariant.QUANTILE_GATE)
        np.testing.assert_allclose(out.data, [[0.0, 0.0, 2.0], [0.0, 0.0, 0.0]], atol=1e-12)

    def test_parallel_edges_averaged(self, params):
        graph = graph_of([0, 1, 2, 1])
        nodes = Tensor(np.eye(DIM))
        out = message_pass(graph, nodes, None, params, Direction.INCOMING, EncoderVariant.NONE)
        # node 1 hears from 0 and from 2
        np.testing.assert_allclose(out.data[1], [0.5, 0.0, 0.5])

    def test_edge_vectors_absent_without_edges(self, params):
        assert edge_vectors(graph_of([2]), params, EncoderVariant.QUANTILE_ACT_GATE) is None


class TestNodeInit:

    def test_item_only_rows_are_unit(self, params):
        graph = graph_of([0, 3, 0])
        out = init_nodes(graph, params, EncoderVariant.NONE).data
        assert out.shape == (2, DIM)
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), [1.0, 1.0])

    def test_item_out_of_range(self, params):
        with pytest.raises(VocabularyError):
            init_nodes(graph_of([5]), params, EncoderVariant.NONE)

    def test_star_is_mean(self):
        np.testing.assert_allclose(init_star(Tensor([[1.0, 2.0], [3.0, 4.0]])).data, [[2.0, 3.0]])


class TestUpdates:

    def test_ggnn_zero_weights_halve_state(self, params, rng):
        for name in list(params):
            if name.startswith("ggnn_"):
                params[name] = Tensor(np.zeros(params[name].shape))
        nodes = rng.normal(size=(4, DIM))
        out = ggnn_update(Tensor(nodes), Tensor(rng.normal(size=(4, 2 * DIM))), params)
        np.testing.assert_allclose(out.data, 0.5 * nodes)

    def test_star_mix_orthogonal(self):
        out = star_mix(Tensor([[1.0, 0.0]]), Tensor([[0.0, 1.0]]), 2)
        np.testing.assert_allclose(out.data, [[0.5, 0.5]])

    def test_star_mix_alpha(self):
        node, star = np.array([[2.0, 0.0]]), np.array([[1.0, 1.0]])
        alpha = 1.0 / (1.0 + math.exp(-2.0 / math.sqrt(2)))
        np.testing.assert_allclose(star_mix(Tensor(node), Tensor(star), 2).data, node + alpha * (star - node))

    def test_star_update_uniform_attention(self):
        nodes = np.array([[1.0, 2.0], [3.0, 0.0], [2.0, 1.0]])
        out = star_update(Tensor(nodes), Tensor(np.zeros((1, 2))), 2)
        np.testing.assert_allclose(out.data, [[2.0, 1.0]])

    def test_star_update_identical_nodes(self):
        nodes = np.array([[0.3, -0.4]] * 3)
        np.testing.assert_allclose(star_update(Tensor(nodes), Tensor([[5.0, 5.0]]), 2).data, [[0.3, -0.4]])

    def test_highway_zero_gate_averages(self, params):
        params["highway_weight"] = Tensor(np.zeros((DIM, 2 * DIM)))
        params["highway_bias"] = Tensor(np.zeros(DIM))
        out = highway(Tensor([[2.0, 0.0, 4.0]]), Tensor([[0.0, 2.0, 0.0]]), params)
        np.testing.assert_allclose(out.data, [[1.0, 1.0, 2.0]])

    def test_highway_equal_inputs(self, params, rng):
        state = rng.normal(size=(3, DIM))
        np.testing.assert_array_equal(highway(Tensor(state), Tensor(state.copy()), params).data, state)


class TestReadout:

    def test_attention_shape(self, params, rng):
        weights = attention(Tensor(rng.normal(size=(4, DIM))), Tensor(rng.normal(size=(1, DIM))), params)
        assert weights.shape == (4, 1)

    def test_zero_attention_vector(self, params, rng):
        params["readout_w0"] = Tensor(np.zeros(DIM))
        params["preference_weight"] = Tensor(np.hstack([np.zeros((DIM, DIM)), np.eye(DIM)]))
        params["preference_bias"] = Tensor(np.zeros(DIM))
        sequence = rng.normal(size=(3, DIM))
        session, preference = readout(Tensor(sequence), Tensor(rng.normal(size=(1, DIM))), params)
        np.testing.assert_array_equal(session.data, np.zeros((1, DIM)))
        np.testing.assert_allclose(preference.data, sequence[-1:])


class TestScores:

    def test_uniform_scores(self):
        table = Tensor(np.tile([[1.0, 2.0, 2.0]], (4, 1)) * np.array([[1.0], [2.0], [0.5], [3.0]]))
        scores, probabilities, loss = score_and_loss(Tensor([[0.0, 1.0, 0.0]]), table, 2, 12.0)
        np.testing.assert_allclose(probabilities.data, np.full((1, 4), 0.25))
        assert loss.item() == pytest.approx(math.log(4))

    def test_scores_are_cosines(self, rng):
        table = rng.normal(size=(50, 6))
        preference = rng.normal(size=(1, 6))
        scores, probabilities, _ = score_and_loss(Tensor(preference), Tensor(table), 0, 12.0)
        assert np.all(np.abs(scores.data) <= 1.0 + 1e-12)
        assert probabilities.data.sum() == pytest.approx(1.0)
        expected = table @ preference[0] / (np.linalg.norm(table, axis=1) * np.linalg.norm(preference))
        np.testing.assert_allclose(scores.data[0], expected)

    def test_target_out_of_range(self):
        with pytest.raises(VocabularyError):
            score_and_loss(Tensor([[1.0]]), Tensor([[1.0], [2.0]]), 2, 12.0)
