import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from tempgnn.data.events import LabeledInstance
from tempgnn.graph import Direction, SessionGraph, build_graph
from tempgnn.model import layers
from tempgnn.model.params import ModelConfig, ModelParams
from tempgnn.tensor import Tape, Tensor, grad_check
from tempgnn.tensor import ops
from tempgnn.temporal import Bucketizer, TimeEncoding, collect_te_diffs, collect_tn_diffs, fit_time_encoding

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeEncodings:
    """Fitted TN and TE encodings; either side is None when its variant needs no fit."""

    tn: Optional[TimeEncoding] = None
    te: Optional[TimeEncoding] = None

    @classmethod
    def fit(cls, config: ModelConfig, instances: Sequence[LabeledInstance]) -> "TimeEncodings":
        tn_diffs = collect_tn_diffs(instances)
        te_diffs = collect_te_diffs(instances)
        if not te_diffs:
            logger.warning("no consecutive clicks in the training instances; fitting TE on a zero gap")
            te_diffs = [0]
        tn = fit_time_encoding(config.tn_variant, tn_diffs, config.buckets_tn)
        te = fit_time_encoding(config.te_variant, te_diffs, config.buckets_te)
        logger.info("time encodings: TN %s, TE %s", tn.kind if tn else "none", te.kind if te else "none")
        return cls(tn, te)

    @property
    def tn_bucketizer(self) -> Optional[Bucketizer]:
        return self.tn if isinstance(self.tn, Bucketizer) else None

    @property
    def te_bucketizer(self) -> Optional[Bucketizer]:
        return self.te if isinstance(self.te, Bucketizer) else None


@dataclass
class ForwardState:
    graph: SessionGraph
    node_vecs: list[Tensor] = field(default_factory=list)
    stars: list[Tensor] = field(default_factory=list)
    final_nodes: Optional[Tensor] = None
    sequence: Optional[Tensor] = None
    readout: Optional[Tensor] = None
    preference: Optional[Tensor] = None
    scores: Optional[Tensor] = None
    probabilities: Optional[Tensor] = None
    loss: Optional[Tensor] = None


def _dropout(vecs: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    keep = (rng.random(vecs.shape) >= rate).astype(np.float64) / (1.0 - rate)
    return ops.mul(vecs, keep)


def forward(instance: LabeledInstance, params: ModelParams, encodings: TimeEncodings,
            tape: Optional[Tape] = None, training: bool = False,
            rng: Optional[np.random.Generator] = None) -> ForwardState:
    return run_tensors(instance, params.config, params.view(tape), encodings, training, rng)


def run_tensors(instance: LabeledInstance, config: ModelConfig, tensors: Mapping[str, Tensor],
                encodings: TimeEncodings, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> ForwardState:
    graph = build_graph(instance, encodings.tn_bucketizer, encodings.te_bucketizer)
    state = ForwardState(graph=graph)

    nodes = layers.init_nodes(graph, tensors, config.tn_variant, encodings.tn, config.leaky_slope)
    if training and config.dropout > 0.0 and rng is not None:
        nodes = _dropout(nodes, config.dropout, rng)
    state.node_vecs.append(nodes)
    state.stars.append(layers.init_star(nodes))

    edge_vecs = layers.edge_vectors(graph, tensors, config.te_variant, encodings.te, config.leaky_slope)
    for _ in range(config.layers):
        current, star = state.node_vecs[-1], state.stars[-1]
        incoming = layers.message_pass(graph, current, edge_vecs, tensors, Direction.INCOMING, config.te_variant)
        outgoing = layers.message_pass(graph, current, edge_vecs, tensors, Direction.OUTGOING, config.te_variant)
        updated = layers.ggnn_update(current, ops.concat([incoming, outgoing]), tensors)
        mixed = layers.star_mix(updated, star, config.dim)
        state.node_vecs.append(mixed)
        state.stars.append(layers.star_update(mixed, star, config.dim))

    state.final_nodes = layers.highway(state.node_vecs[-1], state.node_vecs[0], tensors)
    state.sequence = ops.gather(state.final_nodes, graph.seq_to_node)
    state.readout, state.preference = layers.readout(state.sequence, state.stars[-1], tensors)
    state.scores, state.probabilities, state.loss = layers.score_and_loss(
        state.preference, tensors["item_table"], instance.target_item, config.tau)
    return state


class TempGNN:
    """A model configuration, its parameters and the time encodings fitted on training data."""

    def __init__(self, config: ModelConfig, params: ModelParams, encodings: TimeEncodings):
        self.config = config
        self.params = params
        self.encodings = encodings

    @classmethod
    def initialize(cls, config: ModelConfig, n_items: int, train_instances: Sequence[LabeledInstance],
                   seed: int = 0) -> "TempGNN":
        rng = np.random.default_rng(seed)
        params = ModelParams.initialize(config, n_items, rng)
        return cls(config, params, TimeEncodings.fit(config, train_instances))

    @property
    def n_items(self) -> int:
        return self.params.n_items

    def with_params(self, params: ModelParams) -> "TempGNN":
        return TempGNN(self.config, params, self.encodings)

    def graph(self, instance: LabeledInstance) -> SessionGraph:
        return build_graph(instance, self.encodings.tn_bucketizer, self.encodings.te_bucketizer)

    def forward(self, instance: LabeledInstance, tape: Optional[Tape] = None, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> ForwardState:
        return forward(instance, self.params, self.encodings, tape, training, rng)

    def loss_and_gradients(self, instance: LabeledInstance, training: bool = False,
                           rng: Optional[np.random.Generator] = None) -> tuple[float, dict[str, np.ndarray]]:
        tape = Tape()
        state = self.forward(instance, tape, training, rng)
        grads = tape.backward(state.loss).named()
        return state.loss.item(), grads

    def scores(self, instance: LabeledInstance) -> np.ndarray:
        """Probabilities over the whole catalog, computed without recording a tape."""
        return self.forward(instance).probabilities.data.reshape(-1)

    def grad_check(self, instance: LabeledInstance, h: float = 1e-5, max_coordinates: Optional[int] = None,
                   seed: int = 0, floor: float = 1e-4) -> float:
        """Worst relative error of the loss gradient over every parameter tensor."""
        names = list(self.params)

        def loss(tensors: Sequence[Tensor]) -> Tensor:
            return run_tensors(instance, self.config, dict(zip(names, tensors)), self.encodings).loss

        return grad_check(loss, [self.params[name] for name in names], h=h, max_coordinates=max_coordinates,
                          seed=seed, floor=floor)
