import math
from typing import Mapping, Optional

import numpy as np

from tempgnn.errors import VocabularyError
from tempgnn.graph import Direction, SessionGraph
from tempgnn.tensor import Tensor
from tempgnn.tensor import ops
from tempgnn.temporal import EncoderVariant, EncodingContext, MinMaxTimeScaler, TimeEncoding, combine, \
    encode_variant

Params = Mapping[str, Tensor]


def _scaled(encoding: Optional[TimeEncoding], diffs) -> Optional[np.ndarray]:
    if isinstance(encoding, MinMaxTimeScaler):
        return encoding.scale_many(diffs)
    return None


def init_nodes(graph: SessionGraph, params: Params, tn_variant: EncoderVariant,
               tn_encoding: Optional[TimeEncoding] = None, slope: float = ops.LEAKY_SLOPE) -> Tensor:
    item_table = params["item_table"]
    items = graph.node_items
    if max(items) >= item_table.shape[0] or min(items) < 0:
        raise VocabularyError("graph item index outside [0, {})".format(item_table.shape[0]))
    item_vecs = ops.l2_normalize(ops.gather(item_table, items))

    context = EncodingContext(bucket_ids=graph.node_buckets, positions=graph.node_positions,
                              scaled=_scaled(tn_encoding, graph.node_diffs))
    temporal = encode_variant(tn_variant, context, params, side="tn", slope=slope)
    return combine(tn_variant, item_vecs, temporal, params.get("node_gate_weight"), params.get("node_gate_bias"))


def edge_vectors(graph: SessionGraph, params: Params, te_variant: EncoderVariant,
                 te_encoding: Optional[TimeEncoding] = None, slope: float = ops.LEAKY_SLOPE) -> Optional[Tensor]:
    if graph.edge_count == 0:
        return None
    context = EncodingContext(bucket_ids=graph.edge_buckets, scaled=_scaled(te_encoding, graph.edge_diffs))
    return encode_variant(te_variant, context, params, side="te", slope=slope)


def init_star(node_vecs: Tensor) -> Tensor:
    return ops.mean(node_vecs, axis=0, keepdims=True)


def message_pass(graph: SessionGraph, node_vecs: Tensor, edge_vecs: Optional[Tensor], params: Params,
                 direction: Direction, te_variant: EncoderVariant = EncoderVariant.QUANTILE_ACT_GATE) -> Tensor:
    """
    Per edge, blend the neighbor with the edge's TE vector through a gate over
    [source; destination; TE], average over each node's incident multiset and
    apply the direction's affine map. Nodes without neighbors get the bias.
    """
    suffix = "in" if direction is Direction.INCOMING else "out"
    if graph.edge_count == 0:
        aggregated = Tensor(np.zeros(node_vecs.shape))
    else:
        sources = ops.gather(node_vecs, [src for src, _, _ in graph.edges])
        targets = ops.gather(node_vecs, [dst for _, dst, _ in graph.edges])
        neighbor = sources if direction is Direction.INCOMING else targets
        if edge_vecs is None:
            blended = neighbor
        elif te_variant.gated:
            prefix = suffix if "{}_gate_weight".format(suffix) in params else "in"
            gate = ops.sigmoid(ops.linear(ops.concat([sources, targets, edge_vecs]),
                                          params["{}_gate_weight".format(prefix)],
                                          params["{}_gate_bias".format(prefix)]))
            blended = ops.blend(neighbor, edge_vecs, gate)
        else:
            blended = ops.add(neighbor, edge_vecs)
        aggregated = ops.matmul(graph.averaging_matrix(direction), blended)
    return ops.linear(aggregated, params["msg_{}_weight".format(suffix)], params["msg_{}_bias".format(suffix)])


def ggnn_update(node_vecs: Tensor, messages: Tensor, params: Params) -> Tensor:
    """GRU-style update driven by the concatenated [incoming; outgoing] messages (width 2d)."""
    update = ops.sigmoid(ops.linear(messages, params["ggnn_wz"])
                         + ops.linear(node_vecs, params["ggnn_uz"]) + params["ggnn_bz"])
    reset = ops.sigmoid(ops.linear(messages, params["ggnn_wr"])
                        + ops.linear(node_vecs, params["ggnn_ur"]) + params["ggnn_br"])
    candidate = ops.tanh(ops.linear(messages, params["ggnn_wh"])
                         + ops.linear(reset * node_vecs, params["ggnn_uh"]) + params["ggnn_bh"])
    return ops.blend(node_vecs, candidate, update)


def star_mix(node_vecs: Tensor, star: Tensor, dim: int) -> Tensor:
    alpha = ops.sigmoid(ops.matmul(node_vecs, ops.transpose(star)) * (1.0 / math.sqrt(dim)))
    return ops.blend(node_vecs, star, alpha)


def star_update(node_vecs: Tensor, star: Tensor, dim: int) -> Tensor:
    logits = ops.matmul(star, ops.transpose(node_vecs)) * (1.0 / math.sqrt(dim))
    weights = ops.softmax_scaled(logits, 1.0)
    return ops.matmul(weights, node_vecs)


def highway(last: Tensor, first: Tensor, params: Params) -> Tensor:
    gate = ops.sigmoid(ops.linear(ops.concat([last, first]), params["highway_weight"], params["highway_bias"]))
    return ops.blend(last, first, gate)


def attention(sequence: Tensor, star: Tensor, params: Params) -> Tensor:
    """Unnormalized soft-attention weights, one per sequence position, shape [|S| x 1]."""
    last = ops.gather(sequence, [sequence.shape[0] - 1])
    hidden = ops.sigmoid(ops.linear(sequence, params["readout_w1"]) + ops.linear(last, params["readout_w2"])
                         + ops.linear(star, params["readout_w3"]) + params["readout_bias"])
    w0 = params["readout_w0"]
    return ops.matmul(hidden, ops.reshape(w0, (w0.shape[0], 1)))


def readout(sequence: Tensor, star: Tensor, params: Params) -> tuple[Tensor, Tensor]:
    gamma = attention(sequence, star, params)
    session = ops.sum(gamma * sequence, axis=0, keepdims=True)
    last = ops.gather(sequence, [sequence.shape[0] - 1])
    preference = ops.linear(ops.concat([session, last]), params["preference_weight"], params["preference_bias"])
    return session, preference


def cosine_scores(preference: Tensor, item_table: Tensor) -> Tensor:
    return ops.matmul(ops.l2_normalize(preference), ops.transpose(ops.l2_normalize(item_table)))


def score_and_loss(preference: Tensor, item_table: Tensor, target: int, tau: float) -> tuple[Tensor, Tensor, Tensor]:
    if not 0 <= target < item_table.shape[0]:
        raise VocabularyError("target item {} outside [0, {})".format(target, item_table.shape[0]))
    scores = cosine_scores(preference, item_table)
    probabilities = ops.softmax_scaled(scores, tau)
    picked = ops.gather(ops.reshape(probabilities, (-1,)), [target])
    loss = ops.sum(ops.log(picked)) * -1.0
    return scores, probabilities, loss
