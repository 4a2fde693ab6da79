import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from tempgnn.errors import ConfigError
from tempgnn.tensor import Tensor
from tempgnn.tensor import ops
from tempgnn.temporal.bucketizer import Bucketizer

logger = logging.getLogger(__name__)


class EncoderVariant(Enum):
    NONE = "none"
    POSITION = "position"
    CONSTANT = "constant"
    BUCKET = "bucket"
    QUANTILE = "q"
    QUANTILE_ACT = "q+a"
    QUANTILE_GATE = "q+g"
    QUANTILE_ACT_GATE = "q+a+g"

    @classmethod
    def parse(cls, name: "str | EncoderVariant") -> "EncoderVariant":
        if isinstance(name, EncoderVariant):
            return name
        key = str(name).strip().lower()
        for variant in cls:
            if key in (variant.value, variant.label.lower(), variant.name.lower()):
                return variant
        raise ConfigError("unknown encoder variant {!r}; expected one of {}".format(
            name, ", ".join(v.value for v in cls)))

    @property
    def code(self) -> int:
        return list(EncoderVariant).index(self)

    @classmethod
    def from_code(cls, code: int) -> "EncoderVariant":
        variants = list(cls)
        if not 0 <= code < len(variants):
            raise ConfigError("unknown encoder variant id {}".format(code))
        return variants[code]

    @property
    def label(self) -> str:
        return {"none": "Base", "position": "Position", "constant": "Constant", "bucket": "Bucket"}.get(
            self.value, self.value.upper())

    @property
    def bucketed(self) -> bool:
        return self in (EncoderVariant.BUCKET, EncoderVariant.QUANTILE, EncoderVariant.QUANTILE_ACT,
                        EncoderVariant.QUANTILE_GATE, EncoderVariant.QUANTILE_ACT_GATE)

    @property
    def quantile(self) -> bool:
        return self.bucketed and self is not EncoderVariant.BUCKET

    @property
    def activation(self) -> bool:
        return self in (EncoderVariant.QUANTILE_ACT, EncoderVariant.QUANTILE_ACT_GATE)

    @property
    def gated(self) -> bool:
        return self in (EncoderVariant.QUANTILE_GATE, EncoderVariant.QUANTILE_ACT_GATE)


@dataclass(frozen=True)
class TemporalTable:
    embeddings: Tensor
    weight: Tensor
    bias: Tensor

    @classmethod
    def from_params(cls, params: Mapping[str, Tensor], side: str) -> "TemporalTable":
        return cls(params["{}_table".format(side)], params["{}_weight".format(side)], params["{}_bias".format(side)])

    @property
    def bucket_count(self) -> int:
        return self.embeddings.shape[0]


@dataclass(frozen=True, kw_only=True)
class EncodingContext:
    bucket_ids: Optional[Sequence[int]] = None
    scaled: Optional[Sequence[float]] = None
    positions: Optional[Sequence[int]] = None


def encode_buckets(table: TemporalTable, bucket_ids: Sequence[int], activation: bool = True,
                   slope: float = ops.LEAKY_SLOPE) -> Tensor:
    """W * act(normalize(T[bucket])) + b for every bucket id, one row each."""
    rows = ops.l2_normalize(ops.gather(table.embeddings, bucket_ids))
    if activation:
        rows = ops.leaky_relu(rows, slope)
    return ops.linear(rows, table.weight, table.bias)


def encode_tn(table: TemporalTable, bucketizer: Bucketizer, prediction_ts: int, event_ts: int,
              activation: bool = True, slope: float = ops.LEAKY_SLOPE) -> Tensor:
    diff = max(0, prediction_ts - event_ts)
    return encode_buckets(table, [bucketizer.bucketize(diff)], activation, slope)


def encode_te(table: TemporalTable, bucketizer: Bucketizer, ts_next: int, ts_prev: int,
              activation: bool = True, slope: float = ops.LEAKY_SLOPE) -> Tensor:
    diff = max(0, ts_next - ts_prev)
    return encode_buckets(table, [bucketizer.bucketize(diff)], activation, slope)


def aggregate_node(item_vecs: Tensor, tn_vecs: Tensor, gate_weight: Tensor, gate_bias: Tensor) -> Tensor:
    gate = ops.sigmoid(ops.linear(ops.concat([item_vecs, tn_vecs]), gate_weight, gate_bias))
    return ops.blend(item_vecs, tn_vecs, gate)


def encode_variant(variant: EncoderVariant, context: EncodingContext, params: Mapping[str, Tensor],
                   side: str = "tn", slope: float = ops.LEAKY_SLOPE) -> Optional[Tensor]:
    """Temporal (or positional) vectors for one side; None when the variant adds nothing."""
    if variant is EncoderVariant.NONE:
        return None
    if variant is EncoderVariant.POSITION:
        if context.positions is None:
            raise ConfigError("position variant needs sequence positions")
        table = params["position_table"]
        positions = np.minimum(np.asarray(context.positions, dtype=np.int64), table.shape[0] - 1)
        return ops.gather(table, positions)
    if variant is EncoderVariant.CONSTANT:
        if context.scaled is None:
            raise ConfigError("constant variant needs normalized time differences")
        scaled = np.asarray(context.scaled, dtype=np.float64).reshape(-1, 1)
        return ops.mul(scaled, params["{}_constant".format(side)])
    if variant.bucketed:
        if context.bucket_ids is None:
            raise ConfigError("{} variant needs bucket ids".format(variant.label))
        return encode_buckets(TemporalTable.from_params(params, side), context.bucket_ids, variant.activation,
                              slope)
    raise ConfigError("unsupported encoder variant {!r}".format(variant))


def combine(variant: EncoderVariant, base: Tensor, temporal: Optional[Tensor], gate_weight: Optional[Tensor] = None,
            gate_bias: Optional[Tensor] = None) -> Tensor:
    if temporal is None:
        return base
    if variant.gated:
        return aggregate_node(base, temporal, gate_weight, gate_bias)
    return ops.add(base, temporal)
