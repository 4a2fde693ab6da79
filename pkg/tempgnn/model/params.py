import logging
import math
from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Optional

import numpy as np

from tempgnn.errors import ConfigError
from tempgnn.tensor import Tape, Tensor
from tempgnn.temporal import EncoderVariant

logger = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class ModelConfig:
    dim: int = 256
    layers: int = 6
    tau: float = 12.0
    tn_variant: EncoderVariant = EncoderVariant.QUANTILE_ACT_GATE
    te_variant: EncoderVariant = EncoderVariant.QUANTILE_ACT_GATE
    buckets_tn: int = 40
    buckets_te: int = 50
    max_len: int = 10
    leaky_slope: float = 0.01
    tie_edge_gates: bool = False
    dropout: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tn_variant", EncoderVariant.parse(self.tn_variant))
        object.__setattr__(self, "te_variant", EncoderVariant.parse(self.te_variant))
        if self.dim < 1 or self.layers < 0 or self.max_len < 1:
            raise ConfigError("dim and max_len must be positive and layers non-negative")
        if not self.tau > 0:
            raise ConfigError("tau must be positive, got {}".format(self.tau))
        if self.tn_variant.bucketed and self.buckets_tn < 1 or self.te_variant.bucketed and self.buckets_te < 1:
            raise ConfigError("bucketed variants need at least one bucket")
        if self.te_variant is EncoderVariant.POSITION:
            raise ConfigError("the position variant only applies to nodes (TN side)")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1), got {}".format(self.dropout))

    def with_variants(self, tn_variant: EncoderVariant, te_variant: EncoderVariant, **changes) -> "ModelConfig":
        return replace(self, tn_variant=tn_variant, te_variant=te_variant, **changes)


def param_shapes(config: ModelConfig, n_items: int) -> dict[str, tuple[int, ...]]:
    """Every trainable tensor of the model; layers share one set, so ``config.layers`` never appears."""
    d = config.dim
    shapes: dict[str, tuple[int, ...]] = {"item_table": (n_items, d)}

    tn, te = config.tn_variant, config.te_variant
    if tn.bucketed:
        shapes.update(tn_table=(config.buckets_tn, d), tn_weight=(d, d), tn_bias=(d,))
    elif tn is EncoderVariant.CONSTANT:
        shapes["tn_constant"] = (d,)
    elif tn is EncoderVariant.POSITION:
        shapes["position_table"] = (config.max_len, d)
    if tn.gated:
        shapes.update(node_gate_weight=(d, 2 * d), node_gate_bias=(d,))

    if te.bucketed:
        shapes.update(te_table=(config.buckets_te, d), te_weight=(d, d), te_bias=(d,))
    elif te is EncoderVariant.CONSTANT:
        shapes["te_constant"] = (d,)
    if te.gated:
        shapes.update(in_gate_weight=(d, 3 * d), in_gate_bias=(d,))
        if not config.tie_edge_gates:
            shapes.update(out_gate_weight=(d, 3 * d), out_gate_bias=(d,))

    shapes.update(msg_in_weight=(d, d), msg_in_bias=(d,), msg_out_weight=(d, d), msg_out_bias=(d,))
    for gate in ("z", "r", "h"):
        shapes["ggnn_w{}".format(gate)] = (d, 2 * d)
        shapes["ggnn_u{}".format(gate)] = (d, d)
        shapes["ggnn_b{}".format(gate)] = (d,)
    shapes.update(highway_weight=(d, 2 * d), highway_bias=(d,))
    shapes.update(readout_w0=(d,), readout_w1=(d, d), readout_w2=(d, d), readout_w3=(d, d), readout_bias=(d,))
    shapes.update(preference_weight=(d, 2 * d), preference_bias=(d,))
    return shapes


class ModelParams:

    def __init__(self, config: ModelConfig, tensors: Mapping[str, np.ndarray]):
        self.config = config
        self._tensors = {name: np.asarray(value, dtype=np.float64) for name, value in tensors.items()}

    @classmethod
    def initialize(cls, config: ModelConfig, n_items: int, rng: np.random.Generator) -> "ModelParams":
        bound = 1.0 / math.sqrt(config.dim)
        tensors = {name: rng.uniform(-bound, bound, size=shape) for name, shape in param_shapes(config, n_items).items()}
        params = cls(config, tensors)
        logger.debug("initialized %d tensors, %d scalars", len(tensors), params.count())
        return params

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    @property
    def n_items(self) -> int:
        return self._tensors["item_table"].shape[0]

    def count(self) -> int:
        return int(sum(value.size for value in self._tensors.values()))

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {name: value.copy() for name, value in self._tensors.items()})

    def replace(self, tensors: Mapping[str, np.ndarray]) -> "ModelParams":
        merged = dict(self._tensors)
        merged.update(tensors)
        return ModelParams(self.config, merged)

    def view(self, tape: Optional[Tape] = None) -> dict[str, Tensor]:
        if tape is None:
            return {name: Tensor(value, name=name) for name, value in self._tensors.items()}
        return {name: tape.leaf(value, name=name) for name, value in self._tensors.items()}

    def equals(self, other: "ModelParams") -> bool:
        return list(self) == list(other) and all(np.array_equal(self[n], other[n]) for n in self)
