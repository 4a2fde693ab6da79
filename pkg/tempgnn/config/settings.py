import logging
from dataclasses import asdict, dataclass, fields as dataclass_fields
from pathlib import Path
from typing import Any, Mapping, Optional

from marshmallow import RAISE, Schema, ValidationError, fields, post_load, validate, validates

from tempgnn.errors import ConfigError
from tempgnn.model.params import ModelConfig
from tempgnn.temporal import EncoderVariant

logger = logging.getLogger(__name__)


@dataclass(kw_only=True)
class RunConfig:
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    vocab_path: Optional[str] = None
    out_dir: str = "runs"

    dim: int = 256
    layers: int = 6
    tau: float = 12.0
    buckets_tn: int = 40
    buckets_te: int = 50
    tn_variant: str = "q+a+g"
    te_variant: str = "q+a+g"
    max_len: int = 10
    leaky_slope: float = 0.01
    tie_edge_gates: bool = False
    dropout: float = 0.0

    batch_size: int = 100
    epochs: int = 10
    seed: int = 0
    lr: float = 1e-3
    lr_decay: float = 0.1
    lr_decay_every: int = 3
    weight_decay: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    validation_fraction: float = 0.1
    workers: int = 1
    replicates: int = 1

    def to_model_config(self) -> ModelConfig:
        return ModelConfig(dim=self.dim, layers=self.layers, tau=self.tau, tn_variant=self.tn_variant,
                           te_variant=self.te_variant, buckets_tn=self.buckets_tn, buckets_te=self.buckets_te,
                           max_len=self.max_len, leaky_slope=self.leaky_slope, tie_edge_gates=self.tie_edge_gates,
                           dropout=self.dropout)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


_POSITIVE = validate.Range(min=1)
_UNIT_OPEN = validate.Range(min=0.0, max=1.0, max_inclusive=False)


class RunConfigDTO(Schema):
    class Meta:
        unknown = RAISE

    train_path = fields.String(allow_none=True)
    test_path = fields.String(allow_none=True)
    vocab_path = fields.String(allow_none=True)
    out_dir = fields.String()

    dim = fields.Integer(validate=_POSITIVE)
    layers = fields.Integer(validate=validate.Range(min=0))
    tau = fields.Float(validate=validate.Range(min=0.0, min_inclusive=False))
    buckets_tn = fields.Integer(validate=_POSITIVE)
    buckets_te = fields.Integer(validate=_POSITIVE)
    tn_variant = fields.String()
    te_variant = fields.String()
    max_len = fields.Integer(validate=_POSITIVE)
    leaky_slope = fields.Float(validate=validate.Range(min=0.0, max=1.0, min_inclusive=False, max_inclusive=False))
    tie_edge_gates = fields.Boolean()
    dropout = fields.Float(validate=_UNIT_OPEN)

    batch_size = fields.Integer(validate=_POSITIVE)
    epochs = fields.Integer(validate=validate.Range(min=0))
    seed = fields.Integer(validate=validate.Range(min=0))
    lr = fields.Float(validate=validate.Range(min=0.0, min_inclusive=False))
    lr_decay = fields.Float(validate=validate.Range(min=0.0, max=1.0, min_inclusive=False))
    lr_decay_every = fields.Integer(validate=_POSITIVE)
    weight_decay = fields.Float(validate=validate.Range(min=0.0))
    beta1 = fields.Float(validate=_UNIT_OPEN)
    beta2 = fields.Float(validate=_UNIT_OPEN)
    eps = fields.Float(validate=validate.Range(min=0.0, min_inclusive=False))
    validation_fraction = fields.Float(validate=_UNIT_OPEN)
    workers = fields.Integer(validate=_POSITIVE)
    replicates = fields.Integer(validate=_POSITIVE)

    @validates("tn_variant")
    def validate_tn_variant(self, value, **kwargs):
        self._check_variant(value)

    @validates("te_variant")
    def validate_te_variant(self, value, **kwargs):
        if self._check_variant(value) is EncoderVariant.POSITION:
            raise ValidationError("the position variant only applies to the TN side")

    @staticmethod
    def _check_variant(value: str) -> EncoderVariant:
        try:
            return EncoderVariant.parse(value)
        except ConfigError as error:
            raise ValidationError(error.message) from None

    @post_load
    def make_config(self, data: dict, **kwargs) -> RunConfig:
        return RunConfig(**data)

    def to_config(self, data: Mapping[str, Any]) -> RunConfig:
        try:
            return self.load(dict(data))
        except ValidationError as error:
            problems = "; ".join("{}: {}".format(key, " ".join(map(str, messages)) if isinstance(messages, list)
                                 else messages) for key, messages in sorted(error.messages.items()))
            raise ConfigError("invalid configuration: {}".format(problems)) from None

    def to_dict(self, config: RunConfig) -> dict:
        return self.dump(config)


def config_keys() -> list[str]:
    return [f.name for f in dataclass_fields(RunConfig)]


def read_config_file(path: Path | str) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config file {} does not exist".format(path))
    values: dict[str, str] = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        if not sep or not key.strip():
            raise ConfigError("{} line {}: expected 'key = value', got {!r}".format(path, line_no, line))
        key = key.strip().replace("-", "_")
        if key in values:
            raise ConfigError("{} line {}: duplicate key {!r}".format(path, line_no, key))
        values[key] = value.strip()
    return values


def write_config_file(values: Mapping[str, Any], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["{} = {}".format(key, str(value).lower() if isinstance(value, bool) else value)
             for key, value in values.items() if value is not None]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_run_config(path: Optional[Path | str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """File values first, then every non-None override on top; the merged mapping is validated once."""
    values: dict[str, Any] = dict(read_config_file(path)) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    config = RunConfigDTO().to_config(values)
    logger.debug("run config: %s", config)
    return config
