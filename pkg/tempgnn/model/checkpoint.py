import logging
import struct
from pathlib import Path
from typing import BinaryIO, Optional

import numpy as np

from tempgnn.errors import CheckpointError
from tempgnn.model.params import ModelConfig, ModelParams
from tempgnn.model.tempgnn import TempGNN, TimeEncodings
from tempgnn.temporal import EncoderVariant, EqualWidthBucketizer, MinMaxTimeScaler, QuantileBucketizer, \
    TimeEncoding

logger = logging.getLogger(__name__)

MAGIC = b"TGNNCKPT"
VERSION = 1

# magic, version, d, L, tau, |I|, B_TN, B_TE, tn variant, te variant, tied gates, max_len, slope, dropout
HEADER = struct.Struct("<8sHIIdIIIBBBIdd")

ENCODING_NONE, ENCODING_QUANTILE, ENCODING_EQUAL_WIDTH, ENCODING_MIN_MAX = range(4)
DTYPE_INT64, DTYPE_FLOAT64 = 0, 1


def _read(stream: BinaryIO, size: int) -> bytes:
    chunk = stream.read(size)
    if len(chunk) != size:
        raise CheckpointError("truncated checkpoint: wanted {} bytes, got {}".format(size, len(chunk)))
    return chunk


def _unpack(stream: BinaryIO, fmt: str) -> tuple:
    return struct.unpack(fmt, _read(stream, struct.calcsize(fmt)))


def _write_encoding(stream: BinaryIO, encoding: Optional[TimeEncoding]) -> None:
    if encoding is None:
        stream.write(struct.pack("<B", ENCODING_NONE))
    elif isinstance(encoding, MinMaxTimeScaler):
        stream.write(struct.pack("<Bdd", ENCODING_MIN_MAX, encoding.low, encoding.high))
    else:
        kind = ENCODING_QUANTILE if isinstance(encoding, QuantileBucketizer) else ENCODING_EQUAL_WIDTH
        integer = np.issubdtype(encoding.boundaries.dtype, np.integer)
        stream.write(struct.pack("<BIB", kind, encoding.bucket_count, DTYPE_INT64 if integer else DTYPE_FLOAT64))
        stream.write(np.asarray(encoding.boundaries, dtype="<i8" if integer else "<f8").tobytes())


def _read_encoding(stream: BinaryIO) -> Optional[TimeEncoding]:
    (kind,) = _unpack(stream, "<B")
    if kind == ENCODING_NONE:
        return None
    if kind == ENCODING_MIN_MAX:
        low, high = _unpack(stream, "<dd")
        return MinMaxTimeScaler(low, high)
    if kind not in (ENCODING_QUANTILE, ENCODING_EQUAL_WIDTH):
        raise CheckpointError("unknown time encoding kind {}".format(kind))
    bucket_count, dtype_flag = _unpack(stream, "<IB")
    dtype = np.dtype("<i8") if dtype_flag == DTYPE_INT64 else np.dtype("<f8")
    boundaries = np.frombuffer(_read(stream, dtype.itemsize * (bucket_count - 1)), dtype=dtype)
    boundaries = boundaries.astype(np.int64 if dtype_flag == DTYPE_INT64 else np.float64)
    cls = QuantileBucketizer if kind == ENCODING_QUANTILE else EqualWidthBucketizer
    return cls(boundaries, bucket_count)


def save_checkpoint(model: TempGNN, path: Path | str) -> Path:
    config = model.config
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as stream:
        stream.write(HEADER.pack(MAGIC, VERSION, config.dim, config.layers, config.tau, model.n_items,
                                 config.buckets_tn, config.buckets_te, config.tn_variant.code,
                                 config.te_variant.code, int(config.tie_edge_gates), config.max_len,
                                 config.leaky_slope, config.dropout))
        _write_encoding(stream, model.encodings.tn)
        _write_encoding(stream, model.encodings.te)

        stream.write(struct.pack("<I", len(model.params)))
        for name, value in model.params.items():
            encoded = name.encode("utf-8")
            stream.write(struct.pack("<H", len(encoded)))
            stream.write(encoded)
            stream.write(struct.pack("<B", value.ndim))
            stream.write(struct.pack("<{}I".format(value.ndim), *value.shape))
            stream.write(np.ascontiguousarray(value, dtype="<f8").tobytes())
    logger.info("saved checkpoint %s (%d tensors)", path, len(model.params))
    return path


def load_checkpoint(path: Path | str) -> TempGNN:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError("checkpoint {} does not exist".format(path))
    with path.open("rb") as stream:
        header = HEADER.unpack(_read(stream, HEADER.size))
        magic, version, dim, layers, tau, n_items, buckets_tn, buckets_te, tn_code, te_code, tied, max_len, \
            slope, dropout = header
        if magic != MAGIC:
            raise CheckpointError("{} is not a TempGNN checkpoint".format(path))
        if version != VERSION:
            raise CheckpointError("unsupported checkpoint version {} (expected {})".format(version, VERSION))
        config = ModelConfig(dim=dim, layers=layers, tau=tau, buckets_tn=buckets_tn, buckets_te=buckets_te,
                             tn_variant=EncoderVariant.from_code(tn_code), te_variant=EncoderVariant.from_code(te_code),
                             tie_edge_gates=bool(tied), max_len=max_len, leaky_slope=slope, dropout=dropout)
        encodings = TimeEncodings(_read_encoding(stream), _read_encoding(stream))

        (count,) = _unpack(stream, "<I")
        tensors = {}
        for _ in range(count):
            (name_len,) = _unpack(stream, "<H")
            name = _read(stream, name_len).decode("utf-8")
            (ndim,) = _unpack(stream, "<B")
            shape = _unpack(stream, "<{}I".format(ndim))
            size = int(np.prod(shape, dtype=np.int64))
            tensors[name] = np.frombuffer(_read(stream, 8 * size), dtype="<f8").reshape(shape).astype(np.float64)
        if stream.read(1):
            raise CheckpointError("trailing bytes after the last tensor in {}".format(path))

    params = ModelParams(config, tensors)
    if params.n_items != n_items:
        raise CheckpointError("header declares {} items but item_table has {}".format(n_items, params.n_items))
    logger.info("loaded checkpoint %s: d=%d L=%d |I|=%d", path, dim, layers, n_items)
    return TempGNN(config, params, encodings)
