from typing import Iterable, Optional, Sequence

from tempgnn.data.events import LabeledInstance
from tempgnn.temporal.bucketizer import Bucketizer, EqualWidthBucketizer, MinMaxTimeScaler, QuantileBucketizer, \
    fit_buckets, fit_equal_width, fit_min_max
from tempgnn.temporal.encoders import EncoderVariant, EncodingContext, TemporalTable, aggregate_node, combine, \
    encode_buckets, encode_te, encode_tn, encode_variant

TimeEncoding = Bucketizer | MinMaxTimeScaler


def collect_tn_diffs(instances: Iterable[LabeledInstance]) -> list[int]:
    return [max(0, inst.prediction_timestamp - ts) for inst in instances for ts in inst.timestamps]


def collect_te_diffs(instances: Iterable[LabeledInstance]) -> list[int]:
    diffs = []
    for inst in instances:
        stamps = inst.timestamps
        diffs.extend(max(0, b - a) for a, b in zip(stamps, stamps[1:]))
    return diffs


def fit_time_encoding(variant: EncoderVariant, diffs: Sequence[int], bucket_count: int) -> Optional[TimeEncoding]:
    if variant.quantile:
        return fit_buckets(diffs, bucket_count)
    if variant is EncoderVariant.BUCKET:
        return fit_equal_width(diffs, bucket_count)
    if variant is EncoderVariant.CONSTANT:
        return fit_min_max(diffs)
    return None


__all__ = [
    "Bucketizer", "EncoderVariant", "EncodingContext", "EqualWidthBucketizer", "MinMaxTimeScaler",
    "QuantileBucketizer", "TemporalTable", "TimeEncoding", "aggregate_node", "collect_te_diffs", "collect_tn_diffs",
    "combine", "encode_buckets", "encode_te", "encode_tn", "encode_variant", "fit_buckets", "fit_equal_width",
    "fit_min_max", "fit_time_encoding",
]
