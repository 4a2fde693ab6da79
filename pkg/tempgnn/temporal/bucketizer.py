import logging
import warnings
from dataclasses import dataclass
from typing import ClassVar, Iterable, Sequence

import numpy as np

from tempgnn.errors import BucketWarning, ConfigError

logger = logging.getLogger(__name__)

CLIP_FRACTION = 0.02


def _as_sample(diffs: Iterable[float]) -> np.ndarray:
    sample = np.asarray(list(diffs) if not isinstance(diffs, np.ndarray) else diffs)
    if sample.size == 0:
        raise ConfigError("cannot fit a time encoding on an empty sample")
    if not np.issubdtype(sample.dtype, np.integer):
        sample = sample.astype(np.float64)
    return np.sort(sample, kind="stable")


@dataclass(frozen=True, eq=False)
class Bucketizer:
    """
    Left-closed buckets over sorted boundaries: a difference lands in the
    bucket counting the boundaries strictly below it, so values equal to a
    boundary stay in the left bucket and anything outside the fitted range
    clamps to an end bucket.
    """

    boundaries: np.ndarray
    bucket_count: int
    kind: ClassVar[str] = "bucket"

    def __post_init__(self):
        if self.bucket_count < 1:
            raise ConfigError("bucket count must be at least 1, got {}".format(self.bucket_count))
        if len(self.boundaries) != self.bucket_count - 1:
            raise ConfigError("{} buckets need {} boundaries, got {}".format(
                self.bucket_count, self.bucket_count - 1, len(self.boundaries)))
        if np.any(np.diff(self.boundaries) < 0):
            raise ConfigError("bucket boundaries must be non-decreasing")

    def __eq__(self, other):
        return (type(other) is type(self) and self.bucket_count == other.bucket_count
                and np.array_equal(self.boundaries, other.boundaries))

    def __hash__(self):
        return hash((self.kind, self.bucket_count, self.boundaries.tobytes()))

    def bucketize(self, diff: float) -> int:
        return int(np.searchsorted(self.boundaries, diff, side="left"))

    def bucketize_many(self, diffs: Sequence[float]) -> np.ndarray:
        return np.searchsorted(self.boundaries, np.asarray(diffs), side="left").astype(np.int64)

    def edges(self, bucket: int) -> tuple[float, float]:
        lower = -np.inf if bucket == 0 else float(self.boundaries[bucket - 1])
        upper = np.inf if bucket == self.bucket_count - 1 else float(self.boundaries[bucket])
        return lower, upper


class QuantileBucketizer(Bucketizer):
    kind = "quantile"


class EqualWidthBucketizer(Bucketizer):
    kind = "equal_width"


@dataclass(frozen=True)
class MinMaxTimeScaler:
    """Maps a difference to [0, 1] by the training minimum and maximum, clamping outside."""

    low: float
    high: float
    kind: ClassVar[str] = "min_max"

    def scale(self, diff: float) -> float:
        if self.high <= self.low:
            return 0.0
        return float(min(1.0, max(0.0, (diff - self.low) / (self.high - self.low))))

    def scale_many(self, diffs: Sequence[float]) -> np.ndarray:
        return np.array([self.scale(d) for d in diffs], dtype=np.float64)


def fit_buckets(diffs: Iterable[float], bucket_count: int) -> QuantileBucketizer:
    """
    Equal-mass buckets: boundary k is the nearest-rank k/B quantile of the
    sorted training sample, i.e. its ceil(k*n/B)-th smallest value.
    """
    if bucket_count < 1:
        raise ConfigError("bucket count must be at least 1, got {}".format(bucket_count))
    sample = _as_sample(diffs)
    n = sample.size
    distinct = np.unique(sample).size
    if bucket_count > distinct:
        warnings.warn("{} buckets requested over {} distinct differences; some buckets will be empty".format(
            bucket_count, distinct), BucketWarning, stacklevel=2)
    ranks = [-(-k * n // bucket_count) for k in range(1, bucket_count)]
    boundaries = sample[[rank - 1 for rank in ranks]] if ranks else sample[:0]
    return QuantileBucketizer(np.array(boundaries), bucket_count)


def fit_equal_width(diffs: Iterable[float], bucket_count: int,
                    clip: float = CLIP_FRACTION) -> EqualWidthBucketizer:
    """Equal-width buckets across the training range after clipping ``clip`` of each tail."""
    if bucket_count < 1:
        raise ConfigError("bucket count must be at least 1, got {}".format(bucket_count))
    sample = _as_sample(diffs).astype(np.float64)
    low, high = np.quantile(sample, [clip, 1.0 - clip])
    width = (high - low) / bucket_count
    boundaries = np.array([low + k * width for k in range(1, bucket_count)], dtype=np.float64)
    return EqualWidthBucketizer(boundaries, bucket_count)


def fit_min_max(diffs: Iterable[float]) -> MinMaxTimeScaler:
    sample = _as_sample(diffs)
    return MinMaxTimeScaler(float(sample[0]), float(sample[-1]))
