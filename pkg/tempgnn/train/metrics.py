import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from tempgnn.data.events import LabeledInstance
from tempgnn.errors import ConfigError, VocabularyError
from tempgnn.model.tempgnn import TempGNN

logger = logging.getLogger(__name__)

DEFAULT_KS = (5, 20)


@dataclass
class EvalReport:
    recall: dict[int, float]
    mrr: dict[int, float]
    count: int
    ranks: list[int] = field(default_factory=list, repr=False)

    @property
    def ks(self) -> list[int]:
        return sorted(self.recall)

    def percent(self) -> dict[str, float]:
        """Metrics ×100 rounded to two decimals, keyed ``R@K`` / ``M@K``."""
        row = {}
        for k in self.ks:
            row["R@{}".format(k)] = round(100.0 * self.recall[k], 2)
            row["M@{}".format(k)] = round(100.0 * self.mrr[k], 2)
        return row

    def summary(self) -> str:
        return "  ".join("{}={:.2f}".format(key, value) for key, value in self.percent().items())

    def dump_ranks(self, path: Path | str) -> Path:
        path = Path(path)
        pd.DataFrame({"instance": range(len(self.ranks)), "rank": self.ranks}).to_csv(path, index=False)
        return path


def _check_ks(ks: Iterable[int]) -> list[int]:
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1:
        raise ConfigError("cut-offs must be positive integers, got {}".format(ks))
    return ks


def rank_of_target(scores: np.ndarray, target: int) -> int:
    """1-based rank of ``target`` under descending scores, ties going to the lower item index."""
    scores = np.asarray(scores).reshape(-1)
    if not 0 <= target < scores.size:
        raise VocabularyError("target {} outside [0, {})".format(target, scores.size))
    value = scores[target]
    higher = int(np.count_nonzero(scores > value))
    tied_before = int(np.count_nonzero(scores[:target] == value))
    return 1 + higher + tied_before


def report_from_ranks(ranks: Sequence[int], ks: Iterable[int] = DEFAULT_KS) -> EvalReport:
    ks = _check_ks(ks)
    ranks = list(ranks)
    count = len(ranks)
    if not count:
        logger.warning("evaluating an empty instance set; all metrics are 0")
        return EvalReport({k: 0.0 for k in ks}, {k: 0.0 for k in ks}, 0, [])
    recall = {k: math.fsum(1.0 for r in ranks if r <= k) / count for k in ks}
    mrr = {k: math.fsum(1.0 / r for r in ranks if r <= k) / count for k in ks}
    return EvalReport(recall, mrr, count, ranks)


def evaluate_scores(score_rows: Iterable[np.ndarray], targets: Sequence[int],
                    ks: Iterable[int] = DEFAULT_KS) -> EvalReport:
    ranks = [rank_of_target(scores, target) for scores, target in zip(score_rows, targets, strict=True)]
    return report_from_ranks(ranks, ks)


def evaluate(model: TempGNN, instances: Sequence[LabeledInstance], ks: Iterable[int] = DEFAULT_KS,
             workers: int = 1) -> EvalReport:
    """Rank the full catalog for every instance; ``workers`` threads score instances, results keep input order."""

    def _rank(instance: LabeledInstance) -> int:
        return rank_of_target(model.scores(instance), instance.target_item)

    if workers > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ranks = list(pool.map(_rank, instances))
    else:
        ranks = [_rank(instance) for instance in instances]
    report = report_from_ranks(ranks, ks)
    logger.debug("evaluated %d instances: %s", report.count, report.summary())
    return report
