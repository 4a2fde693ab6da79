import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import pandas as pd

from tempgnn.config.settings import RunConfig
from tempgnn.data.pipeline import PreparedCorpus
from tempgnn.errors import ConfigError
from tempgnn.temporal import EncoderVariant
from tempgnn.train.metrics import EvalReport, evaluate
from tempgnn.train.registry import RunStore
from tempgnn.train.trainer import train

logger = logging.getLogger(__name__)

DEFAULT_GRID = ("Base", "Position", "Constant:tn", "Constant:te", "Bucket:tn", "Bucket:te", "Q:tn", "Q:te",
                "Q+A:tn", "Q+A:te", "Q+G:tn", "Q+G:te", "Q+A+G:tn", "Q+A+G:te", "Q+A+G")
TABLE_COLUMNS = ["variant", "TN", "TE", "R@5", "M@5", "R@20", "M@20"]
SWEEP_COLUMNS = ["B", "R@20", "M@20"]


@dataclass(frozen=True)
class GridEntry:
    label: str
    tn_variant: EncoderVariant
    te_variant: EncoderVariant

    @property
    def uses_tn(self) -> bool:
        return self.tn_variant is not EncoderVariant.NONE

    @property
    def uses_te(self) -> bool:
        return self.te_variant is not EncoderVariant.NONE


def parse_grid_entry(text: str) -> GridEntry:
    """
    ``Base``, ``<variant>`` (both sides, Position on TN only), ``<variant>:tn``
    or ``<variant>:te``.
    """
    name, _, side = text.strip().partition(":")
    variant = EncoderVariant.parse(name)
    side = side.strip().lower()
    if variant is EncoderVariant.NONE:
        return GridEntry("Base", EncoderVariant.NONE, EncoderVariant.NONE)
    if side in ("", "both", "tn+te"):
        te = EncoderVariant.NONE if variant is EncoderVariant.POSITION else variant
        return GridEntry(variant.label, variant, te)
    if side == "tn":
        return GridEntry("{}:tn".format(variant.label), variant, EncoderVariant.NONE)
    if side == "te":
        if variant is EncoderVariant.POSITION:
            raise ConfigError("the position variant cannot encode edges")
        return GridEntry("{}:te".format(variant.label), EncoderVariant.NONE, variant)
    raise ConfigError("unknown side {!r} in grid entry {!r}; use tn or te".format(side, text))


def parse_grid(text: str | Iterable[str]) -> list[GridEntry]:
    parts = text.split(",") if isinstance(text, str) else list(text)
    entries = [parse_grid_entry(part) for part in parts if part.strip()]
    if not entries:
        raise ConfigError("the ablation grid is empty")
    return entries


def run_once(config: RunConfig, corpus: PreparedCorpus) -> EvalReport:
    result = train(config, corpus)
    instances = corpus.test
    if not instances:
        logger.warning("no test instances; scoring the validation slice instead")
        instances = corpus.validation
    return evaluate(result.model, instances, ks=(5, 20), workers=config.workers)


def _run_entry(config: RunConfig, corpus: PreparedCorpus, store: RunStore, experiment: str, entry: GridEntry,
               replicates: int, **changes) -> None:
    for replicate in range(replicates):
        seed = config.seed + replicate
        run_config = replace(config, tn_variant=entry.tn_variant.value, te_variant=entry.te_variant.value,
                             seed=seed, **changes)
        logger.info("%s: %s (replicate %d, seed %d)", experiment, entry.label, replicate, seed)
        report = run_once(run_config, corpus)
        logger.info("%s: %s -> %s", experiment, entry.label, report.summary())
        store.record(experiment=experiment, label=entry.label, tn_variant=entry.tn_variant.value,
                     te_variant=entry.te_variant.value, buckets_tn=run_config.buckets_tn,
                     buckets_te=run_config.buckets_te, seed=seed, replicate=replicate, report=report)


def _percent(value: float) -> float:
    return round(100.0 * value, 2)


def ablate(config: RunConfig, corpus: PreparedCorpus, grid: str | Sequence[str] = DEFAULT_GRID,
           store: Optional[RunStore] = None, replicates: Optional[int] = None) -> pd.DataFrame:
    """Train every grid entry on the same data and seeds; one row per entry with replicate means ×100."""
    entries = parse_grid(grid)
    replicates = replicates or config.replicates
    store = store or RunStore()
    for entry in entries:
        _run_entry(config, corpus, store, "ablate", entry, replicates)

    flags = {entry.label: entry for entry in entries}
    rows = []
    for summary in store.summary("ablate"):
        entry = flags.get(summary["label"])
        if entry is None:
            continue
        rows.append([summary["label"], "o" if entry.uses_tn else "x", "o" if entry.uses_te else "x",
                     _percent(summary["recall_5"]), _percent(summary["mrr_5"]),
                     _percent(summary["recall_20"]), _percent(summary["mrr_20"])])
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def sweep_buckets(config: RunConfig, corpus: PreparedCorpus, counts: Sequence[int], side: str = "te",
                  store: Optional[RunStore] = None, replicates: Optional[int] = None) -> pd.DataFrame:
    """One Q+A+G run per bucket count on ``side`` with the other side disabled; a count of 0 is the Base model."""
    if not counts:
        raise ConfigError("bucket sweep needs at least one count")
    if any(count < 0 for count in counts):
        raise ConfigError("bucket counts must be non-negative, got {}".format(list(counts)))
    if side not in ("tn", "te"):
        raise ConfigError("sweep side must be tn or te, got {!r}".format(side))
    replicates = replicates or config.replicates
    store = store or RunStore()

    rows = []
    for count in counts:
        experiment = "sweep-{}-{}".format(side, count)
        if count == 0:
            entry, changes = GridEntry("B=0", EncoderVariant.NONE, EncoderVariant.NONE), {}
        else:
            entry = parse_grid_entry("q+a+g:{}".format(side))
            entry = GridEntry("B={}".format(count), entry.tn_variant, entry.te_variant)
            changes = {"buckets_{}".format(side): count}
        _run_entry(config, corpus, store, experiment, entry, replicates, **changes)
        (summary,) = store.summary(experiment)
        rows.append([count, _percent(summary["recall_20"]), _percent(summary["mrr_20"])])
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def write_table(frame: pd.DataFrame, path: Path | str, delimiter: str = "\t") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, sep=delimiter, index=False, float_format="%.2f", encoding="utf-8")
    return path
