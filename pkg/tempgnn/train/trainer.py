import logging
import math
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from tempgnn.config.settings import RunConfig
from tempgnn.data.events import LabeledInstance
from tempgnn.data.pipeline import PreparedCorpus
from tempgnn.errors import EmptyCorpusError, NumericalAbort
from tempgnn.model.checkpoint import save_checkpoint
from tempgnn.model.tempgnn import TempGNN
from tempgnn.train.metrics import evaluate
from tempgnn.train.optimizer import OptimizerState, adam_step

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ["epoch", "train_loss", "val_R@20", "val_M@20", "lr", "wall_time"]
CHECKPOINT_NAME = "model.ckpt"
METRICS_NAME = "metrics.csv"


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_recall: float
    val_mrr: float
    lr: float
    wall_time: float

    def row(self) -> dict:
        return dict(zip(METRICS_COLUMNS, asdict(self).values()))


@dataclass
class TrainResult:
    model: TempGNN
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    checkpoint_path: Optional[Path] = None
    metrics_path: Optional[Path] = None

    @property
    def losses(self) -> list[float]:
        return [record.train_loss for record in self.history]


def optimizer_for(config: RunConfig, model: TempGNN) -> OptimizerState:
    return OptimizerState.for_params(model.params, base_lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                                     eps=config.eps, weight_decay=config.weight_decay, decay=config.lr_decay,
                                     decay_every=config.lr_decay_every)


def batch_gradients(model: TempGNN, batch: Sequence[LabeledInstance], pool: Optional[Executor] = None,
                    seeds: Optional[Sequence[Sequence[int]]] = None) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss and gradients over a batch, reduced in instance order whatever the worker count."""

    def _one(index: int):
        rng = np.random.default_rng(seeds[index]) if seeds is not None else None
        return model.loss_and_gradients(batch[index], training=rng is not None, rng=rng)

    indices = range(len(batch))
    results = list(pool.map(_one, indices)) if pool is not None else [_one(i) for i in indices]

    total = math.fsum(loss for loss, _ in results)
    summed: dict[str, np.ndarray] = {}
    for _, grads in results:
        for name, grad in grads.items():
            summed[name] = grad.copy() if name not in summed else summed[name] + grad
    scale = 1.0 / len(batch)
    return total * scale, {name: grad * scale for name, grad in summed.items()}


def write_metrics(history: Sequence[EpochRecord], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame([record.row() for record in history], columns=METRICS_COLUMNS).to_csv(
        path, index=False, encoding="utf-8")
    return path


def train(config: RunConfig, corpus: PreparedCorpus, *, out_dir: Optional[Path | str] = None,
          progress: bool = False, model: Optional[TempGNN] = None) -> TrainResult:
    """
    Shuffle, batch and step Adam once per batch; after every epoch the
    validation slice picks the best parameters by R@20 (the last epoch when
    the slice is empty). With ``out_dir`` the selected model and the metrics
    CSV are written there.
    """
    if not corpus.train:
        raise EmptyCorpusError("no training instances")
    if model is None:
        model = TempGNN.initialize(config.to_model_config(), corpus.n_items, corpus.train, seed=config.seed)
    optimizer = optimizer_for(config, model)
    order_rng = np.random.default_rng([config.seed, 1])
    use_dropout = model.config.dropout > 0.0
    if not corpus.validation:
        logger.warning("validation slice is empty; the last epoch will be kept")

    result = TrainResult(model=model)
    best_recall = -1.0
    started = time.perf_counter()
    pool_context = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else nullcontext()
    with pool_context as pool:
        for epoch in range(config.epochs):
            lr = optimizer.learning_rate(epoch)
            order = order_rng.permutation(len(corpus.train))
            batches = [order[start:start + config.batch_size] for start in range(0, len(order), config.batch_size)]
            losses = []
            for batch_id, indices in enumerate(tqdm(batches, desc="epoch {}".format(epoch), unit="batch",
                                                    disable=not progress, leave=False)):
                batch = [corpus.train[i] for i in indices]
                seeds = [[config.seed, epoch, batch_id, k] for k in range(len(batch))] if use_dropout else None
                loss, grads = batch_gradients(model, batch, pool, seeds)
                if not math.isfinite(loss):
                    raise NumericalAbort("loss became {} in epoch {} batch {}".format(loss, epoch, batch_id))
                model = model.with_params(adam_step(model.params, grads, optimizer, epoch))
                losses.append(loss)

            train_loss = math.fsum(losses) / len(losses)
            if corpus.validation:
                report = evaluate(model, corpus.validation, ks=(20,), workers=config.workers)
                val_recall, val_mrr = report.recall[20], report.mrr[20]
            else:
                val_recall = val_mrr = float("nan")
            record = EpochRecord(epoch, train_loss, val_recall, val_mrr, lr, time.perf_counter() - started)
            result.history.append(record)
            logger.info("epoch %d: loss %.5f  val R@20 %.4f  M@20 %.4f  lr %.1e", epoch, train_loss, val_recall,
                        val_mrr, lr)

            if not corpus.validation or val_recall > best_recall:
                best_recall = val_recall if corpus.validation else best_recall
                result.model, result.best_epoch = model, epoch

    if result.best_epoch is not None:
        logger.info("selected epoch %d", result.best_epoch)
    if out_dir is not None:
        out_dir = Path(out_dir)
        result.checkpoint_path = save_checkpoint(result.model, out_dir / CHECKPOINT_NAME)
        result.metrics_path = write_metrics(result.history, out_dir / METRICS_NAME)
    return result
