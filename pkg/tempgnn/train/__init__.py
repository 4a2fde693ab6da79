from tempgnn.train.optimizer import OptimizerState, adam_step, learning_rate
from tempgnn.train.metrics import EvalReport, evaluate, evaluate_scores, rank_of_target, report_from_ranks
from tempgnn.train.trainer import EpochRecord, TrainResult, batch_gradients, train, write_metrics
from tempgnn.train.registry import ExperimentRun, ExperimentRunDTO, RunStore, RunSummaryDTO
from tempgnn.train.experiments import ablate, parse_grid, parse_grid_entry, sweep_buckets, write_table

__all__ = [
    "EpochRecord", "EvalReport", "ExperimentRun", "ExperimentRunDTO", "OptimizerState", "RunStore", "RunSummaryDTO",
    "TrainResult", "ablate", "adam_step", "batch_gradients", "evaluate", "evaluate_scores", "learning_rate",
    "parse_grid", "parse_grid_entry", "rank_of_target", "report_from_ranks", "sweep_buckets", "train",
    "write_metrics", "write_table",
]
