import argparse
import json
import logging
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from tempgnn.config import RunConfig, load_run_config, write_config_file
from tempgnn.data import ColumnSpec, SynthSpec, Vocabulary, corpus_stats, expand, load_prepared, parse_duration, \
    parse_log, prepare_sessions, synth_corpus
from tempgnn.data.corpus_io import read_corpus, write_corpus, write_log
from tempgnn.errors import ConfigError, NumericalAbort, TempGNNError
from tempgnn.graph import format_graph
from tempgnn.model import ModelConfig, TempGNN, load_checkpoint
from tempgnn.temporal import Bucketizer
from tempgnn.train.experiments import DEFAULT_GRID
from tempgnn.train import RunStore, ablate, evaluate, sweep_buckets, train, write_table

logger = logging.getLogger("tempgnn")


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError("expected true or false, got {!r}".format(text))


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, got {!r}".format(text)) from None


def _config_parent() -> argparse.ArgumentParser:
    """``--config`` plus one ``--field-name`` override per RunConfig field; unset overrides stay None."""
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("run configuration")
    group.add_argument("--config", help="flat 'key = value' file; flags below override it")
    for spec in dataclass_fields(RunConfig):
        kind = {int: int, float: float, bool: _parse_bool}.get(spec.type, str)
        group.add_argument("--{}".format(spec.name.replace("_", "-")), dest=spec.name, type=kind, default=None)
    return parent


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {spec.name: getattr(args, spec.name, None) for spec in dataclass_fields(RunConfig)}
    return load_run_config(args.config, overrides)


def _corpus(config: RunConfig):
    if not config.train_path or not config.vocab_path:
        raise ConfigError("train_path and vocab_path are required (run preprocess and pass its corpus.cfg)")
    return load_prepared(config.train_path, config.test_path, config.vocab_path, max_len=config.max_len,
                         validation_fraction=config.validation_fraction)


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(n_items=args.items, n_sessions=args.sessions, seed=args.seed,
                     temporal_signal=args.temporal_signal, noise=args.noise, min_length=args.min_length,
                     max_length=args.max_length, span_days=args.span_days)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_log(synth_corpus(spec), out)
    return 0


def cmd_preprocess(args: argparse.Namespace) -> int:
    columns = ColumnSpec(session=args.session_col, timestamp=args.time_col, item=args.item_col,
                         delimiter=args.delimiter, header=not args.no_header)
    sessions = parse_log(args.input, columns)
    train_sessions, test_sessions, vocabulary = prepare_sessions(
        sessions, min_item_count=args.min_item_count, test_window=parse_duration(args.test_window),
        last_fraction=args.keep_last_fraction)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(train_sessions, vocabulary, out / "train.txt")
    write_corpus(test_sessions, vocabulary, out / "test.txt")
    vocabulary.save(out / "vocab.tsv")
    stats = corpus_stats(train_sessions, test_sessions)
    (out / "stats.json").write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    write_config_file({"train_path": (out / "train.txt").resolve(), "test_path": (out / "test.txt").resolve(),
                       "vocab_path": (out / "vocab.tsv").resolve(), "max_len": args.max_len}, out / "corpus.cfg")
    logger.info("corpus: %s", ", ".join("{}={}".format(key, value) for key, value in stats.items()))
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _run_config(args)
    result = train(config, _corpus(config), out_dir=config.out_dir, progress=args.progress)
    logger.info("checkpoint %s, metrics %s", result.checkpoint_path, result.metrics_path)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    model = load_checkpoint(args.checkpoint)
    if not config.test_path or not config.vocab_path:
        raise ConfigError("test_path and vocab_path are required for evaluation")
    vocabulary = Vocabulary.load(config.vocab_path)
    instances = expand(read_corpus(config.test_path, vocabulary), vocabulary, model.config.max_len)
    report = evaluate(model, instances, ks=args.ks, workers=config.workers)
    print(report.summary())
    if args.dump_ranks:
        report.dump_ranks(args.dump_ranks)
    if args.dump_graphs:
        blocks = ["# {} -> {}\n{}".format(inst.prefix.session_id, inst.target_item, format_graph(model.graph(inst)))
                  for inst in instances]
        Path(args.dump_graphs).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
    return 0


def _store(args: argparse.Namespace) -> RunStore:
    return RunStore.open(args.runs_db, echo=logger.isEnabledFor(logging.DEBUG))


def _dump_runs(store: RunStore, experiment: str, path: Optional[str], prefix: bool = False) -> None:
    if not path:
        return
    runs = store.runs(experiment, prefix=prefix)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(runs, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %d runs to %s", len(runs), out)


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    with _store(args) as store:
        table = ablate(config, _corpus(config), args.grid or DEFAULT_GRID, store=store)
        _dump_runs(store, "ablate", args.runs_out)
    write_table(table, args.out)
    print(table.to_string(index=False))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _run_config(args)
    with _store(args) as store:
        table = sweep_buckets(config, _corpus(config), args.counts, side=args.side, store=store)
        _dump_runs(store, "sweep-{}-".format(args.side), args.runs_out, prefix=True)
    write_table(table, args.out, delimiter=",")
    print(table.to_string(index=False))
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    """End-to-end gradient check of a tiny model on synthetic sessions, one model per seed."""
    worst = 0.0
    for seed in range(args.seed, args.seed + args.seeds):
        sessions = synth_corpus(SynthSpec(n_items=args.items, n_sessions=20, seed=seed, max_length=5))
        vocabulary = Vocabulary.build(sessions)
        instances = expand(sessions, vocabulary, max_len=10)
        config = ModelConfig(dim=args.dim, layers=args.layers, buckets_tn=args.buckets, buckets_te=args.buckets,
                             tn_variant=args.variant, te_variant=args.variant)
        model = TempGNN.initialize(config, len(vocabulary), instances, seed=seed)
        instance = instances[np.random.default_rng(seed).integers(len(instances))]
        error = model.grad_check(instance, h=args.step, max_coordinates=args.max_coordinates, seed=seed)
        logger.info("seed %d: max relative error %.3e", seed, error)
        worst = max(worst, error)
    print("max relative error {:.3e}".format(worst))
    if worst > args.tolerance:
        raise NumericalAbort("gradient check failed: {:.3e} > {:.1e}".format(worst, args.tolerance))
    return 0


def cmd_dump_embeddings(args: argparse.Namespace) -> int:
    model = load_checkpoint(args.checkpoint)
    rows = []
    for side, encoding in (("tn", model.encodings.tn), ("te", model.encodings.te)):
        name = "{}_table".format(side)
        if name not in model.params:
            continue
        for bucket, vector in enumerate(model.params[name]):
            lower, upper = encoding.edges(bucket) if isinstance(encoding, Bucketizer) else (np.nan, np.nan)
            rows.append([side, bucket, lower, upper, *vector])
    if not rows:
        raise ConfigError("checkpoint has no bucket embeddings (variants {} / {})".format(
            model.config.tn_variant.label, model.config.te_variant.label))
    columns = ["side", "bucket", "lower_ms", "upper_ms"] + ["e{}".format(k) for k in range(model.config.dim)]
    pd.DataFrame(rows, columns=columns).to_csv(args.out, index=False, encoding="utf-8")
    logger.info("wrote %d bucket vectors to %s", len(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempgnn", description="Temporal session-graph recommender")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)
    config_parent = _config_parent()

    synth = commands.add_parser("synth", help="write a synthetic click log")
    synth.add_argument("--items", type=int, default=50)
    synth.add_argument("--sessions", type=int, default=2000)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--temporal-signal", type=_parse_bool, default=True)
    synth.add_argument("--noise", type=float, default=0.1)
    synth.add_argument("--min-length", type=int, default=2)
    synth.add_argument("--max-length", type=int, default=8)
    synth.add_argument("--span-days", type=float, default=30.0)
    synth.add_argument("--out", required=True)
    synth.set_defaults(handler=cmd_synth)

    preprocess = commands.add_parser("preprocess", help="filter, split and index a raw click log")
    preprocess.add_argument("--input", required=True)
    preprocess.add_argument("--out", required=True)
    preprocess.add_argument("--session-col", default="session_id")
    preprocess.add_argument("--time-col", default="timestamp")
    preprocess.add_argument("--item-col", default="item_id")
    preprocess.add_argument("--delimiter", default=",")
    preprocess.add_argument("--no-header", action="store_true")
    preprocess.add_argument("--min-item-count", type=int, default=5)
    preprocess.add_argument("--test-window", default="1d")
    preprocess.add_argument("--keep-last-fraction", type=float, default=None)
    preprocess.add_argument("--max-len", type=int, default=10)
    preprocess.set_defaults(handler=cmd_preprocess)

    train_cmd = commands.add_parser("train", parents=[config_parent], help="train and keep the best checkpoint")
    train_cmd.add_argument("--progress", action="store_true")
    train_cmd.set_defaults(handler=cmd_train)

    evaluate_cmd = commands.add_parser("evaluate", parents=[config_parent], help="R@K and M@K on the test corpus")
    evaluate_cmd.add_argument("--checkpoint", required=True)
    evaluate_cmd.add_argument("--ks", type=_int_list, default=[5, 20])
    evaluate_cmd.add_argument("--dump-ranks")
    evaluate_cmd.add_argument("--dump-graphs")
    evaluate_cmd.set_defaults(handler=cmd_evaluate)

    ablate_cmd = commands.add_parser("ablate", parents=[config_parent], help="temporal-encoding ablation table")
    ablate_cmd.add_argument("--grid", default=None, help="comma-separated entries such as Base,Q+A+G:tn,Q+A+G:te")
    ablate_cmd.add_argument("--runs-db")
    ablate_cmd.add_argument("--runs-out", help="JSON dump of every recorded run")
    ablate_cmd.add_argument("--out", default="ablation.tsv")
    ablate_cmd.set_defaults(handler=cmd_ablate)

    sweep = commands.add_parser("sweep-buckets", parents=[config_parent], help="accuracy against bucket count")
    sweep.add_argument("--counts", type=_int_list, default=[0, 1, 2, 5, 10, 20, 40, 60])
    sweep.add_argument("--side", choices=["tn", "te"], default="te")
    sweep.add_argument("--runs-db")
    sweep.add_argument("--runs-out", help="JSON dump of every recorded run")
    sweep.add_argument("--out", default="sweep.csv")
    sweep.set_defaults(handler=cmd_sweep)

    gradcheck = commands.add_parser("gradcheck", help="end-to-end gradient check on a tiny model")
    gradcheck.add_argument("--dim", type=int, default=8)
    gradcheck.add_argument("--items", type=int, default=20)
    gradcheck.add_argument("--layers", type=int, default=2)
    gradcheck.add_argument("--buckets", type=int, default=4)
    gradcheck.add_argument("--variant", default="q+a+g")
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--seeds", type=int, default=5)
    gradcheck.add_argument("--step", type=float, default=1e-5)
    gradcheck.add_argument("--max-coordinates", type=int, default=None)
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)
    gradcheck.set_defaults(handler=cmd_gradcheck)

    dump = commands.add_parser("dump-embeddings", help="write TN/TE bucket vectors as CSV")
    dump.add_argument("--checkpoint", required=True)
    dump.add_argument("--out", default="embeddings.csv")
    dump.set_defaults(handler=cmd_dump_embeddings)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    try:
        return args.handler(args)
    except TempGNNError as error:
        logger.error("%s", error.message)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
