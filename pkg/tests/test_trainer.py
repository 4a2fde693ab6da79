import math
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from tempgnn.config import RunConfig
from tempgnn.data import PreparedCorpus, SynthSpec, Vocabulary, carve_validation, expand, synth_corpus
from tempgnn.errors import EmptyCorpusError
from tempgnn.model import load_checkpoint
from tempgnn.train import batch_gradients, evaluate, train
from tempgnn.train.trainer import METRICS_COLUMNS


def test_same_seed_same_model(tiny_run_config, synth_prepared):
    first = train(tiny_run_config, synth_prepared)
    second = train(tiny_run_config, synth_prepared)
    assert first.model.params.equals(second.model.params)
    assert first.losses == second.losses


def test_worker_count_does_not_change_result(tiny_run_config, synth_prepared):
    serial = train(tiny_run_config, synth_prepared)
    threaded = train(replace(tiny_run_config, workers=3), synth_prepared)
    assert serial.model.params.equals(threaded.model.params)


def test_dropout_runs_are_reproducible(tiny_run_config, synth_prepared):
    config = replace(tiny_run_config, dropout=0.3, epochs=1)
    assert train(config, synth_prepared).model.params.equals(train(config, synth_prepared).model.params)


def test_zero_epochs_keeps_initial_model(tiny_run_config, synth_prepared, tmp_path):
    result = train(replace(tiny_run_config, epochs=0), synth_prepared, out_dir=tmp_path)
    assert result.history == [] and result.best_epoch is None
    initial = load_checkpoint(result.checkpoint_path)
    fresh = train(replace(tiny_run_config, epochs=0), synth_prepared).model
    assert initial.params.equals(fresh.params)
    assert pd.read_csv(result.metrics_path).columns.tolist() == METRICS_COLUMNS


def test_outputs_written(tiny_run_config, synth_prepared, tmp_path):
    result = train(tiny_run_config, synth_prepared, out_dir=tmp_path / "run")
    frame = pd.read_csv(result.metrics_path)
    assert frame.columns.tolist() == METRICS_COLUMNS
    assert frame["epoch"].tolist() == [0, 1]
    assert frame["lr"].tolist() == pytest.approx([5e-3, 5e-3])
    assert load_checkpoint(result.checkpoint_path).params.equals(result.model.params)
    assert result.best_epoch in (0, 1)


def test_loss_decreases(tiny_run_config, synth_prepared):
    result = train(replace(tiny_run_config, epochs=4, lr_decay=1.0), synth_prepared)
    assert all(math.isfinite(loss) for loss in result.losses)
    assert result.losses[-1] < result.losses[0]


def test_empty_validation_keeps_last_epoch(tiny_run_config, synth_prepared):
    corpus = PreparedCorpus(vocabulary=synth_prepared.vocabulary, train=synth_prepared.train)
    result = train(tiny_run_config, corpus)
    assert result.best_epoch == tiny_run_config.epochs - 1
    assert all(math.isnan(record.val_recall) for record in result.history)


def test_no_training_instances(tiny_run_config, synth_prepared):
    corpus = PreparedCorpus(vocabulary=synth_prepared.vocabulary, train=[])
    with pytest.raises(EmptyCorpusError):
        train(tiny_run_config, corpus)


def test_batch_gradients_average(tiny_model, synth_prepared):
    batch = synth_prepared.train[:3]
    loss, grads = batch_gradients(tiny_model, batch)
    singles = [tiny_model.loss_and_gradients(instance) for instance in batch]
    assert loss == pytest.approx(sum(single[0] for single in singles) / 3)
    expected = sum(single[1]["item_table"] for single in singles) / 3
    np.testing.assert_allclose(grads["item_table"], expected)


def synthetic_corpus(spec, validation_fraction=0.0):
    sessions = synth_corpus(spec)
    vocabulary = Vocabulary.build(sessions)
    fit, held_out = carve_validation(sessions, validation_fraction)
    return PreparedCorpus(vocabulary=vocabulary, train=expand(fit, vocabulary, 10),
                          test=expand(held_out, vocabulary, 10))


@pytest.mark.slow
def test_overfits_small_corpus():
    corpus = synthetic_corpus(SynthSpec(n_items=10, n_sessions=50, seed=0, temporal_signal=False, noise=0.0))
    config = RunConfig(dim=32, layers=1, buckets_tn=4, buckets_te=4, batch_size=32, epochs=200, lr=1e-2,
                       lr_decay=1.0, weight_decay=0.0, seed=0)
    result = train(config, corpus)
    assert evaluate(result.model, corpus.train, ks=(1,)).recall[1] >= 0.95


@pytest.mark.slow
def test_edge_time_beats_base_on_gap_driven_corpus():
    corpus = synthetic_corpus(SynthSpec(n_items=12, n_sessions=2000, seed=0), validation_fraction=0.2)
    base = RunConfig(dim=16, layers=1, buckets_tn=4, buckets_te=16, batch_size=32, epochs=10, lr=1e-2,
                     lr_decay=0.5, lr_decay_every=4, tn_variant="none", te_variant="none")
    scores = {"none": [], "q+a+g": []}
    for seed in range(3):
        for variant in scores:
            config = replace(base, seed=seed, te_variant=variant)
            model = train(config, corpus).model
            scores[variant].append(evaluate(model, corpus.test, ks=(5,)).recall[5])
    assert 100 * (np.mean(scores["q+a+g"]) - np.mean(scores["none"])) >= 5.0
