import numpy as np
import pytest

from tempgnn.config import RunConfig
from tempgnn.data import LabeledInstance, PreparedCorpus, Session, SessionEvent, SynthSpec, Vocabulary, expand, \
    synth_corpus
from tempgnn.data.ingest import carve_validation
from tempgnn.model import ModelConfig, TempGNN

MINUTE = 60_000


def make_session(session_id, items, timestamps, prediction_timestamp=None):
    events = tuple(SessionEvent(item, ts) for item, ts in zip(items, timestamps))
    return Session(session_id=session_id, events=events, prediction_timestamp=prediction_timestamp)


def random_instance(rng, n_items, max_len=10, session_id="r"):
    """A prefix of random items with random gaps from a second to a day, ending before its target click."""
    length = int(rng.integers(1, max_len + 1))
    items = rng.integers(0, n_items, size=length).tolist()
    stamps = np.cumsum(rng.integers(1_000, 86_400_000, size=length + 1)).tolist()
    prefix = make_session(session_id, ["i{}".format(i) for i in items], stamps[:-1], stamps[-1])
    return LabeledInstance(prefix=prefix, prefix_items=tuple(items), target_item=int(rng.integers(n_items)))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def toy_sessions():
    return [
        make_session("a", ["x", "y", "z"], [0, MINUTE, 3 * MINUTE]),
        make_session("b", ["y", "z", "y", "w"], [0, 10_000, 20_000, 90 * MINUTE]),
        make_session("c", ["w", "x"], [5 * MINUTE, 6 * MINUTE]),
    ]


@pytest.fixture
def toy_vocabulary(toy_sessions):
    return Vocabulary.build(toy_sessions)


@pytest.fixture
def toy_instances(toy_sessions, toy_vocabulary):
    return expand(toy_sessions, toy_vocabulary, max_len=10)


@pytest.fixture
def tiny_config():
    return ModelConfig(dim=8, layers=2, buckets_tn=4, buckets_te=4)


@pytest.fixture
def synth_sessions():
    return synth_corpus(SynthSpec(n_items=12, n_sessions=60, seed=3, max_length=5))


@pytest.fixture
def synth_prepared(synth_sessions):
    vocabulary = Vocabulary.build(synth_sessions)
    fit, held_out = carve_validation(synth_sessions, 0.2)
    return PreparedCorpus(vocabulary=vocabulary, train=expand(fit, vocabulary, 10),
                          validation=expand(held_out, vocabulary, 10), test=expand(held_out, vocabulary, 10))


@pytest.fixture
def tiny_model(tiny_config, synth_prepared):
    return TempGNN.initialize(tiny_config, synth_prepared.n_items, synth_prepared.train, seed=0)


@pytest.fixture
def tiny_run_config():
    return RunConfig(dim=8, layers=1, buckets_tn=3, buckets_te=3, batch_size=16, epochs=2, seed=7, lr=5e-3)
