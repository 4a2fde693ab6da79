import struct

import numpy as np
import pytest

from tempgnn.errors import CheckpointError
from tempgnn.model import ModelConfig, TempGNN, load_checkpoint, save_checkpoint
from tempgnn.model.checkpoint import HEADER, MAGIC

from tests.conftest import random_instance


@pytest.fixture
def saved(tmp_path, tiny_model):
    return save_checkpoint(tiny_model, tmp_path / "run" / "model.ckpt")


def test_round_trip_is_bitwise(saved, tiny_model):
    loaded = load_checkpoint(saved)
    assert loaded.config == tiny_model.config
    assert loaded.encodings == tiny_model.encodings
    assert loaded.params.equals(tiny_model.params)
    rng = np.random.default_rng(11)
    for k in range(100):
        instance = random_instance(rng, tiny_model.n_items, session_id="r{}".format(k))
        assert loaded.scores(instance).tobytes() == tiny_model.scores(instance).tobytes()


def test_min_max_and_equal_width_encodings(tmp_path, synth_prepared):
    config = ModelConfig(dim=4, layers=1, tn_variant="constant", te_variant="bucket", buckets_te=3,
                         tie_edge_gates=True, dropout=0.2)
    model = TempGNN.initialize(config, synth_prepared.n_items, synth_prepared.train, seed=2)
    loaded = load_checkpoint(save_checkpoint(model, tmp_path / "model.ckpt"))
    assert loaded.config == config
    assert loaded.encodings == model.encodings


def test_bad_magic(saved):
    data = bytearray(saved.read_bytes())
    data[:len(MAGIC)] = b"NOTACKPT"
    saved.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="not a TempGNN checkpoint"):
        load_checkpoint(saved)


def test_unknown_version(saved):
    data = bytearray(saved.read_bytes())
    struct.pack_into("<H", data, len(MAGIC), 99)
    saved.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="version 99"):
        load_checkpoint(saved)


@pytest.mark.parametrize("cut", [10, HEADER.size + 3, -5])
def test_truncated(saved, cut):
    saved.write_bytes(saved.read_bytes()[:cut])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(saved)


def test_trailing_bytes(saved):
    saved.write_bytes(saved.read_bytes() + b"\x00")
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(saved)


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.ckpt")
