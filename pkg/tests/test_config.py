import pytest

from tempgnn.config import RunConfig, RunConfigDTO, config_keys, load_run_config, read_config_file, \
    write_config_file
from tempgnn.errors import ConfigError
from tempgnn.temporal import EncoderVariant


def test_defaults():
    config = load_run_config()
    assert config == RunConfig()
    assert (config.dim, config.layers, config.tau, config.buckets_tn, config.buckets_te) == (256, 6, 12.0, 40, 50)
    assert (config.batch_size, config.lr, config.lr_decay, config.lr_decay_every) == (100, 1e-3, 0.1, 3)


def test_file_then_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# tiny run\n"
                    "dim = 16\n"
                    "tie-edge-gates = true\n"
                    "te_variant = q+g   # gated, no activation\n"
                    "\n"
                    "epochs = 3\n")
    config = load_run_config(path, {"epochs": 5, "seed": None})
    assert config.dim == 16 and config.tie_edge_gates is True
    assert config.te_variant == "q+g"
    assert config.epochs == 5 and config.seed == 0


def test_unknown_key_named(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("dimension = 16\n")
    with pytest.raises(ConfigError, match="dimension"):
        load_run_config(path)


@pytest.mark.parametrize("overrides, key", [
    ({"dim": 0}, "dim"),
    ({"tau": -1.0}, "tau"),
    ({"dropout": 1.0}, "dropout"),
    ({"lr_decay": 1.5}, "lr_decay"),
    ({"te_variant": "position"}, "te_variant"),
    ({"tn_variant": "q+z"}, "tn_variant"),
    ({"epochs": "many"}, "epochs"),
])
def test_invalid_values(overrides, key):
    with pytest.raises(ConfigError, match=key):
        load_run_config(overrides=overrides)


def test_position_allowed_on_nodes():
    assert load_run_config(overrides={"tn_variant": "position"}).tn_variant == "position"


@pytest.mark.parametrize("text, message", [
    ("dim 16\n", "expected 'key = value'"),
    ("dim = 16\ndim = 32\n", "duplicate"),
    ("= 16\n", "expected 'key = value'"),
])
def test_malformed_files(tmp_path, text, message):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError, match=message):
        read_config_file(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "absent.cfg")


def test_written_file_loads_back(tmp_path):
    path = write_config_file({"train_path": tmp_path / "train.txt", "tie_edge_gates": False, "test_path": None,
                              "max_len": 7}, tmp_path / "out" / "corpus.cfg")
    assert read_config_file(path) == {"train_path": str(tmp_path / "train.txt"), "tie_edge_gates": "false",
                                      "max_len": "7"}
    config = load_run_config(path)
    assert config.max_len == 7 and config.test_path is None


def test_model_config():
    model_config = RunConfig(dim=8, layers=2, tn_variant="bucket", te_variant="none").to_model_config()
    assert model_config.tn_variant is EncoderVariant.BUCKET
    assert model_config.te_variant is EncoderVariant.NONE
    assert (model_config.dim, model_config.layers) == (8, 2)


def test_dto_dump_covers_every_key():
    assert sorted(RunConfigDTO().to_dict(RunConfig())) == sorted(config_keys())
