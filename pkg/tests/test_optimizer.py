import numpy as np
import pytest

from tempgnn.errors import ConfigError, NumericalAbort
from tempgnn.model import ModelConfig, ModelParams
from tempgnn.train import OptimizerState, adam_step, learning_rate


def params_of(**tensors):
    return ModelParams(ModelConfig(dim=2), tensors)


def test_learning_rate_steps():
    rates = [learning_rate(epoch, 1e-3, 0.1, 3) for epoch in range(10)]
    assert rates == pytest.approx([1e-3] * 3 + [1e-4] * 3 + [1e-5] * 3 + [1e-6])


def test_learning_rate_negative_epoch():
    with pytest.raises(ValueError):
        learning_rate(-1)


def test_zero_gradient_is_fixed_point():
    params = params_of(w=np.array([1.5, -2.0]))
    state = OptimizerState.for_params(params, weight_decay=0.0)
    updated = adam_step(params, {"w": np.zeros(2)}, state)
    assert np.array_equal(updated["w"], params["w"])


def test_first_step_moves_by_learning_rate():
    params = params_of(w=np.array([0.0, 0.0]))
    state = OptimizerState.for_params(params, base_lr=0.01, weight_decay=0.0)
    updated = adam_step(params, {"w": np.array([2.0, -0.5])}, state)
    np.testing.assert_allclose(updated["w"], [-0.01, 0.01], rtol=1e-6)
    assert state.step == 1


def test_weight_decay_pulls_towards_zero():
    params = params_of(w=np.array([3.0, -3.0]))
    state = OptimizerState.for_params(params, base_lr=0.01, weight_decay=1e-2)
    updated = adam_step(params, {}, state)
    np.testing.assert_allclose(updated["w"], [2.99, -2.99], rtol=1e-6)


def test_schedule_applies_per_epoch():
    params = params_of(w=np.array([0.0]))
    state = OptimizerState.for_params(params, base_lr=0.01, decay=0.1, decay_every=1, weight_decay=0.0)
    updated = adam_step(params, {"w": np.array([1.0])}, state, epoch=1)
    np.testing.assert_allclose(updated["w"], [-0.001], rtol=1e-6)


def test_quadratic_descent():
    target = np.array([3.0, -2.0])
    params = params_of(w=np.zeros(2))
    state = OptimizerState.for_params(params, base_lr=0.1, decay=1.0, weight_decay=0.0)
    initial = float(np.sum((params["w"] - target) ** 2))
    for _ in range(300):
        params = adam_step(params, {"w": 2.0 * (params["w"] - target)}, state)
    assert float(np.sum((params["w"] - target) ** 2)) < 0.01 * initial


def test_non_finite_gradient_names_parameter():
    params = params_of(w=np.zeros(2), b=np.zeros(1))
    state = OptimizerState.for_params(params)
    with pytest.raises(NumericalAbort, match="'b'"):
        adam_step(params, {"w": np.zeros(2), "b": np.array([np.nan])}, state)
    assert state.step == 0


def test_unknown_parameter():
    params = params_of(w=np.zeros(2))
    with pytest.raises(ConfigError):
        adam_step(params, {"v": np.zeros(2)}, OptimizerState.for_params(params))


def test_shape_mismatch():
    params = params_of(w=np.zeros(2))
    with pytest.raises(ConfigError):
        adam_step(params, {"w": np.zeros(3)}, OptimizerState.for_params(params))


@pytest.mark.parametrize("settings", [{"base_lr": 0.0}, {"decay": 0.0}, {"beta1": 1.0}, {"eps": 0.0},
                                      {"weight_decay": -1.0}, {"decay_every": 0}])
def test_invalid_settings(settings):
    with pytest.raises(ConfigError):
        OptimizerState(**settings)


@pytest.mark.parametrize("lr", [1e-2, 1e-3, 1e-4])
def test_single_step_descends_bowl(lr, rng):
    target = rng.normal(size=5)
    params = params_of(w=rng.normal(size=5))
    before = float(np.sum((params["w"] - target) ** 2))
    state = OptimizerState.for_params(params, base_lr=lr, weight_decay=0.0)
    params = adam_step(params, {"w": 2.0 * (params["w"] - target)}, state)
    assert float(np.sum((params["w"] - target) ** 2)) < before
