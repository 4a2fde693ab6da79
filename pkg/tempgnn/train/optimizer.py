import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from tempgnn.errors import ConfigError, NumericalAbort
from tempgnn.model.params import ModelParams

logger = logging.getLogger(__name__)


@dataclass(kw_only=True)
class OptimizerState:
    base_lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-5
    decay: float = 0.1
    decay_every: int = 3
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.base_lr > 0 or not 0 < self.decay <= 1 or self.decay_every < 1:
            raise ConfigError("learning-rate schedule needs lr > 0, decay in (0, 1] and a positive period")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1) or not self.eps > 0 or self.weight_decay < 0:
            raise ConfigError("Adam needs betas in [0, 1), eps > 0 and a non-negative weight decay")

    @classmethod
    def for_params(cls, params: ModelParams, **settings) -> "OptimizerState":
        state = cls(**settings)
        for name, value in params.items():
            state.first_moment[name] = np.zeros_like(value)
            state.second_moment[name] = np.zeros_like(value)
        return state

    def learning_rate(self, epoch: int) -> float:
        return learning_rate(epoch, self.base_lr, self.decay, self.decay_every)


def learning_rate(epoch: int, base_lr: float = 1e-3, decay: float = 0.1, every: int = 3) -> float:
    """Step schedule: base * decay ** floor(epoch / every)."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative, got {}".format(epoch))
    return base_lr * decay ** (epoch // every)


def adam_step(params: ModelParams, grads: Mapping[str, np.ndarray], state: OptimizerState,
              epoch: int = 0) -> ModelParams:
    """
    One bias-corrected Adam update. The L2 term ``weight_decay * theta`` is
    added to each gradient before the moments are updated. Parameters with no
    gradient entry still decay.
    """
    for name, grad in grads.items():
        if name not in params:
            raise ConfigError("gradient for unknown parameter {!r}".format(name))
        if grad.shape != params[name].shape:
            raise ConfigError("gradient for {!r} has shape {}, parameter has {}".format(
                name, grad.shape, params[name].shape))
        if not np.all(np.isfinite(grad)):
            raise NumericalAbort("non-finite gradient for parameter {!r}".format(name))

    state.step += 1
    lr = state.learning_rate(epoch)
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step

    updated = {}
    for name, value in params.items():
        grad = grads.get(name)
        grad = np.zeros_like(value) if grad is None else grad
        if state.weight_decay:
            grad = grad + state.weight_decay * value
        m = state.first_moment.setdefault(name, np.zeros_like(value))
        v = state.second_moment.setdefault(name, np.zeros_like(value))
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[name], state.second_moment[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params.replace(updated)
