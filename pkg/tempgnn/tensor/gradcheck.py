import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np

from tempgnn.errors import EvaluationError
from tempgnn.tensor.tensor import Tape, Tensor

logger = logging.getLogger(__name__)

ScalarFn = Callable[[Sequence[Tensor]], Tensor]


def _evaluate(f: ScalarFn, arrays: Sequence[np.ndarray]) -> float:
    value = f([Tensor(a) for a in arrays])
    result = float(np.sum(value.data))
    if not math.isfinite(result):
        raise EvaluationError("grad_check: function evaluated to {}".format(result))
    return result


def analytic_gradients(f: ScalarFn, params: Sequence[np.ndarray]) -> list[np.ndarray]:
    tape = Tape()
    leaves = [tape.leaf(p) for p in params]
    out = f(leaves)
    if not math.isfinite(float(np.sum(out.data))):
        raise EvaluationError("grad_check: function evaluated to a non-finite value")
    grads = tape.backward(out)
    return [grads.wrt(leaf) for leaf in leaves]


def grad_check(f: ScalarFn, params: Sequence[np.ndarray], h: float = 1e-6,
               max_coordinates: Optional[int] = None, seed: int = 0, floor: float = 1e-8) -> float:
    """
    Worst relative error between reverse-mode and central-difference gradients.

    ``f`` maps a list of tensors to a scalar tensor and must build its result
    only from those tensors. When ``max_coordinates`` is set, that many
    coordinates per parameter are sampled instead of checking all of them.
    Gradients smaller than ``floor`` on both sides are compared absolutely.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("grad_check step must lie in [1e-7, 1e-4], got {}".format(h))

    arrays = [np.array(p, dtype=np.float64) for p in params]
    analytic = analytic_gradients(f, arrays)
    rng = np.random.default_rng(seed)
    worst = 0.0

    for index, array in enumerate(arrays):
        coordinates = np.arange(array.size)
        if max_coordinates is not None and array.size > max_coordinates:
            coordinates = np.sort(rng.choice(array.size, size=max_coordinates, replace=False))
        flat = array.reshape(-1)
        for coordinate in coordinates:
            original = flat[coordinate]
            flat[coordinate] = original + h
            upper = _evaluate(f, arrays)
            flat[coordinate] = original - h
            lower = _evaluate(f, arrays)
            flat[coordinate] = original

            numeric = (upper - lower) / (2.0 * h)
            exact = float(analytic[index].reshape(-1)[coordinate])
            denominator = max(abs(exact), abs(numeric), floor)
            error = abs(exact - numeric) / denominator
            if error > worst:
                worst = error
                logger.debug("grad_check param %d coord %d: analytic %.3e numeric %.3e", index,
                             coordinate, exact, numeric)
    return worst
