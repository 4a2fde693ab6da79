import logging
from typing import Optional, Sequence, Union

import numpy as np

from tempgnn.errors import DegenerateInputError, DimensionError, DomainError
from tempgnn.tensor.tensor import Function, Tape, Tensor, constant

logger = logging.getLogger(__name__)

NORM_EPS = 1e-12
LEAKY_SLOPE = 0.01

Operand = Union[Tensor, np.ndarray, float, int]


def _tape_of(tensors: Sequence[Tensor]) -> Optional[Tape]:
    tape = None
    for tensor in tensors:
        if tensor.tape is None:
            continue
        if tape is None:
            tape = tensor.tape
        elif tensor.tape is not tape:
            raise ValueError("operands belong to different tapes")
    return tape


def _apply(function: Function, *operands: Operand) -> Tensor:
    tensors = [constant(op) for op in operands]
    out = function.forward(*(t.data for t in tensors))
    tape = _tape_of(tensors)
    if tape is None:
        return Tensor(out)
    return tape.record(function, tensors, out)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(kind: str, a: np.ndarray, b: np.ndarray) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError("{}: incompatible shapes {} and {}".format(kind, a.shape, b.shape)) from None


class MatMul(Function):
    kind = "matmul"

    def forward(self, a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionError("matmul: cannot multiply {} by {}".format(a.shape, b.shape))
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


class Add(Function):
    kind = "add"

    def forward(self, a, b):
        _broadcast_shape(self.kind, a, b)
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad):
        return unbroadcast(grad, self.shapes[0]), unbroadcast(grad, self.shapes[1])


class Sub(Function):
    kind = "sub"

    def forward(self, a, b):
        _broadcast_shape(self.kind, a, b)
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad):
        return unbroadcast(grad, self.shapes[0]), unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    kind = "mul"

    def forward(self, a, b):
        _broadcast_shape(self.kind, a, b)
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return unbroadcast(grad * self.b, self.a.shape), unbroadcast(grad * self.a, self.b.shape)


class Sigmoid(Function):
    kind = "sigmoid"

    def forward(self, x):
        # tanh form is stable for large |x| and gives exactly 0.5 at 0
        self.out = 0.5 * (1.0 + np.tanh(0.5 * x))
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Tanh(Function):
    kind = "tanh"

    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out ** 2),)


class LeakyReLU(Function):
    kind = "leaky_relu"

    def __init__(self, slope: float):
        if not 0.0 < slope < 1.0:
            raise ValueError("leaky_relu slope must lie in (0, 1), got {}".format(slope))
        self.slope = slope

    def forward(self, x):
        self.positive = x > 0
        return np.where(self.positive, x, self.slope * x)

    def backward(self, grad):
        return (np.where(self.positive, grad, self.slope * grad),)


class Exp(Function):
    kind = "exp"

    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    kind = "log"

    def forward(self, x):
        if np.any(x <= 0):
            raise DomainError("log: non-positive input (min {})".format(float(np.min(x))))
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class L2Normalize(Function):
    kind = "l2_normalize"

    def forward(self, x):
        norm = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
        if np.any(norm <= NORM_EPS):
            raise DegenerateInputError("l2_normalize: vector norm below {}".format(NORM_EPS))
        self.norm = norm
        self.out = x / norm
        return self.out

    def backward(self, grad):
        radial = np.sum(grad * self.out, axis=-1, keepdims=True)
        return ((grad - self.out * radial) / self.norm,)


class ScaledSoftmax(Function):
    kind = "softmax_scaled"

    def __init__(self, tau: float):
        if not tau > 0:
            raise ValueError("softmax tau must be positive, got {}".format(tau))
        self.tau = tau

    def forward(self, x):
        if x.shape[-1] < 1:
            raise DimensionError("softmax over an empty axis")
        z = self.tau * x
        z = z - np.max(z, axis=-1, keepdims=True)
        e = np.exp(z)
        self.out = e / np.sum(e, axis=-1, keepdims=True)
        return self.out

    def backward(self, grad):
        inner = np.sum(grad * self.out, axis=-1, keepdims=True)
        return (self.tau * self.out * (grad - inner),)


class Concat(Function):
    kind = "concat"

    def __init__(self, axis: int):
        self.axis = axis

    def forward(self, *parts):
        self.sizes = [p.shape[self.axis] for p in parts]
        try:
            return np.concatenate(parts, axis=self.axis)
        except ValueError:
            raise DimensionError("concat: incompatible shapes {}".format([p.shape for p in parts])) from None

    def backward(self, grad):
        cuts = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, cuts, axis=self.axis))


class Gather(Function):
    kind = "gather"

    def __init__(self, indices: Sequence[int]):
        self.indices = np.asarray(indices, dtype=np.int64)

    def forward(self, x):
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= x.shape[0]):
            raise IndexError("gather: index out of range for {} rows".format(x.shape[0]))
        self.shape = x.shape
        return x[self.indices]

    def backward(self, grad):
        out = np.zeros(self.shape)
        np.add.at(out, self.indices, grad)
        return (out,)


class Sum(Function):
    kind = "sum"

    def __init__(self, axis: Optional[int] = None, keepdims: bool = False):
        self.axis = axis
        self.keepdims = keepdims

    def forward(self, x):
        self.shape = x.shape
        return np.sum(x, axis=self.axis, keepdims=self.keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Transpose(Function):
    kind = "transpose"

    def forward(self, x):
        return x.T

    def backward(self, grad):
        return (grad.T,)


class Reshape(Function):
    kind = "reshape"

    def __init__(self, shape: tuple[int, ...]):
        self.shape = shape

    def forward(self, x):
        self.original = x.shape
        return x.reshape(self.shape)

    def backward(self, grad):
        return (grad.reshape(self.original),)


def matmul(a: Operand, b: Operand) -> Tensor:
    return _apply(MatMul(), a, b)


def add(a: Operand, b: Operand) -> Tensor:
    return _apply(Add(), a, b)


def sub(a: Operand, b: Operand) -> Tensor:
    return _apply(Sub(), a, b)


def mul(a: Operand, b: Operand) -> Tensor:
    return _apply(Mul(), a, b)


def sigmoid(x: Operand) -> Tensor:
    return _apply(Sigmoid(), x)


def tanh(x: Operand) -> Tensor:
    return _apply(Tanh(), x)


def leaky_relu(x: Operand, slope: float = LEAKY_SLOPE) -> Tensor:
    return _apply(LeakyReLU(slope), x)


def exp(x: Operand) -> Tensor:
    return _apply(Exp(), x)


def log(x: Operand) -> Tensor:
    return _apply(Log(), x)


def l2_normalize(x: Operand) -> Tensor:
    """Unit-normalize along the last axis (each row of a matrix)."""
    return _apply(L2Normalize(), x)


def softmax_scaled(logits: Operand, tau: float = 1.0) -> Tensor:
    """exp(tau * x_j) / sum_k exp(tau * x_k) along the last axis, max-shifted."""
    return _apply(ScaledSoftmax(tau), logits)


def concat(parts: Sequence[Operand], axis: int = -1) -> Tensor:
    return _apply(Concat(axis), *parts)


def gather(x: Operand, indices: Sequence[int]) -> Tensor:
    return _apply(Gather(indices), x)


def sum(x: Operand, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return _apply(Sum(axis, keepdims), x)


def mean(x: Operand, axis: int = 0, keepdims: bool = True) -> Tensor:
    x = constant(x)
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / x.shape[axis])


def transpose(x: Operand) -> Tensor:
    return _apply(Transpose(), x)


def reshape(x: Operand, shape: tuple[int, ...]) -> Tensor:
    return _apply(Reshape(shape), x)


def linear(x: Operand, weight: Operand, bias: Optional[Operand] = None) -> Tensor:
    """Affine map of row vectors: x W^T + b, with W stored as [out, in]."""
    out = matmul(x, transpose(weight))
    return out if bias is None else add(out, bias)


def blend(a: Operand, b: Operand, gate: Operand) -> Tensor:
    """(1 - g) * a + g * b, written as a + g * (b - a) so equal inputs pass through exactly."""
    return add(a, mul(gate, sub(b, a)))
