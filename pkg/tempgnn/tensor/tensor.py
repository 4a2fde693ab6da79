import logging
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]


class Function:
    """
    Base class of a differentiable operation.

    ``forward`` receives plain arrays and may keep whatever it needs for the
    backward pass on ``self``; ``backward`` receives dL/d[out] and returns one
    gradient (or None) per input, in input order.
    """

    kind = "function"

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        raise NotImplementedError("Forward pass not implemented for {}".format(self.kind))

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError("Backward pass not implemented for {}".format(self.kind))


class Tensor:
    __slots__ = ("data", "tape", "node_id", "name")

    def __init__(self, data: ArrayLike, tape: Optional["Tape"] = None, node_id: Optional[int] = None,
                 name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape
        self.node_id = node_id
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def tracked(self) -> bool:
        return self.tape is not None

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        label = " name={!r}".format(self.name) if self.name else ""
        return "Tensor(shape={}{})".format(self.shape, label)

    def __add__(self, other):
        from tempgnn.tensor import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from tempgnn.tensor import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from tempgnn.tensor import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from tempgnn.tensor import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from tempgnn.tensor import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from tempgnn.tensor import ops
        return ops.mul(other, self)

    def __matmul__(self, other):
        from tempgnn.tensor import ops
        return ops.matmul(self, other)

    def __neg__(self):
        from tempgnn.tensor import ops
        return ops.mul(self, -1.0)


@dataclass
class TapeNode:
    kind: str
    inputs: tuple[Optional[int], ...]
    function: Optional[Function] = None
    name: Optional[str] = None


class Gradients:

    def __init__(self, tape: "Tape", buffers: dict[int, np.ndarray]):
        self._tape = tape
        self._buffers = buffers

    def wrt(self, tensor: Tensor) -> np.ndarray:
        if tensor.tape is not self._tape or tensor.node_id is None:
            return np.zeros_like(tensor.data)
        grad = self._buffers.get(tensor.node_id)
        if grad is None:
            return np.zeros_like(tensor.data)
        return grad

    def named(self) -> dict[str, np.ndarray]:
        result = {}
        for node_id, node in enumerate(self._tape.nodes):
            if node.kind != "leaf" or node.name is None:
                continue
            grad = self._buffers.get(node_id)
            result[node.name] = grad if grad is not None else np.zeros_like(self._tape.value(node_id))
        return result


@dataclass
class Tape:
    """
    Append-only record of one dynamic computation.

    Nodes are appended as operations run, so inputs always precede the node
    that consumes them; ``backward`` walks the list once in reverse.
    """

    nodes: list[TapeNode] = field(default_factory=list)
    _values: list[np.ndarray] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def value(self, node_id: int) -> np.ndarray:
        return self._values[node_id]

    def leaf(self, data: ArrayLike, name: Optional[str] = None) -> Tensor:
        tensor = Tensor(data, name=name)
        node_id = self._append(TapeNode("leaf", (), name=name), tensor.data)
        tensor.tape = self
        tensor.node_id = node_id
        return tensor

    def record(self, function: Function, inputs: Sequence[Tensor], out: np.ndarray) -> Tensor:
        input_ids = tuple(t.node_id if t.tape is self else None for t in inputs)
        tensor = Tensor(out)
        tensor.node_id = self._append(TapeNode(function.kind, input_ids, function), tensor.data)
        tensor.tape = self
        return tensor

    def _append(self, node: TapeNode, value: np.ndarray) -> int:
        self.nodes.append(node)
        self._values.append(value)
        return len(self.nodes) - 1

    def backward(self, output: Tensor, seed: Optional[ArrayLike] = None) -> Gradients:
        if output.tape is not self or output.node_id is None:
            raise ValueError("output tensor was not recorded on this tape")
        seed_grad = np.ones_like(output.data) if seed is None else np.asarray(seed, dtype=np.float64)
        buffers: dict[int, np.ndarray] = {output.node_id: seed_grad}

        for node_id in range(output.node_id, -1, -1):
            grad = buffers.get(node_id)
            node = self.nodes[node_id]
            if grad is None or node.function is None:
                continue
            input_grads = node.function.backward(grad)
            for input_id, input_grad in zip(node.inputs, input_grads):
                if input_id is None or input_grad is None:
                    continue
                current = buffers.get(input_id)
                buffers[input_id] = input_grad if current is None else current + input_grad
        return Gradients(self, buffers)


def constant(data: Any) -> Tensor:
    if isinstance(data, Tensor):
        return data
    return Tensor(data)
