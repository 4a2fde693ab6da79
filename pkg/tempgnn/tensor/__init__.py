from tempgnn.tensor.tensor import Function, Gradients, Tape, Tensor, constant
from tempgnn.tensor.gradcheck import grad_check

__all__ = ["Function", "Gradients", "Tape", "Tensor", "constant", "grad_check"]
