from tempgnn.model.params import ModelConfig, ModelParams, param_shapes
from tempgnn.model.tempgnn import ForwardState, TempGNN, TimeEncodings, forward, run_tensors
from tempgnn.model.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ForwardState", "ModelConfig", "ModelParams", "TempGNN", "TimeEncodings", "forward", "load_checkpoint",
    "param_shapes", "run_tensors", "save_checkpoint",
]
