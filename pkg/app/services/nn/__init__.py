from .tape import ComputationTape, backward
from .params import LayerSpec, ParameterStore, init_parameters
from .optim import AdamState, adam_step, clip_grad_norm, clip_grad_norm_by_group
from .checkpoint import load_checkpoint, save_checkpoint
from . import ops

__all__ = [
    "ComputationTape",
    "backward",
    "LayerSpec",
    "ParameterStore",
    "init_parameters",
    "AdamState",
    "adam_step",
    "clip_grad_norm",
    "clip_grad_norm_by_group",
    "load_checkpoint",
    "save_checkpoint",
    "ops",
]
