"""Numeric core - float64 tensors, tape autodiff, Adam and checkpoints."""

from .checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from .optim import AdamState, adam_step
from .rng import INIT_STD, normal_init, seeded_rng
from .tensor import (BACKWARD_RULES, Tape, TapeEntry, Tensor, add, backward, bce_with_logits, concat,
                     current_tape, dropout, elementwise, gelu, layer_norm, matmul, mean, mul, relu, reshape,
                     scale, set_debug, sigmoid, slice_axis, softmax, softmax_cross_entropy, stack, sub, take,
                     transpose, where)
from .tensor import sum as tensor_sum

__all__ = [
    "AdamState", "BACKWARD_RULES", "INIT_STD", "ModelCheckpoint", "Tape", "TapeEntry", "Tensor",
    "adam_step", "add", "backward", "bce_with_logits", "concat", "current_tape", "dropout",
    "elementwise", "gelu", "layer_norm", "load_checkpoint", "matmul", "mean", "mul", "normal_init",
    "relu", "reshape", "save_checkpoint", "scale", "seeded_rng", "set_debug", "sigmoid", "slice_axis",
    "softmax", "softmax_cross_entropy", "stack", "sub", "take", "tensor_sum", "transpose", "where",
]
