"""RRG head module - confidence gating, refinement of h0 and the classifier heads."""

from .config import GateConfig, Representation, Task
from .gate import (GateParams, GateTrace, confidence, gate_forward, gate_forward_rows, gold_matrix, loss,
                   predict, refine)

__all__ = [
    "GateConfig", "GateParams", "GateTrace", "Representation", "Task", "confidence", "gate_forward",
    "gate_forward_rows", "gold_matrix", "loss", "predict", "refine",
]
