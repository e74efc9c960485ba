"""Adam with bias correction over named float64 parameters."""
import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from errors import DimensionError

from .tensor import Tensor

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor],
              grads: Mapping[str, np.ndarray | None],
              state: AdamState) -> Mapping[str, Tensor]:
    """Update ``params`` in place; a missing gradient counts as zero."""
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step

    for name, param in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(param.data)
        if g.shape != param.shape:
            raise DimensionError(f'adam: gradient {g.shape} does not match parameter {name!r} {param.shape}')
        if name not in state.m:
            state.m[name] = np.zeros_like(param.data)
            state.v[name] = np.zeros_like(param.data)
        m, v = state.m[name], state.v[name]
        if m.shape != param.shape:
            raise DimensionError(f'adam: moment buffer {m.shape} does not match parameter {name!r} {param.shape}')

        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        param.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)

    return params
