"""Central finite differences against tape gradients, over every encoder and gate tensor.

The configuration is forced tiny with tau = 1 so every relation runs the full
refinement chain and g sits on the differentiated path.
"""
import logging

import numpy as np
from pydantic import BaseModel

import numeric_core as nc
from data_io import generate_synthetic

from .batching import build_training_vocab, encode_examples, make_batches
from .config import RunConfig
from .model import RelGateModel

logger = logging.getLogger(__name__)

TOLERANCE = 1e-5
STEP = 1e-6
# Tensors with smaller gradient norms are compared on absolute error.
NORM_FLOOR = 1e-3

TINY = {
    'hidden': 8, 'layers': 1, 'heads': 2, 'ffn_dim': 16, 'max_seq_len': 64, 'dropout': 0.0, 'init_std': 0.5,
    'tau': 1.0, 'max_refine': 3, 'rrg_enabled': True, 'batch_size': 2, 'ablation': None,
}
TINY_RELATIONS = 4


class TensorCheck(BaseModel):
    name: str
    analytic_norm: float
    numeric_norm: float
    rel_error: float


class GradcheckReport(BaseModel):
    checks: list[TensorCheck]
    seed: int
    max_rel_error: float
    tolerance: float
    passed: bool


def tiny_config(config: RunConfig | None = None) -> RunConfig:
    base = config or RunConfig()
    return base.with_overrides(**TINY)


def gradcheck(config: RunConfig | None = None, seed: int | None = None, step: float = STEP,
              tolerance: float = TOLERANCE) -> GradcheckReport:
    """Central differences over every parameter; ``seed`` falls back to the config's seed."""
    config = tiny_config(config)
    if seed is not None:
        config = config.with_overrides(seed=seed)
    seed = config.seed
    examples, labels = generate_synthetic(seed, num_dialogues=2, num_relation_types=TINY_RELATIONS, max_pairs=2)
    vocab = build_training_vocab(examples, config.vocab_size, config.tokenizer)
    items = encode_examples(examples, vocab, config.variant, config.encoder.max_seq_len, config.tokenizer)
    batch = make_batches(items, len(items))[0]
    model = RelGateModel(config, vocab, labels).eval()
    params = model.named_parameters()

    model.zero_grad()
    with nc.Tape():
        loss, _ = model.loss(batch)
        nc.backward(loss)
    analytic = {name: (p.grad if p.grad is not None else np.zeros_like(p.data)).copy()
                for name, p in params.items()}

    def objective() -> float:
        value, _ = model.loss(batch)
        return value.item()

    checks = []
    for name, p in params.items():
        numeric = np.zeros_like(p.data)
        flat, grad = p.data.reshape(-1), numeric.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = objective()
            flat[i] = original - step
            down = objective()
            flat[i] = original
            grad[i] = (up - down) / (2 * step)
        a_norm, n_norm = float(np.linalg.norm(analytic[name])), float(np.linalg.norm(numeric))
        err = float(np.linalg.norm(analytic[name] - numeric)) / max(a_norm, n_norm, NORM_FLOOR)
        checks.append(TensorCheck(name=name, analytic_norm=a_norm, numeric_norm=n_norm, rel_error=err))
        logger.debug('gradcheck %s: |analytic| %.3e |numeric| %.3e rel %.2e', name, a_norm, n_norm, err)

    worst = max(c.rel_error for c in checks)
    return GradcheckReport(checks=checks, seed=seed, max_rel_error=worst, tolerance=tolerance,
                           passed=worst < tolerance)
