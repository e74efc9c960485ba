import sys
from pathlib import Path

import numpy as np
import pytest

CODE_DIR = Path(__file__).resolve().parent.parent / "code"
if str(CODE_DIR) not in sys.path:
    sys.path.insert(0, str(CODE_DIR))

from data_io import generate_synthetic  # noqa: E402
from harness import RunConfig  # noqa: E402

SMALL = {
    "hidden": 16, "layers": 1, "heads": 2, "max_seq_len": 128, "dropout": 0.1,
    "epochs": 2, "batch_size": 4, "lr": 3e-3, "seed": 11,
}


def numeric_grad(objective, tensor, step=1e-6):
    """Central differences of a scalar objective with respect to ``tensor.data``."""
    grad = np.zeros_like(tensor.data)
    flat, out = tensor.data.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        up = objective()
        flat[i] = original - step
        down = objective()
        flat[i] = original
        out[i] = (up - down) / (2 * step)
    return grad


def rel_error(a, b, floor=1e-12):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), floor))


@pytest.fixture
def small_corpus():
    return generate_synthetic(7, num_dialogues=10, num_relation_types=4, max_pairs=2)


@pytest.fixture
def small_config(tmp_path):
    return RunConfig.from_flat({**SMALL, "out_dir": str(tmp_path / "run")})
