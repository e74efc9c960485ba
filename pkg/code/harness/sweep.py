import csv
import logging
from pathlib import Path
from typing import NamedTuple, Sequence

from data_io import DialogueExample
from errors import ConfigError

from .evaluate import evaluate_model
from .model import RelGateModel

logger = logging.getLogger(__name__)

DEFAULT_TAUS = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


class SweepRow(NamedTuple):
    tau: float
    f1: float
    mean_iterations: float


def sweep_tau(model: RelGateModel, examples: Sequence[DialogueExample], values: Sequence[float] = DEFAULT_TAUS,
              workers: int = 1) -> list[SweepRow]:
    """Re-evaluate a frozen model at each threshold; the gate is always on."""
    bad = [v for v in values if not 0.0 <= v <= 1.0]
    if bad:
        raise ConfigError(f'tau values must lie in [0, 1], got {bad}')
    rows = []
    for tau in values:
        report, _ = evaluate_model(model.with_gate(tau=float(tau), rrg_enabled=True), examples, workers)
        rows.append(SweepRow(float(tau), report.f1, report.mean_iterations))
        logger.info('tau %.2f: F1 %.4f, mean iterations %.3f', tau, report.f1, report.mean_iterations)
    return rows


def write_sweep_csv(path: str | Path, rows: Sequence[SweepRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(SweepRow._fields)
        for row in rows:
            writer.writerow([f'{row.tau:g}', repr(row.f1), repr(row.mean_iterations)])
    return path


def parse_taus(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigError(f'cannot parse tau list {text!r}') from None
