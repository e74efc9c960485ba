import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from tqdm import tqdm

import numeric_core as nc
from data_io import DialogueExample, LabelMap, builtin_labels, load_examples
from errors import ContractError
from utils import append_jsonl, ensure_dir

from .batching import build_training_vocab, encode_examples, make_batches
from .config import RunConfig
from .evaluate import EvalReport, evaluate_model
from .model import DROPOUT_STREAM, SHUFFLE_STREAM, RelGateModel

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    model: RelGateModel
    metrics: list[dict[str, Any]]
    best_path: Path
    last_path: Path
    best_report: EvalReport
    epoch_seconds: list[float] = field(default_factory=list)

    @property
    def checkpoint(self) -> nc.ModelCheckpoint:
        return nc.load_checkpoint(self.best_path)


def initial_labels(config: RunConfig) -> LabelMap | None:
    return None if config.label_set == 'data' else builtin_labels(config.label_set)


def load_split(config: RunConfig, key: str, labels: LabelMap | None) -> tuple[list[DialogueExample], LabelMap]:
    path = config.require_path(key)
    examples, labels, stats = load_examples(path, config.data_format, labels, config.schema_keys, config.tokenizer)
    logger.info('%s: %d dialogues, %d relations (%d items skipped)', path, stats.loaded_items,
                stats.loaded_relations, stats.skipped_items)
    return examples, labels


def train(config: RunConfig,
          train_examples: Sequence[DialogueExample] | None = None,
          labels: LabelMap | None = None,
          dev_examples: Sequence[DialogueExample] | None = None,
          show_progress: bool = False) -> TrainResult:
    """Train with Adam, checkpoint every epoch, keep the best dev micro-F1 as ``best.rgt``."""
    if train_examples is None:
        train_examples, labels = load_split(config, 'train_path', labels or initial_labels(config))
        if dev_examples is None and config.dev_path is not None:
            dev_examples, _ = load_split(config, 'dev_path', labels)
    if labels is None:
        raise ContractError('train: a label map is required when examples are passed in directly')
    if not train_examples:
        raise ContractError('train: the training corpus is empty')
    if dev_examples is None:
        dev_examples = train_examples

    vocab = build_training_vocab(train_examples, config.vocab_size, config.tokenizer)
    items = encode_examples(train_examples, vocab, config.variant, config.encoder.max_seq_len, config.tokenizer)
    model = RelGateModel(config, vocab, labels)
    params = model.named_parameters()
    state = nc.AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, epsilon=config.adam_eps)

    out_dir = ensure_dir(config.out_dir)
    metrics_path = out_dir / 'metrics.jsonl'
    metrics_path.unlink(missing_ok=True)
    logger.info('training %d parameters on %d sequences (%d dialogues), %d relation types',
                sum(p.data.size for p in params.values()), len(items), len(train_examples), len(labels))

    metrics: list[dict[str, Any]] = []
    best_f1, best_report = -1.0, None
    best_path, last_path = out_dir / 'best.rgt', out_dir / 'last.rgt'
    seconds: list[float] = []

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        batches = make_batches(items, config.batch_size, nc.seeded_rng(config.seed, SHUFFLE_STREAM, epoch))
        model.train()
        total = 0.0
        progress = tqdm(batches, desc=f'epoch {epoch}', disable=not show_progress, leave=False)
        for step, batch in enumerate(progress):
            model.zero_grad()
            with nc.Tape():
                loss, _ = model.loss(batch, nc.seeded_rng(config.seed, DROPOUT_STREAM, epoch, step))
                nc.backward(loss)
            nc.adam_step(params, {name: p.grad for name, p in params.items()}, state)
            total += loss.item()
            progress.set_postfix(loss=f'{loss.item():.4f}')
        elapsed = time.perf_counter() - started
        seconds.append(elapsed)

        report, _ = evaluate_model(model, dev_examples)
        record = {'epoch': epoch, 'loss': total / len(batches), 'precision': report.precision,
                  'recall': report.recall, 'f1': report.f1, 'mean_iterations': report.mean_iterations,
                  'seconds': elapsed}
        metrics.append(record)
        append_jsonl(metrics_path, record)

        model.save(out_dir / f'epoch_{epoch}.rgt', epoch=epoch, dev_f1=report.f1)
        model.save(last_path, epoch=epoch, dev_f1=report.f1)
        if report.f1 > best_f1:
            best_f1, best_report = report.f1, report
            model.save(best_path, epoch=epoch, dev_f1=report.f1)
        logger.info('epoch %d: loss %.4f, dev P %.3f R %.3f F1 %.3f, %.1fs', epoch, record['loss'],
                    report.precision, report.recall, report.f1, elapsed)

    best_report = best_report.model_copy(update={'epoch_seconds': seconds})
    return TrainResult(model=model.eval(), metrics=metrics, best_path=best_path, last_path=last_path,
                       best_report=best_report, epoch_seconds=seconds)
