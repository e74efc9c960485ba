"""Micro-F1 evaluation over (pair, relation) tuples, with per-decision gate traces."""
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Hashable, Iterable, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, Field

import rrg_head
from data_io import DialogueExample, LabelMap, check_compatible, load_examples
from errors import ConfigError
from utils import write_jsonl

from .batching import Batch, encode_examples, make_batches
from .config import RunConfig
from .model import RelGateModel

logger = logging.getLogger(__name__)

INFERENCE_GATE_KEYS = ('tau', 'max_refine', 'decision_threshold', 'rrg_enabled')
STRUCTURAL_GATE_KEYS = ('task', 'num_relations', 'share_confidence_head', 'representation')

F1_CONVENTION = ('micro-F1 over predicted vs gold (pair, relation) tuples; the no-relation label is '
                 'excluded from both sides; multi-label decisions keep every class with sigmoid > '
                 'decision_threshold, single-label decisions take the argmax')


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


def micro_f1(predicted: Iterable[Hashable], gold: Iterable[Hashable]) -> PRF:
    """Multiset micro-F1; F1 is 0 when precision + recall is 0."""
    pred, ref = Counter(predicted), Counter(gold)
    tp = sum((pred & ref).values())
    fp = sum(pred.values()) - tp
    fn = sum(ref.values()) - tp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PRF(precision, recall, f1, tp, fp, fn)


class RelationCounts(BaseModel):
    tp: int = 0
    fp: int = 0
    fn: int = 0


class EvalReport(BaseModel):
    precision: float
    recall: float
    f1: float
    per_relation: dict[str, RelationCounts] = Field(default_factory=dict)
    exit_histogram: dict[str, int] = Field(default_factory=dict)
    mean_iterations: float = 0.0
    num_decisions: int = 0
    tau: float | None = None
    epoch_seconds: list[float] = Field(default_factory=list)
    convention: str = F1_CONVENTION


def _decisions_for_batch(model: RelGateModel, batch: Batch) -> list[dict[str, Any]]:
    logits, traces = model.forward(batch)
    predictions = rrg_head.predict(logits, model.gate_config)
    out = []
    for i, trace in enumerate(traces):
        pred = predictions[i]
        pred_ids = sorted(pred) if isinstance(pred, set) else [pred]
        dialogue_id, pair_index = batch.pair_keys[i]
        out.append({
            'dialogue': dialogue_id,
            'pair': pair_index,
            'subject': batch.pairs[i][0],
            'object': batch.pairs[i][1],
            'predicted': pred_ids,
            'gold': list(batch.gold[i]),
            'trace': trace.to_dict(),
        })
    return out


def _run_shard(model: RelGateModel, batches: Sequence[Batch]) -> list[list[dict[str, Any]]]:
    return [_decisions_for_batch(model, b) for b in batches]


def collect_decisions(model: RelGateModel, batches: Sequence[Batch], workers: int = 1) -> list[dict[str, Any]]:
    """One decision per relation, in batch order whatever the worker count."""
    model.eval()
    if workers <= 1 or len(batches) <= 1:
        per_batch = _run_shard(model, batches)
    else:
        workers = min(workers, len(batches))
        shards = [list(range(w, len(batches), workers)) for w in range(workers)]
        replicas = [model.replicate().eval() for _ in shards]
        per_batch: list = [None] * len(batches)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_shard, replica, [batches[i] for i in shard])
                       for replica, shard in zip(replicas, shards)]
            for shard, future in zip(shards, futures):
                for i, decisions in zip(shard, future.result()):
                    per_batch[i] = decisions
    return [d for decisions in per_batch for d in decisions]


def summarise(decisions: Sequence[dict[str, Any]], labels: LabelMap, max_refine: int,
              tau: float | None = None) -> EvalReport:
    excluded = labels.excluded_id
    predicted = [((d['dialogue'], d['pair']), r) for d in decisions for r in d['predicted'] if r != excluded]
    gold = [((d['dialogue'], d['pair']), r) for d in decisions for r in d['gold'] if r != excluded]
    prf = micro_f1(predicted, gold)

    per_relation: dict[str, RelationCounts] = {}
    pred_c, gold_c = Counter(predicted), Counter(gold)
    for r, name in enumerate(labels.names):
        if r == excluded:
            continue
        p = Counter({k: v for k, v in pred_c.items() if k[1] == r})
        g = Counter({k: v for k, v in gold_c.items() if k[1] == r})
        tp = sum((p & g).values())
        if p or g:
            per_relation[name] = RelationCounts(tp=tp, fp=sum(p.values()) - tp, fn=sum(g.values()) - tp)

    iterations = [d['trace']['iterations_used'] for d in decisions]
    histogram = {str(k): iterations.count(k) for k in range(max_refine + 1)}
    return EvalReport(precision=prf.precision, recall=prf.recall, f1=prf.f1,
                      per_relation=per_relation,
                      exit_histogram=histogram,
                      mean_iterations=float(np.mean(iterations)) if iterations else 0.0,
                      num_decisions=len(decisions),
                      tau=tau)


def evaluate_model(model: RelGateModel, examples: Sequence[DialogueExample],
                   workers: int = 1) -> tuple[EvalReport, list[dict[str, Any]]]:
    cfg = model.config
    items = encode_examples(examples, model.vocab, cfg.variant, model.encoder_config.max_seq_len, cfg.tokenizer)
    batches = make_batches(items, cfg.batch_size)
    decisions = collect_decisions(model, batches, workers)
    gate = model.gate_config
    tau = gate.tau if gate.rrg_enabled else None
    return summarise(decisions, model.labels, gate.max_refine, tau), decisions


def write_eval_report(path: str | Path, report: EvalReport, decisions: Sequence[dict[str, Any]],
                      labels: LabelMap) -> Path:
    def lines():
        yield {'type': 'header', 'convention': report.convention, 'labels': list(labels.names),
               'excluded': labels.no_relation}
        for d in decisions:
            yield {'type': 'decision', **d}
        yield {'type': 'summary', **report.model_dump(mode='json', exclude={'convention'})}

    write_jsonl(path, lines())
    return Path(path)


def inference_overrides(model: RelGateModel, config: RunConfig) -> RelGateModel:
    """Apply the gate knobs ``config`` sets explicitly; structural keys must agree with the checkpoint."""
    gate_set = config.gate.model_fields_set
    stored = model.gate_config
    clashes = [k for k in STRUCTURAL_GATE_KEYS if k in gate_set and getattr(config.gate, k) != getattr(stored, k)]
    if 'variant' in config.model_fields_set and config.variant != model.config.variant:
        clashes.append('variant')
    if clashes:
        raise ConfigError(f'{", ".join(clashes)} cannot change at evaluation time; the checkpoint fixes them')

    updates = {k: getattr(config.gate, k) for k in INFERENCE_GATE_KEYS if k in gate_set}
    batch = {'batch_size': config.batch_size} if 'batch_size' in config.model_fields_set else {}
    if not updates and not batch:
        return model
    clone = model.with_gate(**updates)
    clone.config = clone.config.model_copy(update=batch)
    logger.info('evaluation overrides: %s', {**updates, **batch})
    return clone


def evaluate(checkpoint: str | Path, split: str | Path, config: RunConfig,
             report_path: str | Path | None = None) -> EvalReport:
    """Load a checkpoint, score one split; the checkpoint file is only read."""
    model = inference_overrides(RelGateModel.load(checkpoint), config)
    examples, found, _ = load_examples(split, config.data_format,
                                       labels=model.labels if config.data_format != 'corpus' else None,
                                       schema=config.schema_keys, tokenizer=model.config.tokenizer)
    check_compatible(model.labels, found, str(split))
    report, decisions = evaluate_model(model, examples, config.eval_workers)
    if report_path is not None:
        write_eval_report(report_path, report, decisions, model.labels)
        logger.info('eval report written to %s', report_path)
    return report
