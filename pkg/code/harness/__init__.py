"""Harness module - configuration, training, evaluation, tau sweeps and gradient checks."""

from .batching import Batch, SequenceItem, build_training_vocab, collate, encode_examples, make_batches
from .config import ABLATIONS, RunConfig, load_card, parse_extra_args, resolve_config
from .evaluate import (F1_CONVENTION, PRF, EvalReport, RelationCounts, evaluate, evaluate_model, inference_overrides,
                       micro_f1, summarise, write_eval_report)
from .gradcheck import GradcheckReport, TensorCheck, gradcheck, tiny_config
from .model import RelGateModel
from .sweep import DEFAULT_TAUS, SweepRow, parse_taus, sweep_tau, write_sweep_csv
from .trainer import TrainResult, initial_labels, load_split, train

__all__ = [
    "ABLATIONS", "Batch", "DEFAULT_TAUS", "EvalReport", "F1_CONVENTION", "GradcheckReport", "PRF",
    "RelGateModel", "RelationCounts", "RunConfig", "SequenceItem", "SweepRow", "TensorCheck", "TrainResult",
    "build_training_vocab", "collate", "encode_examples", "evaluate", "evaluate_model", "gradcheck",
    "inference_overrides", "initial_labels", "load_card", "load_split", "make_batches", "micro_f1",
    "parse_extra_args", "parse_taus", "resolve_config", "summarise", "sweep_tau", "tiny_config", "train",
    "write_eval_report", "write_sweep_csv",
]
