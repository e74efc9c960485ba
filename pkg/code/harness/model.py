"""Encoder + gate, with parameter naming and RGT1 persistence."""
import logging
from pathlib import Path
from typing import Any

import numpy as np

import numeric_core as nc
import rrg_head
from data_io import LabelMap
from encoder import Encoder
from errors import ConfigError
from numeric_core import Tensor
from rrg_head import GateConfig, GateParams, GateTrace
from text_pipeline import Vocab

from .batching import Batch
from .config import RunConfig

logger = logging.getLogger(__name__)

# Sub-stream ids under the run seed.
INIT_STREAM, SHUFFLE_STREAM, DROPOUT_STREAM = 0, 1, 2


class RelGateModel:
    def __init__(self, config: RunConfig, vocab: Vocab, labels: LabelMap):
        self.config = config
        self.vocab = vocab
        self.labels = labels
        self.encoder_config = config.encoder.model_copy(update={'vocab_size': len(vocab)})
        self.gate_config: GateConfig = config.gate.model_copy(update={'num_relations': len(labels),
                                                                      'task': config.task})
        self.encoder = Encoder(self.encoder_config, nc.seeded_rng(config.seed, INIT_STREAM, 0))
        self.gate = GateParams.init(self.gate_config, self.encoder_config.hidden,
                                    nc.seeded_rng(config.seed, INIT_STREAM, 1),
                                    std=self.encoder_config.init_std)

    # --- parameters --------------------------------------------------------------

    def named_parameters(self) -> dict[str, Tensor]:
        return {**self.encoder.named_parameters(), **self.gate.named_parameters()}

    def zero_grad(self) -> None:
        for p in self.named_parameters().values():
            p.zero_grad()

    def train(self) -> 'RelGateModel':
        self.encoder.training = True
        return self

    def eval(self) -> 'RelGateModel':
        self.encoder.training = False
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters().items()}

    def load_state(self, tensors: dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        missing = sorted(set(params) - set(tensors))
        unexpected = sorted(set(tensors) - set(params))
        if missing or unexpected:
            raise ConfigError(f'checkpoint does not fit the model: missing {missing}, unexpected {unexpected}')
        for name, p in params.items():
            if tensors[name].shape != p.shape:
                raise ConfigError(f'checkpoint tensor {name!r} has shape {tensors[name].shape}, model expects {p.shape}')
            p.data = np.array(tensors[name], dtype=np.float64)

    def with_gate(self, **updates: Any) -> 'RelGateModel':
        """Frozen copy with gate settings changed (inference-time knobs such as tau)."""
        clone = self.replicate()
        clone.gate_config = clone.gate_config.model_copy(update=updates)
        return clone

    def replicate(self) -> 'RelGateModel':
        clone = RelGateModel(self.config, self.vocab, self.labels)
        clone.gate_config = self.gate_config
        clone.load_state(self.state_dict())
        clone.encoder.training = self.encoder.training
        return clone

    # --- forward -----------------------------------------------------------------

    def forward(self, batch: Batch, rng: np.random.Generator | None = None,
                with_confidence: bool = False):
        """Logits ``[N, R]`` for every relation in the batch, one trace each."""
        out = self.encoder.encode(batch.ids, batch.segments, batch.mask,
                                  batch.relation_pos, batch.relation_mask, rng)
        d = self.encoder_config.hidden
        h0_rows = nc.take(out.h0, batch.row_of)
        hr_rows = nc.take(nc.reshape(out.h_r, (-1, d)), batch.slot_of)
        return rrg_head.gate_forward_rows(h0_rows, hr_rows, self.gate_config, self.gate, with_confidence)

    def loss(self, batch: Batch, rng: np.random.Generator | None = None) -> tuple[Tensor, list[GateTrace]]:
        logits, traces, f_logits = self.forward(batch, rng, with_confidence=True)
        total = rrg_head.loss(logits, batch.gold, self.gate_config)
        weight = self.gate_config.confidence_weight
        if not self.gate_config.share_confidence_head and weight > 0.0:
            total = total + nc.scale(rrg_head.loss(f_logits, batch.gold, self.gate_config), weight)
        return total, traces

    # --- persistence -------------------------------------------------------------

    def metadata(self, **extra: Any) -> dict[str, Any]:
        return {
            'config': self.config.to_flat(),
            'vocab': self.vocab.to_dict(),
            'labels': self.labels.to_dict(),
            **extra,
        }

    def save(self, path: str | Path, **extra: Any) -> Path:
        return nc.save_checkpoint(path, self.state_dict(), self.metadata(**extra))

    @classmethod
    def from_checkpoint(cls, checkpoint: nc.ModelCheckpoint) -> 'RelGateModel':
        meta = checkpoint.metadata
        try:
            config = RunConfig.from_flat(meta['config'])
            vocab = Vocab.from_dict(meta['vocab'])
            labels = LabelMap.from_dict(meta['labels'])
        except KeyError as e:
            raise ConfigError(f'checkpoint metadata is missing {e}') from None
        model = cls(config, vocab, labels)
        model.load_state(checkpoint.tensors)
        return model.eval()

    @classmethod
    def load(cls, path: str | Path) -> 'RelGateModel':
        return cls.from_checkpoint(nc.load_checkpoint(path))
