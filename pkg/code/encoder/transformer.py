"""Post-LN transformer encoder over BRS batches, built on the numeric core."""
import logging
from dataclasses import dataclass

import numpy as np

import numeric_core as nc
from errors import ContractError, DimensionError
from numeric_core import Tensor

from .config import EncoderConfig

logger = logging.getLogger(__name__)

MASK_BIAS = -1e9


@dataclass
class EncoderOutput:
    hidden_states: Tensor      # [batch, seq, d]
    h0: Tensor                 # [batch, d]
    h_r: Tensor                # [batch, n_max, d]
    h_r_mask: np.ndarray       # [batch, n_max], 1 where a relation exists


def _param(rng: np.random.Generator, shape: tuple[int, ...], std: float, name: str) -> Tensor:
    return Tensor(nc.normal_init(rng, shape, std), requires_grad=True, name=name)


def _const(shape: tuple[int, ...], value: float, name: str) -> Tensor:
    return Tensor(np.full(shape, value), requires_grad=True, name=name)


class Encoder:
    def __init__(self, config: EncoderConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.training = False
        rng = rng if rng is not None else nc.seeded_rng(0)
        d, std = config.hidden, config.init_std

        params: dict[str, Tensor] = {
            'embed.token': _param(rng, (config.vocab_size, d), std, 'embed.token'),
            'embed.position': _param(rng, (config.max_seq_len, d), std, 'embed.position'),
            'embed.segment': _param(rng, (config.type_vocab_size, d), std, 'embed.segment'),
            'embed.ln.gain': _const((d,), 1.0, 'embed.ln.gain'),
            'embed.ln.bias': _const((d,), 0.0, 'embed.ln.bias'),
        }
        for layer in range(config.layers):
            p = f'layer{layer}.'
            for proj in ('q', 'k', 'v', 'o'):
                params[p + f'attn.w{proj}'] = _param(rng, (d, d), std, p + f'attn.w{proj}')
                params[p + f'attn.b{proj}'] = _const((d,), 0.0, p + f'attn.b{proj}')
            params[p + 'ln1.gain'] = _const((d,), 1.0, p + 'ln1.gain')
            params[p + 'ln1.bias'] = _const((d,), 0.0, p + 'ln1.bias')
            params[p + 'ffn.w1'] = _param(rng, (d, config.ffn), std, p + 'ffn.w1')
            params[p + 'ffn.b1'] = _const((config.ffn,), 0.0, p + 'ffn.b1')
            params[p + 'ffn.w2'] = _param(rng, (config.ffn, d), std, p + 'ffn.w2')
            params[p + 'ffn.b2'] = _const((d,), 0.0, p + 'ffn.b2')
            params[p + 'ln2.gain'] = _const((d,), 1.0, p + 'ln2.gain')
            params[p + 'ln2.bias'] = _const((d,), 0.0, p + 'ln2.bias')
        self.params = params

    def named_parameters(self) -> dict[str, Tensor]:
        return dict(self.params)

    def _dropout(self, x: Tensor, rng: np.random.Generator | None) -> Tensor:
        return nc.dropout(x, self.config.dropout, rng, self.training)

    def embed(self, token_ids: np.ndarray, segment_ids: np.ndarray,
              rng: np.random.Generator | None = None) -> Tensor:
        """Token + learned position + segment embeddings, then layer-norm and dropout."""
        token_ids = np.asarray(token_ids, dtype=np.int64)
        segment_ids = np.asarray(segment_ids, dtype=np.int64)
        if token_ids.ndim != 2 or segment_ids.shape != token_ids.shape:
            raise DimensionError(f'embed: ids {token_ids.shape} and segments {segment_ids.shape} must be equal 2-D')
        seq_len = token_ids.shape[1]
        if seq_len > self.config.max_seq_len:
            raise ContractError(f'embed: sequence length {seq_len} exceeds max_seq_len {self.config.max_seq_len}')
        if token_ids.size and (token_ids.min() < 0 or token_ids.max() >= self.config.vocab_size):
            raise ContractError(f'embed: token id outside [0, {self.config.vocab_size})')
        if segment_ids.size and (segment_ids.min() < 0 or segment_ids.max() >= self.config.type_vocab_size):
            raise ContractError(f'embed: segment id outside [0, {self.config.type_vocab_size})')

        p = self.params
        x = nc.take(p['embed.token'], token_ids)
        x = x + nc.take(p['embed.position'], np.arange(seq_len))
        x = x + nc.take(p['embed.segment'], segment_ids)
        x = nc.layer_norm(x, p['embed.ln.gain'], p['embed.ln.bias'])
        return self._dropout(x, rng)

    def self_attention(self, x: Tensor, mask: np.ndarray, layer: int = 0,
                       rng: np.random.Generator | None = None,
                       return_weights: bool = False) -> Tensor | tuple[Tensor, Tensor]:
        """Multi-head attention sublayer with residual and layer-norm.

        ``mask`` is ``[batch, seq]`` with 1 on real tokens; padded keys get a -1e9 bias.
        """
        cfg = self.config
        batch, seq, d = x.shape
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != (batch, seq):
            raise DimensionError(f'self_attention: mask {mask.shape} does not match input {x.shape}')
        p = self.params
        pre = f'layer{layer}.attn.'

        def heads(t: Tensor) -> Tensor:
            t = nc.reshape(t, (batch, seq, cfg.heads, cfg.head_dim))
            return nc.transpose(t, (0, 2, 1, 3))

        q = heads(x @ p[pre + 'wq'] + p[pre + 'bq'])
        k = heads(x @ p[pre + 'wk'] + p[pre + 'bk'])
        v = heads(x @ p[pre + 'wv'] + p[pre + 'bv'])

        scores = nc.scale(q @ nc.transpose(k, (0, 1, 3, 2)), 1.0 / np.sqrt(cfg.head_dim))
        scores = scores + Tensor(((1.0 - mask) * MASK_BIAS)[:, None, None, :])
        weights = nc.softmax(scores, axis=-1)

        ctx = nc.transpose(weights @ v, (0, 2, 1, 3))
        ctx = nc.reshape(ctx, (batch, seq, d))
        out = self._dropout(ctx @ p[pre + 'wo'] + p[pre + 'bo'], rng)
        out = nc.layer_norm(out + x, p[f'layer{layer}.ln1.gain'], p[f'layer{layer}.ln1.bias'])
        if return_weights:
            return out, weights
        return out

    def feed_forward(self, x: Tensor, layer: int = 0, rng: np.random.Generator | None = None) -> Tensor:
        p = self.params
        pre = f'layer{layer}.'
        h = nc.gelu(x @ p[pre + 'ffn.w1'] + p[pre + 'ffn.b1'])
        h = self._dropout(h @ p[pre + 'ffn.w2'] + p[pre + 'ffn.b2'], rng)
        return nc.layer_norm(h + x, p[pre + 'ln2.gain'], p[pre + 'ln2.bias'])

    def encode(self, token_ids: np.ndarray, segment_ids: np.ndarray, mask: np.ndarray,
               relation_pos: np.ndarray, relation_mask: np.ndarray | None = None,
               rng: np.random.Generator | None = None) -> EncoderOutput:
        """Run every block, then gather h0 (position 0) and h_r at ``relation_pos``.

        ``relation_pos`` is ``[batch, n_max]``; unused slots are marked 0 in
        ``relation_mask`` and gather position 0.
        """
        mask = np.asarray(mask, dtype=np.float64)
        relation_pos = np.asarray(relation_pos, dtype=np.int64)
        if relation_mask is None:
            relation_mask = np.ones(relation_pos.shape, dtype=np.float64)
        relation_mask = np.asarray(relation_mask, dtype=np.float64)
        batch, seq = mask.shape
        if relation_pos.ndim != 2 or relation_pos.shape[0] != batch or relation_mask.shape != relation_pos.shape:
            raise DimensionError(f'encode: relation positions {relation_pos.shape} do not fit batch {batch}')

        lengths = mask.sum(axis=1).astype(np.int64)
        live = relation_mask > 0
        bad = live & ((relation_pos < 0) | (relation_pos >= lengths[:, None]))
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise ContractError(f'encode: relation position {relation_pos[row, col]} of row {row} '
                                f'is outside its {lengths[row]} real tokens')

        x = self.embed(token_ids, segment_ids, rng)
        for layer in range(self.config.layers):
            x = self.self_attention(x, mask, layer, rng)
            x = self.feed_forward(x, layer, rng)

        flat = nc.reshape(x, (batch * seq, self.config.hidden))
        offsets = np.arange(batch) * seq
        h0 = nc.take(flat, offsets)
        gather = np.where(live, relation_pos, 0) + offsets[:, None]
        h_r = nc.take(flat, gather)
        return EncoderOutput(hidden_states=x, h0=h0, h_r=h_r, h_r_mask=relation_mask)
