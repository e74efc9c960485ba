"""BRS layouts: one global [CLS] before the dialogue, one relation token per argument pair.

Every layout keeps ``len == 2 + T' + sum(|E_s| + |E_o| + 2)`` where ``T'`` is the
kept part of the dialogue. The variants differ only in where the relation
token sits::

    standard  [CLS] X [SEP] | E_s [CLS] E_o [SEP] ...
    v2        [CLS] X       | [CLS] E_s [SEP] E_o ... [SEP]
    v3        [CLS] X [SEP] | E_s [SEP] E_o [CLS] ...
    single    standard with exactly one pair
    sep_pair  [CLS] X [SEP] | E_s [SEP] E_o [SEP]       (relation read at the middle [SEP])
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from errors import ContractError

from .vocab import CLS, PAD_ID, SEP, Vocab, build_vocab

logger = logging.getLogger(__name__)

EntityPair = tuple[Sequence[str], Sequence[str]]


class BrsVariant(str, Enum):
    STANDARD = 'standard'
    V2 = 'v2'
    V3 = 'v3'
    SINGLE_RELATION = 'single'
    SEP_PAIR = 'sep_pair'

    @property
    def single_pair(self) -> bool:
        return self in (BrsVariant.SINGLE_RELATION, BrsVariant.SEP_PAIR)


@dataclass(frozen=True)
class BrsSequence:
    tokens: tuple[str, ...]
    token_ids: tuple[int, ...]
    relation_cls_pos: tuple[int, ...]
    segment_ids: tuple[int, ...]
    truncated: bool
    global_cls_pos: int = 0

    @property
    def attention_len(self) -> int:
        return len(self.token_ids)

    @property
    def num_relations(self) -> int:
        return len(self.relation_cls_pos)

    def __len__(self) -> int:
        return len(self.token_ids)


def _head(variant: BrsVariant, text: list[str]) -> list[str]:
    if variant is BrsVariant.V2:
        return [CLS, *text]
    return [CLS, *text, SEP]


def _pair(variant: BrsVariant, subject: Sequence[str], obj: Sequence[str]) -> tuple[list[str], int]:
    """Tokens of one pair segment and the offset of its relation token inside it."""
    s, o = list(subject), list(obj)
    if variant is BrsVariant.V2:
        return [CLS, *s, SEP, *o], 0
    if variant is BrsVariant.V3:
        return [*s, SEP, *o, CLS], len(s) + len(o) + 1
    if variant is BrsVariant.SEP_PAIR:
        return [*s, SEP, *o, SEP], len(s)
    return [*s, CLS, *o, SEP], len(s)


def build_brs(dialogue_tokens: Sequence[str],
              pairs: Sequence[EntityPair],
              variant: BrsVariant = BrsVariant.STANDARD,
              max_seq_len: int = 256,
              *,
              vocab: Vocab | None = None) -> BrsSequence:
    variant = BrsVariant(variant)
    if not pairs:
        raise ContractError('build_brs: pair list is empty')
    if variant.single_pair and len(pairs) != 1:
        raise ContractError(f'build_brs: variant {variant.value} takes exactly one pair, got {len(pairs)}')
    for i, (subject, obj) in enumerate(pairs):
        if not subject or not obj:
            raise ContractError(f'build_brs: pair {i} has an empty entity')

    segments = [_pair(variant, s, o) for s, o in pairs]
    tail_len = sum(len(seg) for seg, _ in segments) + (1 if variant is BrsVariant.V2 else 0)
    fixed = len(_head(variant, [])) + tail_len
    room = max_seq_len - fixed
    if room < 0:
        raise ContractError(f'build_brs: entity tail needs {fixed} positions but max_seq_len is {max_seq_len}')

    text = list(dialogue_tokens)
    truncated = len(text) > room
    if truncated:
        text = text[:room]

    head = _head(variant, text)
    tokens = list(head)
    positions = []
    for seg, offset in segments:
        positions.append(len(tokens) + offset)
        tokens.extend(seg)
    if variant is BrsVariant.V2:
        tokens.append(SEP)

    if vocab is None:
        vocab = build_vocab([tokens], max_size=len(set(tokens)) + 4)
    segment_ids = [0] * len(head) + [1] * (len(tokens) - len(head))
    return BrsSequence(tokens=tuple(tokens),
                       token_ids=tuple(vocab.encode(tokens)),
                       relation_cls_pos=tuple(positions),
                       segment_ids=tuple(segment_ids),
                       truncated=truncated)


class PaddedBatch(NamedTuple):
    ids: np.ndarray
    segments: np.ndarray
    mask: np.ndarray


def pad_batch(sequences: Sequence[BrsSequence], max_len: int | None = None) -> PaddedBatch:
    """Right-pad with [PAD]; ``mask`` is 1 on real tokens."""
    if not sequences:
        raise ContractError('pad_batch: no sequences')
    longest = max(len(s) for s in sequences)
    if max_len is None:
        max_len = longest
    if longest > max_len:
        raise ContractError(f'pad_batch: sequence of length {longest} exceeds max_len {max_len}')

    ids = np.full((len(sequences), max_len), PAD_ID, dtype=np.int64)
    segments = np.zeros((len(sequences), max_len), dtype=np.int64)
    mask = np.zeros((len(sequences), max_len), dtype=np.float64)
    for row, seq in enumerate(sequences):
        n = len(seq)
        ids[row, :n] = seq.token_ids
        segments[row, :n] = seq.segment_ids
        mask[row, :n] = 1.0
    return PaddedBatch(ids, segments, mask)


def brs_record(seq: BrsSequence, variant: BrsVariant | str, **extra) -> dict:
    """One ``dump-brs`` line."""
    return {
        'tokens': list(seq.tokens),
        'variant': BrsVariant(variant).value,
        'relation_cls_pos': list(seq.relation_cls_pos),
        'truncated': seq.truncated,
        **extra,
    }
