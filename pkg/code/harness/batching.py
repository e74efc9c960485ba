"""Dialogues to BRS sequences to padded batches.

A multi-pair variant encodes one sequence per dialogue carrying every pair; the
single-pair variants expand a dialogue into one sequence per pair.
"""
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from data_io import DialogueExample
from text_pipeline import BrsSequence, BrsVariant, Vocab, build_brs, build_vocab, pad_batch, tokenize

PairKey = tuple[str, int]


@dataclass(frozen=True)
class SequenceItem:
    seq: BrsSequence
    gold: tuple[tuple[int, ...], ...]
    pair_keys: tuple[PairKey, ...]
    pairs: tuple[tuple[str, str], ...]


@dataclass
class Batch:
    ids: np.ndarray            # [B, S]
    segments: np.ndarray       # [B, S]
    mask: np.ndarray           # [B, S]
    relation_pos: np.ndarray   # [B, n_max]
    relation_mask: np.ndarray  # [B, n_max]
    row_of: np.ndarray         # [N] sequence index of each relation
    slot_of: np.ndarray        # [N] flat index into [B * n_max]
    gold: list[tuple[int, ...]]
    pair_keys: list[PairKey]
    pairs: list[tuple[str, str]]

    @property
    def num_relations(self) -> int:
        return len(self.gold)


def vocab_streams(examples: Iterable[DialogueExample], tokenizer: str = 'word') -> Iterable[list[str]]:
    for ex in examples:
        yield tokenize(ex.text, tokenizer)
        for rel in ex.relations:
            yield tokenize(rel.subject, tokenizer) + tokenize(rel.object, tokenizer)


def build_training_vocab(examples: Sequence[DialogueExample], max_size: int, tokenizer: str = 'word') -> Vocab:
    return build_vocab(vocab_streams(examples, tokenizer), max_size)


def encode_example(example: DialogueExample, vocab: Vocab, variant: BrsVariant, max_seq_len: int,
                   tokenizer: str = 'word') -> list[SequenceItem]:
    text = tokenize(example.text, tokenizer)
    entities = [(tokenize(r.subject, tokenizer), tokenize(r.object, tokenizer)) for r in example.relations]
    keys = [(example.dialogue_id, i) for i in range(len(example.relations))]
    names = [(r.subject, r.object) for r in example.relations]
    golds = [r.gold for r in example.relations]

    groups = [[i] for i in range(len(entities))] if variant.single_pair else [list(range(len(entities)))]
    items = []
    for group in groups:
        seq = build_brs(text, [entities[i] for i in group], variant, max_seq_len, vocab=vocab)
        items.append(SequenceItem(seq=seq,
                                  gold=tuple(golds[i] for i in group),
                                  pair_keys=tuple(keys[i] for i in group),
                                  pairs=tuple(names[i] for i in group)))
    return items


def encode_examples(examples: Iterable[DialogueExample], vocab: Vocab, variant: BrsVariant, max_seq_len: int,
                    tokenizer: str = 'word') -> list[SequenceItem]:
    items: list[SequenceItem] = []
    for ex in examples:
        items.extend(encode_example(ex, vocab, variant, max_seq_len, tokenizer))
    return items


def collate(items: Sequence[SequenceItem]) -> Batch:
    ids, segments, mask = pad_batch([it.seq for it in items])
    n_max = max(it.seq.num_relations for it in items)
    relation_pos = np.zeros((len(items), n_max), dtype=np.int64)
    relation_mask = np.zeros((len(items), n_max), dtype=np.float64)
    row_of, slot_of = [], []
    gold, keys, pairs = [], [], []
    for b, it in enumerate(items):
        n = it.seq.num_relations
        relation_pos[b, :n] = it.seq.relation_cls_pos
        relation_mask[b, :n] = 1.0
        row_of.extend([b] * n)
        slot_of.extend(b * n_max + i for i in range(n))
        gold.extend(it.gold)
        keys.extend(it.pair_keys)
        pairs.extend(it.pairs)
    return Batch(ids, segments, mask, relation_pos, relation_mask,
                 np.asarray(row_of, dtype=np.int64), np.asarray(slot_of, dtype=np.int64),
                 gold, keys, pairs)


def make_batches(items: Sequence[SequenceItem], batch_size: int,
                 rng: np.random.Generator | None = None) -> list[Batch]:
    """Fixed order without ``rng``; a seeded shuffle with it."""
    order = np.arange(len(items)) if rng is None else rng.permutation(len(items))
    return [collate([items[i] for i in order[start:start + batch_size]])
            for start in range(0, len(items), batch_size)]
