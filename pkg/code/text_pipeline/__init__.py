"""Text pipeline module - tokenization, vocabulary and BRS construction."""

from .brs import BrsSequence, BrsVariant, PaddedBatch, brs_record, build_brs, pad_batch
from .vocab import (CLS, CLS_ID, PAD, PAD_ID, RESERVED, SEP, SEP_ID, UNK, UNK_ID, Vocab, build_vocab,
                    tokenize)

__all__ = [
    "BrsSequence", "BrsVariant", "CLS", "CLS_ID", "PAD", "PAD_ID", "PaddedBatch", "RESERVED", "SEP",
    "SEP_ID", "UNK", "UNK_ID", "Vocab", "brs_record", "build_brs", "build_vocab", "pad_batch", "tokenize",
]
