import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from errors import ConfigError, ContractError

logger = logging.getLogger(__name__)

PAD, UNK, CLS, SEP = '[PAD]', '[UNK]', '[CLS]', '[SEP]'
RESERVED = (PAD, UNK, CLS, SEP)
PAD_ID, UNK_ID, CLS_ID, SEP_ID = range(4)
MIN_VOCAB_SIZE = 5


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith('P')


def tokenize(text: str, mode: str = 'word') -> list[str]:
    """Lowercase, split on whitespace, then split punctuation off as single characters.

    ``mode="char"`` emits one token per non-space character (Chinese dialogues).
    """
    text = text.lower()
    if mode == 'char':
        return [ch for ch in text if not ch.isspace()]
    if mode != 'word':
        raise ConfigError(f'unknown tokenizer mode {mode!r}')

    tokens: list[str] = []
    for chunk in text.split():
        word = []
        for ch in chunk:
            if _is_punct(ch):
                if word:
                    tokens.append(''.join(word))
                    word = []
                tokens.append(ch)
            else:
                word.append(ch)
        if word:
            tokens.append(''.join(word))
    return tokens


@dataclass(frozen=True)
class Vocab:
    token_to_id: dict[str, int]

    def __post_init__(self):
        for i, token in enumerate(RESERVED):
            if self.token_to_id.get(token) != i:
                raise ConfigError(f'reserved token {token} must have id {i}')

    @property
    def id_to_token(self) -> list[str]:
        ordered = [''] * len(self.token_to_id)
        for token, i in self.token_to_id.items():
            ordered[i] = token
        return ordered

    def __len__(self) -> int:
        return len(self.token_to_id)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.token_to_id.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        table = self.id_to_token
        return [table[i] for i in ids]

    def to_dict(self) -> dict[str, int]:
        return dict(self.token_to_id)

    @classmethod
    def from_dict(cls, mapping: dict[str, int]) -> 'Vocab':
        return cls({str(k): int(v) for k, v in mapping.items()})


def build_vocab(corpus: Iterable[Sequence[str]], max_size: int) -> Vocab:
    """Reserved ids first, then tokens by descending frequency, ties lexicographic."""
    if max_size < MIN_VOCAB_SIZE:
        raise ConfigError(f'vocab max_size {max_size} leaves no room beyond the {len(RESERVED)} reserved tokens')
    counts: Counter[str] = Counter()
    streams = 0
    for stream in corpus:
        streams += 1
        counts.update(t for t in stream if t not in RESERVED)
    if not counts:
        raise ContractError(f'cannot build a vocabulary from an empty corpus ({streams} streams)')

    mapping = {token: i for i, token in enumerate(RESERVED)}
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    for token, _ in ranked[:max_size - len(RESERVED)]:
        mapping[token] = len(mapping)
    logger.debug('vocabulary: %d of %d distinct tokens kept', len(mapping) - len(RESERVED), len(counts))
    return Vocab(mapping)
