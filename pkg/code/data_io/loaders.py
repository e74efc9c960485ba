import logging
from pathlib import Path

from errors import ConfigError

from .corpus import load_corpus
from .dialogre import load_dialogre
from .labels import LabelMap, check_compatible
from .tacred import load_tacred, tacred_to_examples
from .types import DataSchema, DialogueExample, LoadStats

logger = logging.getLogger(__name__)

DATA_FORMATS = ('corpus', 'dialogre', 'tacred')


def load_examples(path: str | Path, data_format: str, labels: LabelMap | None = None,
                  schema: DataSchema | None = None,
                  tokenizer: str = 'word') -> tuple[list[DialogueExample], LabelMap, LoadStats]:
    """Read any supported split into dialogue examples; ``labels=None`` derives the map from the file."""
    if data_format == 'dialogre':
        return load_dialogre(path, labels, schema, tokenizer)
    if data_format == 'tacred':
        records, labels, stats = load_tacred(path, labels, schema, tokenizer)
        return tacred_to_examples(records), labels, stats
    if data_format == 'corpus':
        examples, found = load_corpus(path)
        if labels is not None:
            check_compatible(labels, found, str(path))
        stats = LoadStats(loaded_items=len(examples), loaded_relations=sum(len(e.relations) for e in examples))
        return examples, found, stats
    raise ConfigError(f'unknown data_format {data_format!r}; choose from {DATA_FORMATS}')
