"""TACRED-schema reader: records with a token list, inclusive entity spans and one relation."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from errors import DataFormatError

from .dialogre import _read_json, check_entities
from .labels import LabelMap
from .types import DataSchema, DialogueExample, LoadStats, RelationInstance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TacredRecord:
    tokens: tuple[str, ...]
    subject_tokens: tuple[str, ...]
    object_tokens: tuple[str, ...]
    instance: RelationInstance


def _span(tokens: list, start, end, index: int, role: str) -> list:
    if not isinstance(start, int) or not isinstance(end, int):
        raise DataFormatError(f'record {index}: {role} span bounds must be integers')
    if start > end:
        raise DataFormatError(f'record {index}: inverted {role} span [{start}, {end}]')
    if start < 0 or end >= len(tokens):
        raise DataFormatError(f'record {index}: {role} span [{start}, {end}] outside {len(tokens)} tokens')
    return tokens[start:end + 1]


def parse_tacred(data, labels: LabelMap | None = None, schema: DataSchema | None = None,
                 tokenizer: str = 'word', source: str = '<memory>') -> tuple[list[TacredRecord], LabelMap, LoadStats]:
    schema = schema or DataSchema()
    if not isinstance(data, list):
        raise DataFormatError(f'{source}: expected a top-level array of records')
    if labels is None:
        names = [str(r.get(schema.tacred_relation_key)) for r in data if isinstance(r, dict)]
        labels = LabelMap.from_names(names, 'no_relation' if 'no_relation' in names else None)

    keys = (schema.tokens_key, schema.subj_start_key, schema.subj_end_key,
            schema.obj_start_key, schema.obj_end_key, schema.tacred_relation_key)
    stats = LoadStats()
    records: list[TacredRecord] = []
    for i, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise DataFormatError(f'{source}: record {i} is not an object')
        missing = [k for k in keys if k not in rec]
        if missing:
            raise DataFormatError(f'{source}: record {i} is missing fields {missing}')
        tokens = [str(t) for t in rec[schema.tokens_key]]
        subject = _span(tokens, rec[schema.subj_start_key], rec[schema.subj_end_key], i, 'subject')
        obj = _span(tokens, rec[schema.obj_start_key], rec[schema.obj_end_key], i, 'object')
        check_entities(i, ' '.join(subject), ' '.join(obj), tokenizer)
        gold = (labels.id_of(str(rec[schema.tacred_relation_key])),)
        instance = RelationInstance(' '.join(subject), ' '.join(obj), gold)
        records.append(TacredRecord(tuple(tokens), tuple(subject), tuple(obj), instance))
        stats.loaded_items += 1
        stats.loaded_relations += 1
    return records, labels, stats


def load_tacred(path: str | Path, labels: LabelMap | None = None, schema: DataSchema | None = None,
                tokenizer: str = 'word') -> tuple[list[TacredRecord], LabelMap, LoadStats]:
    return parse_tacred(_read_json(path), labels, schema, tokenizer, source=str(path))


def tacred_to_examples(records: Iterable[TacredRecord]) -> list[DialogueExample]:
    """One single-utterance example per sentence so the harness treats both tasks alike."""
    return [DialogueExample([' '.join(r.tokens)], [r.instance], dialogue_id=str(i))
            for i, r in enumerate(records)]
