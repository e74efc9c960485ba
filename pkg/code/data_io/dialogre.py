"""DialogRE-schema reader: a top-level array of ``[utterances, relations]`` items."""
import json
import logging
from pathlib import Path

from errors import DataFormatError
from text_pipeline import tokenize

from .labels import LabelMap
from .types import DataSchema, DialogueExample, LoadStats, RelationInstance

logger = logging.getLogger(__name__)


def _read_json(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'Cannot find data file {path}')
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataFormatError(f'{path}: malformed JSON ({e})') from None


def check_entities(index: int, subject: str, obj: str, tokenizer: str) -> None:
    for role, text in (('subject', subject), ('object', obj)):
        if not tokenize(text, tokenizer):
            raise DataFormatError(f'dialogue {index}: {role} entity {text!r} is empty after tokenization')


def dialogre_labels(data: list, schema: DataSchema) -> LabelMap:
    """Label map in first-seen order, for ``label_set = "data"``."""
    names = []
    for item in data:
        for rel in item[1]:
            names.extend(rel.get(schema.relation_key, []))
    return LabelMap.from_names(names, 'unanswerable' if 'unanswerable' in names else None)


def parse_dialogre(data, labels: LabelMap | None = None, schema: DataSchema | None = None,
                   tokenizer: str = 'word', source: str = '<memory>') -> tuple[list[DialogueExample], LabelMap, LoadStats]:
    schema = schema or DataSchema()
    if not isinstance(data, list):
        raise DataFormatError(f'{source}: expected a top-level array, got {type(data).__name__}')
    for i, item in enumerate(data):
        if not isinstance(item, list) or len(item) < 2 or not isinstance(item[0], list) or not isinstance(item[1], list):
            raise DataFormatError(f'{source}: item {i} is not [utterances, relations]')
    if labels is None:
        labels = dialogre_labels(data, schema)

    stats = LoadStats()
    examples: list[DialogueExample] = []
    for i, (utterances, relations, *_) in enumerate(data):
        instances = []
        for j, rel in enumerate(relations):
            missing = [k for k in (schema.subject_key, schema.object_key, schema.relation_key) if k not in rel]
            if missing:
                raise DataFormatError(f'{source}: item {i} relation {j} is missing fields {missing}')
            names = rel[schema.relation_key]
            if isinstance(names, str):
                names = [names]
            if not names:
                stats.skip_relation(f'item {i} relation {j}: empty relation list')
                continue
            subject, obj = str(rel[schema.subject_key]), str(rel[schema.object_key])
            check_entities(i, subject, obj, tokenizer)
            gold = tuple(sorted({labels.id_of(n) for n in names}))
            instances.append(RelationInstance(subject, obj, gold))
        if not instances:
            stats.skip_item(f'item {i}: no relation instances')
            continue
        if not utterances:
            raise DataFormatError(f'{source}: item {i} has no utterances')
        examples.append(DialogueExample([str(u) for u in utterances], instances, dialogue_id=str(i)))
        stats.loaded_items += 1
        stats.loaded_relations += len(instances)

    if stats.skipped_items or stats.skipped_relations:
        logger.warning('%s: skipped %d items and %d relations', source, stats.skipped_items, stats.skipped_relations)
    return examples, labels, stats


def load_dialogre(path: str | Path, labels: LabelMap | None = None, schema: DataSchema | None = None,
                  tokenizer: str = 'word') -> tuple[list[DialogueExample], LabelMap, LoadStats]:
    return parse_dialogre(_read_json(path), labels, schema, tokenizer, source=str(path))
