"""Line-delimited JSON corpus cache.

The first line carries the label map; every other line is one dialogue with
relation names, so the file is readable without the run that wrote it.
"""
import logging
from pathlib import Path
from typing import Sequence

from errors import DataFormatError
from utils import read_jsonl, write_jsonl

from .labels import LabelMap
from .types import DialogueExample, RelationInstance

logger = logging.getLogger(__name__)

CORPUS_FORMAT = 'relgate-corpus/1'


def _relation_record(rel: RelationInstance, labels: LabelMap) -> dict:
    record = {'x': rel.subject, 'y': rel.object, 'r': [labels.name_of(g) for g in rel.gold]}
    if rel.template is not None:
        record['template'] = rel.template
    return record


def corpus_records(examples: Sequence[DialogueExample], labels: LabelMap):
    yield {'format': CORPUS_FORMAT, 'labels': labels.to_dict()}
    for ex in examples:
        yield {'id': ex.dialogue_id,
               'utterances': list(ex.utterances),
               'relations': [_relation_record(r, labels) for r in ex.relations]}


def save_corpus(path: str | Path, examples: Sequence[DialogueExample], labels: LabelMap) -> int:
    count = write_jsonl(path, corpus_records(examples, labels)) - 1
    logger.info('wrote %d dialogues to %s', count, path)
    return count


def load_corpus(path: str | Path) -> tuple[list[DialogueExample], LabelMap]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'Cannot find corpus {path}')
    lines = iter(read_jsonl(path))
    header = next(lines, None)
    if not header or header.get('format') != CORPUS_FORMAT:
        raise DataFormatError(f'{path}: missing {CORPUS_FORMAT} header line')
    labels = LabelMap.from_dict(header['labels'])

    examples = []
    for n, line in enumerate(lines, start=1):
        try:
            relations = [RelationInstance(r['x'], r['y'], tuple(labels.id_of(name) for name in r['r']),
                                          r.get('template'))
                         for r in line['relations']]
            examples.append(DialogueExample(list(line['utterances']), relations, str(line.get('id', n - 1))))
        except KeyError as e:
            raise DataFormatError(f'{path}: line {n + 1} is missing field {e}') from None
    return examples, labels
