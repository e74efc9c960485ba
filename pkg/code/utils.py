import json
import logging
import os
from pathlib import Path
from typing import Any, Iterable, Iterator

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: int | str = logging.INFO) -> None:
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(level=level,
                        format=LOG_FORMAT,
                        handlers=[logging.StreamHandler()],
                        force=True)


def ensure_dir(path: str | Path) -> Path:
    path = Path(path)
    if not os.path.exists(path):
        os.makedirs(path)
    return path


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> int:
    """Write one JSON object per line; returns the number of lines."""
    path = Path(path)
    if path.parent != Path(''):
        ensure_dir(path.parent)
    count = 0
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
            f.write('\n')
            count += 1
    return count


def read_jsonl(path: str | Path) -> Iterator[dict[str, Any]]:
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def append_jsonl(path: str | Path, record: dict[str, Any]) -> None:
    with open(path, 'a', encoding='utf-8') as f:
        f.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
        f.write('\n')
