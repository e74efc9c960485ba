"""Data module - DialogRE/TACRED readers, synthetic corpora and label maps."""

from .corpus import load_corpus, save_corpus
from .dialogre import load_dialogre, parse_dialogre
from .labels import (DIALOGRE_RELATIONS, TACRED_RELATIONS, LabelMap, builtin_labels, check_compatible)
from .loaders import DATA_FORMATS, load_examples
from .synthetic import generate_synthetic, label_of_template, synthetic_labels
from .tacred import TacredRecord, load_tacred, parse_tacred, tacred_to_examples
from .types import DataSchema, DialogueExample, LoadStats, RelationInstance

__all__ = [
    "DATA_FORMATS", "DIALOGRE_RELATIONS", "DataSchema", "DialogueExample", "LabelMap", "LoadStats",
    "RelationInstance", "TACRED_RELATIONS", "TacredRecord", "builtin_labels", "check_compatible",
    "generate_synthetic", "label_of_template", "load_corpus", "load_dialogre", "load_examples",
    "load_tacred", "parse_dialogre", "parse_tacred", "save_corpus", "synthetic_labels", "tacred_to_examples",
]
