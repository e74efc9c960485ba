import json
from collections import Counter

import pytest

from data_io import (DIALOGRE_RELATIONS, TACRED_RELATIONS, DataSchema, LabelMap, builtin_labels, check_compatible,
                     generate_synthetic, label_of_template, load_corpus, load_dialogre, load_examples, load_tacred,
                     parse_dialogre, parse_tacred, save_corpus)
from data_io.synthetic import template_cue
from errors import ConfigError, DataFormatError
from text_pipeline import tokenize

FRIENDS_ITEM = [
    [
        "S1: Hey Monica, how was the date?",
        "S2: Richard is amazing, he is the best boyfriend.",
        "S1: Monica and Richard! I knew it.",
    ],
    [
        {"x": "Monica", "y": "S2", "r": ["per:alternate_names"]},
        {"x": "Richard", "y": "Monica", "r": ["per:girl/boyfriend", "per:positive_impression"]},
    ],
]


def write_json(path, payload):
    path.write_text(json.dumps(payload), encoding='utf-8')
    return path


# --- label maps -------------------------------------------------------------------

def test_builtin_label_sizes():
    assert len(builtin_labels('dialogre')) == len(DIALOGRE_RELATIONS) == 36
    assert len(builtin_labels('tacred')) == len(TACRED_RELATIONS) == 42
    assert builtin_labels('tacred').excluded_id == 0
    assert builtin_labels('dialogre').excluded_id == 35


def test_unknown_label_set():
    with pytest.raises(ConfigError):
        builtin_labels('semeval')


def test_label_map_round_trips():
    labels = builtin_labels('dialogre')
    assert all(labels.id_of(labels.name_of(i)) == i for i in range(len(labels)))
    assert LabelMap.from_dict(labels.to_dict()) == labels


def test_label_suffix_resolution():
    labels = builtin_labels('dialogre')
    assert labels.id_of('girl/boyfriend') == labels.id_of('per:girl/boyfriend')
    with pytest.raises(DataFormatError, match='per:frenemy'):
        labels.id_of('per:frenemy')


def test_label_map_rejects_duplicates():
    with pytest.raises(ConfigError):
        LabelMap(('a', 'a'))


def test_check_compatible():
    check_compatible(LabelMap(('a', 'b')), ['a', 'b'], 'here')
    with pytest.raises(ConfigError, match='there'):
        check_compatible(LabelMap(('a', 'b')), ['b', 'a'], 'there')


# --- DialogRE ---------------------------------------------------------------------

def test_dialogre_item_with_two_pairs(tmp_path):
    path = write_json(tmp_path / 'train.json', [FRIENDS_ITEM])
    examples, labels, stats = load_dialogre(path, builtin_labels('dialogre'))
    assert len(examples) == 1
    example = examples[0]
    assert len(example.relations) == 2
    assert example.utterances[0].startswith('S1:')
    first, second = example.relations
    assert (first.subject, first.object) == ('Monica', 'S2')
    assert second.gold == tuple(sorted((labels.id_of('per:girl/boyfriend'), labels.id_of('per:positive_impression'))))
    assert stats.loaded_relations == 2


def test_empty_relation_lists_are_skipped_and_counted(caplog):
    data = [
        FRIENDS_ITEM,
        [["S1: hi"], [{"x": "S1", "y": "S2", "r": []}]],
        [["S1: hi"], []],
    ]
    examples, _, stats = parse_dialogre(data, builtin_labels('dialogre'))
    assert len(examples) == 1
    assert stats.skipped_items == 2
    assert stats.skipped_relations == 1
    assert 'skipped 2 items' in caplog.text


def test_unknown_relation_is_named():
    data = [[["S1: hi"], [{"x": "S1", "y": "S2", "r": ["per:nemesis"]}]]]
    with pytest.raises(DataFormatError, match='per:nemesis'):
        parse_dialogre(data, builtin_labels('dialogre'))


def test_missing_fields_and_bad_json(tmp_path):
    with pytest.raises(DataFormatError, match='missing'):
        parse_dialogre([[["S1: hi"], [{"x": "S1", "r": ["per:boss"]}]]], builtin_labels('dialogre'))
    bad = tmp_path / 'bad.json'
    bad.write_text('[[', encoding='utf-8')
    with pytest.raises(DataFormatError):
        load_dialogre(bad)
    with pytest.raises(FileNotFoundError):
        load_dialogre(tmp_path / 'absent.json')


def test_empty_entity_reports_dialogue_index():
    data = [FRIENDS_ITEM, [["S1: hi"], [{"x": "!!", "y": " ", "r": ["per:boss"]}]]]
    with pytest.raises(DataFormatError, match='dialogue 1'):
        parse_dialogre(data, builtin_labels('dialogre'), tokenizer='char')


def test_labels_derived_from_data_keep_first_seen_order():
    _, labels, _ = parse_dialogre([FRIENDS_ITEM])
    assert labels.names == ('per:alternate_names', 'per:girl/boyfriend', 'per:positive_impression')
    assert labels.no_relation is None


def test_configurable_field_names():
    data = [[["S1: hi"], [{"subj": "S1", "obj": "S2", "rel": ["per:boss"]}]]]
    schema = DataSchema(subject_key='subj', object_key='obj', relation_key='rel')
    examples, _, _ = parse_dialogre(data, builtin_labels('dialogre'), schema)
    assert examples[0].relations[0].subject == 'S1'


def test_corpus_round_trip(tmp_path):
    examples, labels, _ = parse_dialogre([FRIENDS_ITEM], builtin_labels('dialogre'))
    assert save_corpus(tmp_path / 'cache.jsonl', examples, labels) == 1
    loaded, loaded_labels = load_corpus(tmp_path / 'cache.jsonl')
    assert loaded_labels == labels
    assert loaded == examples


def test_corpus_needs_header(tmp_path):
    path = tmp_path / 'plain.jsonl'
    path.write_text('{"id": "0"}\n', encoding='utf-8')
    with pytest.raises(DataFormatError):
        load_corpus(path)


# --- TACRED -----------------------------------------------------------------------

def tacred_record(relation='per:title', subj=(0, 0), obj=(2, 3)):
    return {"token": ["a", "b", "c", "d"], "subj_start": subj[0], "subj_end": subj[1],
            "obj_start": obj[0], "obj_end": obj[1], "relation": relation}


def test_tacred_spans_are_inclusive(tmp_path):
    path = write_json(tmp_path / 'tacred.json', [tacred_record()])
    records, _, _ = load_tacred(path, builtin_labels('tacred'))
    assert records[0].subject_tokens == ('a',)
    assert records[0].object_tokens == ('c', 'd')
    assert records[0].instance.subject == 'a'


@pytest.mark.parametrize('subj, obj', [((1, 0), (2, 3)), ((0, 0), (2, 4)), ((-1, 0), (2, 3))])
def test_tacred_bad_spans(subj, obj):
    with pytest.raises(DataFormatError):
        parse_tacred([tacred_record(subj=subj, obj=obj)], builtin_labels('tacred'))


def test_tacred_no_relation_is_the_excluded_id():
    labels = builtin_labels('tacred')
    records, _, _ = parse_tacred([tacred_record('no_relation')], labels)
    assert records[0].instance.single_label == labels.excluded_id


def test_tacred_through_the_generic_loader(tmp_path):
    path = write_json(tmp_path / 'tacred.json', [tacred_record(), tacred_record('org:founded')])
    examples, labels, stats = load_examples(path, 'tacred', builtin_labels('tacred'))
    assert [len(e.relations) for e in examples] == [1, 1]
    assert examples[0].utterances == ['a b c d']
    assert stats.loaded_items == 2


def test_unknown_data_format(tmp_path):
    with pytest.raises(ConfigError):
        load_examples(tmp_path / 'x', 'csv')


# --- synthetic --------------------------------------------------------------------

def test_synthetic_is_reproducible(tmp_path):
    first = save_corpus(tmp_path / 'a.jsonl', *generate_synthetic(7, 30, 5, 3))
    second = save_corpus(tmp_path / 'b.jsonl', *generate_synthetic(7, 30, 5, 3))
    assert first == second == 30
    assert (tmp_path / 'a.jsonl').read_bytes() == (tmp_path / 'b.jsonl').read_bytes()
    assert generate_synthetic(8, 30, 5, 3)[0] != generate_synthetic(7, 30, 5, 3)[0]


def test_synthetic_labels_follow_templates():
    examples, labels = generate_synthetic(3, 100, 6, 3)
    assert len(labels) == 6
    for example in examples:
        assert 1 <= len(example.relations) <= 3
        entities = [e for r in example.relations for e in (r.subject, r.object)]
        assert len(set(entities)) == len(entities)
        for rel in example.relations:
            assert rel.gold == (label_of_template(rel.template, 6),)
            assert any(rel.subject in u and rel.object in u for u in example.utterances)


def test_synthetic_cues_sit_at_fixed_offsets():
    examples, _ = generate_synthetic(7, 50, 6, 3)
    for example in examples:
        assert len(example.utterances) == len(example.relations) + 1
        assert all(len(tokenize(u)) == 6 for u in example.utterances)
        for p, rel in enumerate(example.relations):
            assert tokenize(example.utterances[p + 1])[2:5] == [rel.subject, template_cue(rel.template), rel.object]


def test_synthetic_label_histogram_is_flat():
    examples, _ = generate_synthetic(11, 1000, 6, 3)
    counts = Counter(r.single_label for e in examples for r in e.relations)
    expected = sum(counts.values()) / 6
    assert len(counts) == 6
    assert all(abs(c - expected) <= 0.1 * expected for c in counts.values())


@pytest.mark.parametrize('args', [(1, 0, 3, 2), (1, 5, 0, 2), (1, 5, 3, 0), (1, 5, 3, 11)])
def test_synthetic_rejects_bad_sizes(args):
    with pytest.raises(ConfigError):
        generate_synthetic(*args)
