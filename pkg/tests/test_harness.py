import csv
from collections import Counter

import numpy as np
import pytest

from conftest import SMALL
from data_io import LabelMap, generate_synthetic, save_corpus
from errors import ConfigError, ContractError
from harness import (RunConfig, evaluate, evaluate_model, gradcheck, parse_extra_args, resolve_config, sweep_tau,
                     train, write_sweep_csv)
from harness.batching import build_training_vocab, encode_examples
from harness.model import RelGateModel
from numeric_core import BACKWARD_RULES, load_checkpoint
from rrg_head import Task
from text_pipeline import BrsVariant
from utils import read_jsonl


def without_timing(metrics):
    return [{k: v for k, v in m.items() if k != 'seconds'} for m in metrics]


# --- configuration ----------------------------------------------------------------

def test_defaults():
    config = RunConfig()
    assert (config.batch_size, config.epochs, config.lr, config.seed) == (6, 20, 3e-4, 42)
    assert (config.gate.tau, config.gate.max_refine, config.encoder.hidden) == (0.6, 3, 64)


def test_card_then_env_then_flags(tmp_path):
    card = tmp_path / 'card.toml'
    card.write_text('hidden = 32\nheads = 2\ntau = 0.4\nseed = 1\nepochs = 3\n', encoding='utf-8')
    config = resolve_config(card, {'tau': '0.8', 'epochs': '5'}, environ={'RELGATE_SEED': '99'})
    assert config.encoder.hidden == 32
    assert config.gate.tau == 0.8
    assert config.epochs == 5
    assert config.seed == 99


def test_flags_beat_env_seed():
    config = resolve_config(None, {'seed': '3'}, environ={'RELGATE_SEED': '99'})
    assert config.seed == 3


def test_bad_env_seed_is_ignored():
    assert resolve_config(None, {}, environ={'RELGATE_SEED': 'abc'}).seed == 42


@pytest.mark.parametrize('flat', [{'tau': 1.5}, {'hidden': 10, 'heads': 4}, {'batch_size': 0},
                                  {'no_such_key': 1}, {'ablation': 'no_gate'}, {'max_refine': -1}])
def test_invalid_settings_are_config_errors(flat):
    with pytest.raises(ConfigError):
        RunConfig.from_flat(flat)


def test_nested_cards_are_rejected(tmp_path):
    card = tmp_path / 'card.toml'
    card.write_text('[encoder]\nhidden = 32\n', encoding='utf-8')
    with pytest.raises(ConfigError):
        resolve_config(card, environ={})


def test_parse_extra_args():
    assert parse_extra_args(['--tau', '0.3', '--train-path=x.json', '--share-confidence-head']) == {
        'tau': '0.3', 'train_path': 'x.json', 'share_confidence_head': 'true'}
    with pytest.raises(ConfigError):
        parse_extra_args(['tau'])


def test_ablation_presets():
    assert RunConfig.from_flat({'ablation': 'no_rrg'}).gate.rrg_enabled is False
    assert RunConfig.from_flat({'ablation': 'no_brs'}).variant is BrsVariant.SINGLE_RELATION
    assert RunConfig.from_flat({'ablation': 'brs_v3'}).variant is BrsVariant.V3


def test_flat_round_trip():
    config = RunConfig.from_flat({'task': 'sentence', 'hidden': 32, 'heads': 2, 'tau': 0.7})
    again = RunConfig.from_flat(config.to_flat())
    assert again == config
    assert again.gate.task is Task.SENTENCE_SINGLE_LABEL


def test_require_path(tmp_path):
    config = RunConfig(train_path=tmp_path / 'absent.jsonl')
    with pytest.raises(ConfigError, match='does not exist'):
        config.require_path('train_path')
    with pytest.raises(ConfigError, match='not set'):
        config.require_path('test_path')


# --- training ---------------------------------------------------------------------

def test_training_is_deterministic(tmp_path, small_corpus):
    examples, labels = small_corpus
    base = RunConfig.from_flat({**SMALL, 'epochs': 1})
    first = train(base.with_overrides(out_dir=str(tmp_path / 'a')), examples, labels)
    second = train(base.with_overrides(out_dir=str(tmp_path / 'b')), examples, labels)
    assert without_timing(first.metrics) == without_timing(second.metrics)
    a, b = first.model.state_dict(), second.model.state_dict()
    assert all(a[k].tobytes() == b[k].tobytes() for k in a)


def test_train_and_eval_files_are_byte_identical(tmp_path, small_config, small_corpus):
    examples, labels = small_corpus
    split = tmp_path / 'dev.jsonl'
    save_corpus(split, examples, labels)

    def run():
        result = train(small_config, examples, labels, dev_examples=examples)
        report_path = tmp_path / 'report.jsonl'
        evaluate(result.best_path, split, small_config, report_path)
        return result.best_path.read_bytes(), report_path.read_bytes()

    first_checkpoint, first_report = run()
    second_checkpoint, second_report = run()
    assert first_checkpoint == second_checkpoint
    assert first_report == second_report


def test_training_writes_checkpoints_and_metrics(small_config, small_corpus):
    examples, labels = small_corpus
    result = train(small_config, examples, labels)
    out = small_config.out_dir
    assert {p.name for p in out.iterdir()} >= {'epoch_1.rgt', 'epoch_2.rgt', 'last.rgt', 'best.rgt', 'metrics.jsonl'}
    lines = list(read_jsonl(out / 'metrics.jsonl'))
    assert [m['epoch'] for m in lines] == [1, 2]
    assert set(lines[0]) == {'epoch', 'loss', 'precision', 'recall', 'f1', 'mean_iterations', 'seconds'}
    assert len(result.best_report.epoch_seconds) == 2
    assert result.checkpoint.metadata['labels'] == labels.to_dict()


def test_loss_goes_down(small_config, small_corpus):
    examples, labels = small_corpus
    result = train(small_config.with_overrides(epochs=5), examples, labels)
    assert result.metrics[-1]['loss'] < result.metrics[0]['loss']


@pytest.mark.parametrize('ablation', ['no_rrg', 'no_brs', 'brs_v2', 'brs_v3'])
def test_ablations_train_and_reload(small_config, small_corpus, ablation):
    examples, labels = small_corpus
    result = train(small_config.with_overrides(ablation=ablation, epochs=1), examples, labels)
    model = RelGateModel.load(result.best_path)
    assert model.config.ablation == ablation
    report, decisions = evaluate_model(model, examples)
    assert report.num_decisions == sum(len(e.relations) for e in examples)
    if ablation == 'no_rrg':
        assert all(d['trace']['iterations_used'] == 0 for d in decisions)


def test_empty_corpus_is_rejected(small_config, small_corpus):
    _, labels = small_corpus
    with pytest.raises(ContractError):
        train(small_config, [], labels)


def test_train_from_corpus_file(tmp_path, small_corpus):
    examples, labels = small_corpus
    save_corpus(tmp_path / 'train.jsonl', examples, labels)
    config = RunConfig.from_flat({**SMALL, 'epochs': 1, 'train_path': str(tmp_path / 'train.jsonl'),
                                  'out_dir': str(tmp_path / 'run')})
    result = train(config)
    assert result.model.labels == labels


@pytest.mark.slow
def test_overfits_a_small_synthetic_corpus(tmp_path):
    examples, labels = generate_synthetic(7, num_dialogues=50, num_relation_types=6, max_pairs=3)
    config = RunConfig.from_flat({'epochs': 30, 'out_dir': str(tmp_path / 'run')})
    result = train(config, examples, labels)
    assert result.best_report.f1 >= 0.95
    assert sum(result.epoch_seconds) < 300


# --- evaluation -------------------------------------------------------------------

@pytest.fixture
def trained(small_config, small_corpus):
    examples, labels = small_corpus
    return train(small_config, examples, labels), examples, labels


def test_each_relation_gets_one_decision(trained):
    result, examples, _ = trained
    _, decisions = evaluate_model(result.model, examples)
    per_dialogue = Counter(d['dialogue'] for d in decisions)
    assert per_dialogue == Counter({e.dialogue_id: len(e.relations) for e in examples})
    assert len({(d['dialogue'], d['pair']) for d in decisions}) == len(decisions)


def test_worker_threads_match_single_thread(trained):
    result, examples, _ = trained
    single, single_decisions = evaluate_model(result.model.with_gate(), examples, workers=1)
    threaded, threaded_decisions = evaluate_model(result.model.with_gate(), examples, workers=3)
    assert single == threaded
    assert single_decisions == threaded_decisions


def test_evaluate_writes_report_and_leaves_checkpoint(tmp_path, trained):
    result, examples, labels = trained
    split = tmp_path / 'dev.jsonl'
    save_corpus(split, examples, labels)
    before = result.best_path.read_bytes()
    report_path = tmp_path / 'report.jsonl'
    first = evaluate(result.best_path, split, RunConfig(), report_path)
    second = evaluate(result.best_path, split, RunConfig())
    assert first == second
    assert result.best_path.read_bytes() == before

    lines = list(read_jsonl(report_path))
    assert lines[0]['type'] == 'header' and 'micro-F1' in lines[0]['convention']
    assert lines[-1]['type'] == 'summary' and lines[-1]['f1'] == first.f1
    assert sum(1 for line in lines if line['type'] == 'decision') == first.num_decisions


def test_evaluate_rejects_foreign_labels(tmp_path, trained):
    result, examples, _ = trained
    split = tmp_path / 'other.jsonl'
    save_corpus(split, examples, LabelMap(('rel_0', 'rel_1', 'rel_2', 'rel_3', 'rel_4')))
    with pytest.raises(ConfigError, match='label map mismatch'):
        evaluate(result.best_path, split, RunConfig())


def test_evaluate_applies_gate_overrides(tmp_path, trained):
    result, examples, labels = trained
    split = tmp_path / 'dev.jsonl'
    save_corpus(split, examples, labels)
    eager = evaluate(result.best_path, split, RunConfig.from_flat({'tau': 0.0}))
    patient = evaluate(result.best_path, split, RunConfig.from_flat({'tau': 1.0, 'max_refine': 2}))
    assert (eager.tau, eager.mean_iterations) == (0.0, 0.0)
    assert (patient.tau, patient.mean_iterations) == (1.0, 2.0)
    assert set(patient.exit_histogram) == {'0', '1', '2'}

    no_gate = evaluate(result.best_path, split, RunConfig.from_flat({'rrg_enabled': False}))
    assert no_gate.tau is None and no_gate.mean_iterations == 0.0
    assert RelGateModel.load(result.best_path).gate_config.tau == 0.6


@pytest.mark.parametrize('flat', [{'variant': 'v2'}, {'representation': 'h0_only'},
                                  {'share_confidence_head': True}])
def test_evaluate_rejects_structural_changes(tmp_path, trained, flat):
    result, examples, labels = trained
    split = tmp_path / 'dev.jsonl'
    save_corpus(split, examples, labels)
    with pytest.raises(ConfigError, match='cannot change at evaluation time'):
        evaluate(result.best_path, split, RunConfig.from_flat(flat))


def test_sweep_bounds_and_monotonicity(tmp_path, trained):
    result, examples, _ = trained
    values = [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0]
    rows = sweep_tau(result.model, examples, values)
    assert [r.tau for r in rows] == values
    assert rows[0].mean_iterations == 0.0
    assert rows[-1].mean_iterations == result.model.gate_config.max_refine
    iterations = [r.mean_iterations for r in rows]
    assert iterations == sorted(iterations)

    path = write_sweep_csv(tmp_path / 'sweep.csv', rows)
    with open(path, newline='', encoding='utf-8') as f:
        table = list(csv.reader(f))
    assert table[0] == ['tau', 'f1', 'mean_iterations']
    assert len(table) == len(values) + 1


def test_sweep_rejects_out_of_range(trained):
    result, examples, _ = trained
    with pytest.raises(ConfigError):
        sweep_tau(result.model, examples, [0.5, 1.2])


def test_sweep_never_changes_the_model(trained):
    result, examples, _ = trained
    before = result.model.state_dict()
    tau = result.model.gate_config.tau
    sweep_tau(result.model, examples, [0.0, 1.0])
    after = result.model.state_dict()
    assert result.model.gate_config.tau == tau
    assert all(np.array_equal(before[k], after[k]) for k in before)


def test_single_pair_variant_expands_dialogues(small_corpus):
    examples, _ = small_corpus
    vocab = build_training_vocab(examples, 100)
    multi = encode_examples(examples, vocab, BrsVariant.STANDARD, 128)
    single = encode_examples(examples, vocab, BrsVariant.SINGLE_RELATION, 128)
    assert len(multi) == len(examples)
    assert len(single) == sum(len(e.relations) for e in examples)


# --- gradient check ---------------------------------------------------------------

def test_gradcheck_passes_and_covers_every_tensor():
    report = gradcheck(seed=0)
    assert report.passed, report.max_rel_error
    names = [c.name for c in report.checks]
    assert len(names) == 5 + 16 + 6
    assert {'embed.token', 'layer0.attn.wq', 'layer0.ffn.w2', 'gate.f.w', 'gate.g.w', 'gate.cls.b'} <= set(names)


def test_gradcheck_catches_a_broken_backward_rule(monkeypatch):
    correct = BACKWARD_RULES['gelu']
    monkeypatch.setitem(BACKWARD_RULES, 'gelu', lambda g, e: tuple(x * 1.1 for x in correct(g, e)))
    report = gradcheck(seed=0)
    assert not report.passed
    assert report.max_rel_error > 1e-3


def test_gradcheck_ignores_ablation_settings():
    report = gradcheck(RunConfig.from_flat({'ablation': 'no_rrg'}), seed=1)
    assert report.passed
    assert any(c.name == 'gate.g.w' and c.analytic_norm > 0 for c in report.checks)


def test_gradcheck_seed_follows_the_config():
    config = resolve_config(None, {}, environ={'RELGATE_SEED': '3'})
    report = gradcheck(config)
    assert report.seed == 3 and report.passed
    assert gradcheck(config, seed=2).seed == 2


def test_checkpoint_metadata_rebuilds_the_model(trained):
    result, _, _ = trained
    checkpoint = load_checkpoint(result.last_path)
    model = RelGateModel.from_checkpoint(checkpoint)
    assert set(model.state_dict()) == set(checkpoint.tensors)
    assert checkpoint.metadata['epoch'] == 2
