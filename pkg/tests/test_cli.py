import json
import logging

import pytest
from typer.testing import CliRunner

from main import app

runner = CliRunner()


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


TINY_FLAGS = ['--hidden', '16', '--layers', '1', '--heads', '2', '--max-seq-len', '128', '--batch-size', '4']


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / 'synthetic.jsonl'
    result = runner.invoke(app, ['gen-synthetic', '--out', str(path), '--dialogues', '8', '--relations', '3',
                                 '--max-pairs', '2'])
    assert result.exit_code == 0, result.output
    assert 'Wrote 8 synthetic dialogues' in result.output
    return path


def test_dump_brs_prints_one_record_per_sequence(corpus):
    result = runner.invoke(app, ['dump-brs', '--input', str(corpus), '--variant', 'single'])
    assert result.exit_code == 0, result.output
    records = [json.loads(line) for line in result.output.splitlines() if line.startswith('{')]
    assert records
    for record in records:
        assert record['variant'] == 'single'
        assert len(record['relation_cls_pos']) == 1
        assert record['tokens'][record['relation_cls_pos'][0]] == '[CLS]'


def test_train_eval_and_sweep(tmp_path, corpus):
    out = tmp_path / 'run'
    result = runner.invoke(app, ['train', '--train-path', str(corpus), '--out-dir', str(out), '--epochs', '1',
                                 *TINY_FLAGS])
    assert result.exit_code == 0, result.output
    assert (out / 'best.rgt').exists()

    result = runner.invoke(app, ['eval', '--checkpoint', str(out / 'best.rgt'), '--split', str(corpus),
                                 '--report', str(tmp_path / 'report.jsonl')])
    assert result.exit_code == 0, result.output
    assert (tmp_path / 'report.jsonl').exists()

    result = runner.invoke(app, ['sweep-tau', '--checkpoint', str(out / 'best.rgt'), '--split', str(corpus),
                                 '--values', '0,0.5,1', '--out', str(tmp_path / 'sweep.csv')])
    assert result.exit_code == 0, result.output
    assert len((tmp_path / 'sweep.csv').read_text(encoding='utf-8').splitlines()) == 4


def test_missing_train_path_is_fatal():
    result = runner.invoke(app, ['train', '--epochs', '1'])
    assert result.exit_code == 1
    assert 'FATAL ERROR' in result.output


def test_invalid_override_is_fatal(corpus):
    result = runner.invoke(app, ['dump-brs', '--input', str(corpus), '--tau', '2.0'])
    assert result.exit_code == 1
    assert 'FATAL ERROR' in result.output


@pytest.mark.parametrize('flags, expected', [([], 3), (['--seed', '8'], 8)])
def test_gradcheck_seed_comes_from_the_card(tmp_path, monkeypatch, flags, expected):
    import harness
    from harness import GradcheckReport
    seen = {}

    def fake_gradcheck(config, seed=None):
        seen['seed'] = config.seed if seed is None else seed
        return GradcheckReport(checks=[], seed=seen['seed'], max_rel_error=0.0, tolerance=1e-4, passed=True)

    monkeypatch.setattr(harness, 'gradcheck', fake_gradcheck)
    card = tmp_path / 'card.toml'
    card.write_text('seed = 3\n', encoding='utf-8')
    result = runner.invoke(app, ['gradcheck', '--config', str(card), *flags])
    assert result.exit_code == 0, result.output
    assert seen['seed'] == expected
    assert f'seed {expected}' in result.output


def test_config_card(tmp_path, corpus):
    card = tmp_path / 'card.toml'
    card.write_text(f'train_path = "{corpus.as_posix()}"\nvariant = "v2"\n', encoding='utf-8')
    result = runner.invoke(app, ['dump-brs', '--config', str(card)])
    assert result.exit_code == 0, result.output
    assert '"variant": "v2"' in result.output
