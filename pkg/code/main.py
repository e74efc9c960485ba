"""CLI entry point for relgate: train, evaluate and inspect the relation refinement gate."""

import json
import logging
import sys
from pathlib import Path
from typing import Callable, Optional

import typer
from rich.console import Console
from rich.table import Table

CODE_DIR = Path(__file__).parent
if str(CODE_DIR) not in sys.path:
    sys.path.insert(0, str(CODE_DIR))

from errors import RelGateError  # noqa: E402
from utils import setup_logging  # noqa: E402

app = typer.Typer(help="relgate - BRS sequences, relation refinement gate, training and evaluation.")
console = Console()
logger = logging.getLogger('relgate')

OVERRIDES = {"allow_extra_args": True, "ignore_unknown_options": True}
CONFIG_HELP = "Flat TOML config card; any key can also be passed as --key value."


def _config(ctx: typer.Context, card: Optional[Path]):
    from harness import parse_extra_args, resolve_config
    return resolve_config(card, parse_extra_args(ctx.args))


def _run(action: Callable[[], None]) -> None:
    try:
        action()
    except typer.Exit:
        raise
    except RelGateError as e:
        print(f"FATAL ERROR: {e}")
        raise typer.Exit(code=1)
    except FileNotFoundError as e:
        print(f"FATAL ERROR: {e}")
        raise typer.Exit(code=1)
    except Exception as e:
        logger.exception("FATAL ERROR during run: %s", e)
        raise typer.Exit(code=1)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging.")):
    setup_logging(logging.DEBUG if verbose else logging.INFO)


@app.command(context_settings=OVERRIDES)
def train(ctx: typer.Context, config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_HELP)):
    """Train a model and write epoch/last/best checkpoints plus metrics.jsonl."""
    def action():
        from harness import train as run_training
        cfg = _config(ctx, config)
        print(f"Training [{cfg.variant.value}, rrg={'on' if cfg.gate.rrg_enabled else 'off'}] into {cfg.out_dir}...")
        result = run_training(cfg, show_progress=True)

        table = Table(title="Training")
        for column in ("epoch", "loss", "P", "R", "F1", "seconds"):
            table.add_column(column, justify="right")
        for m in result.metrics:
            table.add_row(str(m['epoch']), f"{m['loss']:.4f}", f"{m['precision']:.3f}", f"{m['recall']:.3f}",
                          f"{m['f1']:.3f}", f"{m['seconds']:.1f}")
        console.print(table)
        print(f"Best checkpoint: {result.best_path} (dev F1 {result.best_report.f1:.4f})")
    _run(action)


@app.command("eval", context_settings=OVERRIDES)
def evaluate(ctx: typer.Context,
             checkpoint: Path = typer.Option(..., "--checkpoint", help="RGT1 checkpoint to score."),
             split: Optional[Path] = typer.Option(None, "--split", help="Split file; defaults to test_path."),
             report: Optional[Path] = typer.Option(None, "--report", help="JSON-lines report path."),
             config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_HELP)):
    """Score a checkpoint with micro-F1 and write the JSON-lines report."""
    def action():
        from harness import evaluate as run_eval
        cfg = _config(ctx, config)
        split_path = split or cfg.require_path('test_path')
        report_path = report or Path(cfg.out_dir) / "eval_report.jsonl"
        result = run_eval(checkpoint, split_path, cfg, report_path)

        table = Table(title=f"Evaluation of {checkpoint.name}")
        for column in ("precision", "recall", "F1", "decisions", "mean iterations"):
            table.add_column(column, justify="right")
        table.add_row(f"{result.precision:.4f}", f"{result.recall:.4f}", f"{result.f1:.4f}",
                      str(result.num_decisions), f"{result.mean_iterations:.3f}")
        console.print(table)
        print(f"Report written to {report_path}")
    _run(action)


@app.command("sweep-tau", context_settings=OVERRIDES)
def sweep_tau(ctx: typer.Context,
              checkpoint: Path = typer.Option(..., "--checkpoint"),
              values: str = typer.Option("0.3,0.4,0.5,0.6,0.7,0.8,0.9", "--values", help="Comma-separated taus."),
              out: Path = typer.Option(Path("tau_sweep.csv"), "--out"),
              split: Optional[Path] = typer.Option(None, "--split", help="Defaults to dev_path, then train_path."),
              config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_HELP)):
    """Re-evaluate a frozen checkpoint across thresholds and write tau,f1,mean_iterations CSV."""
    def action():
        from data_io import check_compatible, load_examples
        from harness import RelGateModel, parse_taus, write_sweep_csv
        from harness import sweep_tau as run_sweep
        cfg = _config(ctx, config)
        split_path = split or (cfg.require_path('dev_path') if cfg.dev_path else cfg.require_path('train_path'))
        model = RelGateModel.load(checkpoint)
        labels = None if cfg.data_format == 'corpus' else model.labels
        examples, found, _ = load_examples(split_path, cfg.data_format, labels, cfg.schema_keys, model.config.tokenizer)
        check_compatible(model.labels, found, str(split_path))
        rows = run_sweep(model, examples, parse_taus(values), cfg.eval_workers)
        write_sweep_csv(out, rows)

        table = Table(title="Tau sweep")
        for column in ("tau", "F1", "mean iterations"):
            table.add_column(column, justify="right")
        for row in rows:
            table.add_row(f"{row.tau:g}", f"{row.f1:.4f}", f"{row.mean_iterations:.3f}")
        console.print(table)
        print(f"Sweep written to {out}")
    _run(action)


@app.command("dump-brs", context_settings=OVERRIDES)
def dump_brs(ctx: typer.Context,
             source: Optional[Path] = typer.Option(None, "--input", help="Corpus to dump; defaults to train_path."),
             config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_HELP)):
    """Print one JSON record per BRS instance."""
    def action():
        from data_io import load_examples
        from harness import build_training_vocab, encode_examples
        from harness.trainer import initial_labels
        from text_pipeline import brs_record
        cfg = _config(ctx, config)
        path = source or cfg.require_path('train_path')
        examples, _, _ = load_examples(path, cfg.data_format, initial_labels(cfg), cfg.schema_keys, cfg.tokenizer)
        vocab = build_training_vocab(examples, cfg.vocab_size, cfg.tokenizer)
        for item in encode_examples(examples, vocab, cfg.variant, cfg.encoder.max_seq_len, cfg.tokenizer):
            dialogue = item.pair_keys[0][0]
            print(json.dumps(brs_record(item.seq, cfg.variant, dialogue=dialogue), ensure_ascii=False))
    _run(action)


@app.command(context_settings=OVERRIDES)
def gradcheck(ctx: typer.Context,
              seed: Optional[int] = typer.Option(None, "--seed", help="Defaults to the configured seed."),
              config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_HELP)):
    """Finite-difference check of every parameter tensor on a tiny model."""
    def action():
        from harness import gradcheck as run_gradcheck
        report = run_gradcheck(_config(ctx, config), seed=seed)
        table = Table(title="Gradient check")
        for column in ("tensor", "|analytic|", "|numeric|", "rel. error"):
            table.add_column(column, justify="right")
        for c in report.checks:
            table.add_row(c.name, f"{c.analytic_norm:.3e}", f"{c.numeric_norm:.3e}", f"{c.rel_error:.2e}")
        console.print(table)
        verdict = "PASS" if report.passed else "FAIL"
        print(f"{verdict}: max relative error {report.max_rel_error:.3e} "
              f"(tolerance {report.tolerance:g}, seed {report.seed})")
        if not report.passed:
            raise typer.Exit(code=1)
    _run(action)


@app.command("gen-synthetic")
def gen_synthetic(out: Path = typer.Option(..., "--out"),
                  seed: int = typer.Option(7, "--seed"),
                  dialogues: int = typer.Option(50, "--dialogues"),
                  relations: int = typer.Option(6, "--relations"),
                  max_pairs: int = typer.Option(3, "--max-pairs")):
    """Write a synthetic corpus with known labels."""
    def action():
        from data_io import generate_synthetic, save_corpus
        examples, labels = generate_synthetic(seed, dialogues, relations, max_pairs)
        count = save_corpus(out, examples, labels)
        print(f"Wrote {count} synthetic dialogues to {out}")
    _run(action)


if __name__ == "__main__":
    app()
