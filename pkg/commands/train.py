"""
train: one toy GAN run with optional per-network quantization.
"""
import logging

import click

from commands.common import BITS, SCHEME_CHOICE, build_run_config, emit, gan_options, save_report
from config import settings
from gan_lab import evaluate_quality, grade_quality, save_checkpoint, train
from models import QuantScheme
from precision_search import classify_run
from schemas import TrainingSummary
from seeding import derive_seed
from tensor_store import write_history_csv

logger = logging.getLogger(__name__)


@click.command("train")
@click.option("--d-bits", type=BITS, default=None, help="Discriminator bits (omit for full precision).")
@click.option("--g-bits", type=BITS, default=None, help="Generator bits (omit for full precision).")
@click.option("--scheme", type=SCHEME_CHOICE, default=QuantScheme.EM_LINEAR.value, show_default=True)
@gan_options
@click.pass_obj
def train_command(run, d_bits, g_bits, scheme, **gan_values):
    """Train, then write history.csv, checkpoint.qgw and quality.json."""
    scheme = QuantScheme(scheme)
    config, dataset = build_run_config(
        run.seed, d_bits=d_bits, g_bits=g_bits, d_scheme=scheme, g_scheme=scheme, **gan_values,
    )
    click.echo(f"🚀 Training for {config.steps} steps (d_bits={d_bits}, g_bits={g_bits}, {scheme.value})...",
               err=True)
    model, history = train(config, dataset)

    if history:
        final_score = history[-1].score
    else:
        final_score = evaluate_quality(model, dataset, config.eval_samples, derive_seed(config.seed, "evaluation"))
    status = None
    if len(history) >= 4:
        status = classify_run(
            history, settings.fail_threshold, settings.pass_threshold, settings.oscillation_threshold,
        )
    else:
        logger.info("history has %d points; run not classified", len(history))

    write_history_csv(run.artifact("history.csv"), history)
    save_checkpoint(model, run.artifact("checkpoint.qgw"))
    summary = TrainingSummary(
        config=config,
        dataset=dataset,
        final_score=final_score,
        status=status,
        grade=grade_quality(final_score.score, settings.acceptable_score, settings.unacceptable_score),
        history_csv="history.csv",
        checkpoint="checkpoint.qgw",
    )
    save_report(run, "quality.json", summary)
    click.echo("✅ Training complete", err=True)
    emit(run, summary, [
        f"score={final_score.score:.4f} covered={final_score.covered_modes}/{final_score.mode_count} "
        f"hq={final_score.hq_fraction:.4f}",
        f"status={status.value if status else 'n/a'} grade={summary.grade.value}",
    ])
    return 0
