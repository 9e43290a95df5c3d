"""
search: lowest (d_bits, g_bits) meeting a quality requirement.
"""
import click

from commands.common import SCHEME_CHOICE, build_evaluator, build_run_config, emit, gan_options, save_report
from config import settings
from exceptions import EvaluatorFailure
from models import QuantScheme
from precision_search import multi_precision_search
from schemas import SearchResult


@click.command("search")
@click.option("--quality", type=click.FloatRange(0, 1, min_open=True), required=True,
              help="Required score in (0, 1].")
@click.option("--max-bits", type=click.IntRange(1, 16), default=settings.search_max_bits, show_default=True)
@click.option("--scheme", type=SCHEME_CHOICE, default=QuantScheme.EM_LINEAR.value, show_default=True)
@click.option("--repeats", type=click.IntRange(1), default=settings.eval_repeats, show_default=True,
              help="Training runs per evaluation (median score).")
@click.option("--mock", default=None, help="Linear mock evaluator, e.g. '0.3d,0.25g'.")
@click.option("--allow-unsat", is_flag=True, help="Exit 0 even when no bit-width meets the requirement.")
@gan_options
@click.pass_obj
def search_command(run, quality, max_bits, scheme, repeats, mock, allow_unsat, **gan_values):
    """Two-phase bit-width search; writes search.json with the full trail."""
    scheme = QuantScheme(scheme)
    config, dataset = build_run_config(run.seed, **gan_values)
    evaluator = build_evaluator(mock, scheme, repeats, config, dataset)
    click.echo(f"🔍 Searching bit-widths for quality >= {quality} (max {max_bits} bits)...", err=True)

    try:
        result = multi_precision_search(evaluator, quality, max_bits=max_bits, seed=run.seed)
    except EvaluatorFailure as exc:
        partial = SearchResult(quality_requirement=quality, max_bits=max_bits, satisfied=False, trail=exc.trail)
        save_report(run, "search.json", partial)
        raise

    save_report(run, "search.json", result)
    emit(run, result, [
        f"d_bits={result.d_bits} g_bits={result.g_bits} satisfied={result.satisfied} "
        f"({len(result.trail)} evaluations)",
    ])
    if not result.satisfied:
        click.echo(f"⚠️ No configuration up to {max_bits} bits reaches {quality}", err=True)
        return 0 if allow_unsat else 2
    return 0
