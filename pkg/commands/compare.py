"""
compare: the four quantizers side by side, both networks at the same bits.
"""
import click

from commands.common import BitsRange, EnumList, build_evaluator, build_run_config, emit, gan_options, save_report
from config import settings
from models import QuantScheme
from precision_search import scheme_comparison
from tensor_store import write_table_csv

COMPARE_HEADER = ["scheme", "bits", "score", "grade"]


@click.command("compare")
@click.option("--schemes", type=EnumList(QuantScheme), default="minmax,log,tanh,em", show_default=True)
@click.option("--bits", "bits_range", type=BitsRange(), default="1..4", show_default=True)
@click.option("--repeats", type=click.IntRange(1), default=settings.eval_repeats, show_default=True)
@click.option("--mock", default=None, help="Linear mock evaluator, e.g. '0.3d,0.25g'.")
@gan_options
@click.pass_obj
def compare_command(run, schemes, bits_range, repeats, mock, **gan_values):
    """Writes compare.csv and compare.json."""
    config, dataset = build_run_config(run.seed, **gan_values)
    click.echo(f"⚖️ Comparing {', '.join(s.value for s in schemes)}...", err=True)

    result = scheme_comparison(
        lambda scheme: build_evaluator(mock, scheme, repeats, config, dataset),
        schemes, bits_range, run.seed,
        acceptable=settings.acceptable_score, unacceptable=settings.unacceptable_score,
    )

    rows = [[cell.scheme.value, cell.bits, cell.score, cell.grade.value] for cell in result.cells]
    write_table_csv(run.artifact("compare.csv"), COMPARE_HEADER, rows)
    save_report(run, "compare.json", result)
    emit(run, result, [f"{scheme},{bits},{score:.4f},{grade}" for scheme, bits, score, grade in rows])
    return 0
