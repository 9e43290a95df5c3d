"""
sweep: score table over quantization modes and bit-widths.
"""
import click

from commands.common import (
    SCHEME_CHOICE, BitsRange, EnumList, build_evaluator, build_run_config, emit, gan_options, save_report,
)
from config import settings
from models import QuantScheme, SweepMode
from precision_search import sensitivity_sweep
from tensor_store import write_history_csv, write_table_csv

SWEEP_HEADER = ["mode", "bits", "score", "status"]


@click.command("sweep")
@click.option("--modes", type=EnumList(SweepMode), default="d,both,g", show_default=True)
@click.option("--bits", "bits_range", type=BitsRange(), default="1..4", show_default=True)
@click.option("--jobs", type=click.IntRange(1), default=settings.jobs, show_default=True)
@click.option("--scheme", type=SCHEME_CHOICE, default=QuantScheme.EM_LINEAR.value, show_default=True)
@click.option("--repeats", type=click.IntRange(1), default=settings.eval_repeats, show_default=True)
@click.option("--mock", default=None, help="Linear mock evaluator, e.g. '0.3d,0.25g'.")
@gan_options
@click.pass_obj
def sweep_command(run, modes, bits_range, jobs, scheme, repeats, mock, **gan_values):
    """Writes sweep.csv, curves/<mode>_<bits>.csv and sweep.json."""
    config, dataset = build_run_config(run.seed, **gan_values)
    evaluator = build_evaluator(mock, QuantScheme(scheme), repeats, config, dataset)
    lo, hi = bits_range
    click.echo(f"🧪 Sweeping {len(modes)} modes x bits {lo}..{hi} with {jobs} worker(s)...", err=True)

    result = sensitivity_sweep(evaluator, bits_range, run.seed, modes=modes, jobs=jobs)

    cells = []
    for cell in result.cells:
        if cell.history:
            curve = f"curves/{cell.mode.value}_{cell.bits}.csv"
            run.artifact("curves").mkdir(exist_ok=True)
            write_history_csv(run.artifact(curve), cell.history)
            cell = cell.model_copy(update={"curve_csv": curve})
        cells.append(cell)
    result = result.model_copy(update={"cells": cells})

    rows = [
        [cell.mode.value, cell.bits, cell.score.score, cell.status.value if cell.status else ""]
        for cell in result.cells
    ]
    write_table_csv(run.artifact("sweep.csv"), SWEEP_HEADER, rows)
    save_report(run, "sweep.json", result)
    emit(run, result, [f"{mode},{bits},{score:.4f},{status}" for mode, bits, score, status in rows])
    return 0
