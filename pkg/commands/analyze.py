"""
analyze: per-tensor histograms and distribution summaries.
"""
import click

from commands.common import emit, safe_filename, save_report
from config import settings
from schemas import AnalysisReport, HistogramSpec
from tensor_store import export_histogram, read_weights, summarize


@click.command("analyze")
@click.option("--in", "input_path", required=True, help="QGW1 archive to analyze.")
@click.option("--bins", type=click.IntRange(2), default=settings.histogram_bins, show_default=True)
@click.pass_obj
def analyze_command(run, input_path, bins):
    """Write hist_<tensor>.csv per tensor plus analysis.json."""
    tensors = read_weights(input_path)
    spec = HistogramSpec(bin_count=bins)
    click.echo(f"📊 Analyzing {len(tensors)} tensors...", err=True)

    summaries = []
    for tensor in tensors:
        filename = f"hist_{safe_filename(tensor.name)}.csv"
        export_histogram(tensor, spec, run.artifact(filename))
        summaries.append(summarize(tensor, histogram_csv=filename))

    report = AnalysisReport(input=str(input_path), bins=bins, tensors=summaries)
    save_report(run, "analysis.json", report)
    emit(run, report, [
        f"{s.name} {s.shape}: min={s.min:.6g} max={s.max:.6g} mean={s.mean:.6g} std={s.std:.6g}"
        for s in summaries
    ])
    return 0
