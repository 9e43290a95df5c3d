"""
quantize: fit a scheme per tensor and write the quantized archive.
"""
import click

from commands.common import BITS, SCHEME_CHOICE, emit, save_report
from config import settings
from models import QuantScheme
from quant_core import fit_quantize, quant_report
from schemas import QuantizeReport, TensorQuantReport
from tensor_store import read_weights, write_weights


@click.command("quantize")
@click.option("--in", "input_path", required=True, help="QGW1 archive to quantize.")
@click.option("--out", "output_path", required=True, help="Where to write the quantized archive.")
@click.option("--scheme", type=SCHEME_CHOICE, required=True)
@click.option("--bits", type=BITS, required=True)
@click.option("--epsilon", type=click.FloatRange(0, min_open=True), default=settings.log_epsilon,
              show_default=True, help="Log-scheme offset.")
@click.option("--delta", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=settings.tanh_delta,
              show_default=True, help="Tanh-scheme saturation margin.")
@click.option("--max-iter", type=click.IntRange(1), default=settings.em_max_iter, show_default=True)
@click.option("--tol", type=click.FloatRange(0, min_open=True), default=settings.em_tol, show_default=True)
@click.pass_obj
def quantize_command(run, input_path, output_path, scheme, bits, epsilon, delta, max_iter, tol):
    """Quantize every tensor of an archive."""
    scheme = QuantScheme(scheme)
    tensors = read_weights(input_path)
    click.echo(f"📦 Quantizing {len(tensors)} tensors with {scheme.value} at {bits} bits...", err=True)

    quantized, entries, lines = [], [], []
    for tensor in tensors:
        params, outcome, trace = fit_quantize(
            tensor, scheme, bits, epsilon=epsilon, saturation_delta=delta, max_iter=max_iter, tol=tol,
        )
        usage = quant_report(outcome, bits)
        entries.append(TensorQuantReport(
            name=tensor.name,
            shape=list(tensor.shape),
            scheme=scheme,
            bits=bits,
            alpha=params.alpha,
            beta=params.beta,
            l2_error=usage.l2_error,
            states_used=usage.states_used,
            entropy=usage.entropy,
            extremum_mass=usage.extremum_mass,
            em_iterations=trace.steps_taken if trace else None,
            em_converged=trace.converged if trace else None,
        ))
        quantized.append(outcome.quantized)
        lines.append(f"{tensor.name}: l2_error={usage.l2_error:.6g} states={usage.states_used}/{usage.state_count}")

    report = QuantizeReport(
        input=str(input_path), output=str(output_path), scheme=scheme, bits=bits, tensors=entries,
    )
    write_weights(output_path, quantized)
    save_report(run, "quantize.json", report)
    click.echo(f"✅ Wrote {output_path}", err=True)
    emit(run, report, lines)
    return 0
