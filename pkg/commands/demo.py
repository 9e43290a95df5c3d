"""
demo: deterministic sample archives for trying the other commands.
"""
import click

from commands.common import emit
from config import settings
from demo_archives import DEMO_ARCHIVES, write_demo_archives
from schemas import MessageResponse


@click.command("demo")
@click.option("--sigma", type=click.FloatRange(0, min_open=True), default=settings.gaussian_sigma, show_default=True)
@click.option("--only", type=click.Choice(list(DEMO_ARCHIVES)), multiple=True, help="Restrict to these archives.")
@click.pass_obj
def demo_command(run, sigma, only):
    """Write demo_<family>.qgw archives into the output directory."""
    paths = write_demo_archives(run.prepare(), run.seed, sigma=sigma, names=list(only) or None)
    response = MessageResponse(message=f"Wrote {len(paths)} demo archives", files=[path.name for path in paths])
    emit(run, response, [str(path) for path in paths])
    return 0
