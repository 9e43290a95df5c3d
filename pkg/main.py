"""
QGAN Quantization Lab - command line

Main click application entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error (or an unsatisfied
search without --allow-unsat).
"""
import logging
import sys
from pathlib import Path

import click

from config import settings
from commands import (
    quantize_command,
    analyze_command,
    train_command,
    search_command,
    sweep_command,
    compare_command,
    demo_command,
)
from commands.common import RunContext
from exceptions import QganError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class QganCli(click.Group):
    """Click group that maps every failure onto the lab's exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, **extra):
        extra.pop("standalone_mode", None)
        try:
            result = super().main(args=args, prog_name=prog_name, complete_var=complete_var,
                                  standalone_mode=False, **extra)
        except click.UsageError as exc:
            exc.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_RUNTIME)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except QganError as exc:
            click.echo(f"❌ {type(exc).__name__}: {exc.detail}", err=True)
            sys.exit(EXIT_RUNTIME)
        except Exception as exc:
            logger.exception("Unhandled error")
            click.echo(f"❌ Unexpected error: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
        sys.exit(result if isinstance(result, int) else EXIT_OK)


# =============================================================================
# CLI GROUP
# =============================================================================

@click.group(cls=QganCli)
@click.version_option("1.0.0", prog_name=settings.project_name)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=settings.default_seed, show_default=True,
              help="Root seed for every random stream.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              default=settings.out_dir, show_default=True, help="Output directory for artifacts.")
@click.option("--json", "json_output", is_flag=True, help="Machine-readable JSON on stdout.")
@click.pass_context
def cli(ctx, seed, out_dir, json_output):
    """Quantization experiments on weight archives and toy GANs."""
    logging.basicConfig(
        level=settings.log_level.upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = RunContext(seed=seed, out_dir=Path(out_dir), json_output=json_output)


cli.add_command(quantize_command)
cli.add_command(analyze_command)
cli.add_command(train_command)
cli.add_command(search_command)
cli.add_command(sweep_command)
cli.add_command(compare_command)
cli.add_command(demo_command)


# =============================================================================
# RUN CLI
# =============================================================================

if __name__ == "__main__":
    cli(prog_name="qgan")
