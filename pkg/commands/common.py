"""
Shared plumbing for the subcommands: run context, option types and output.
"""
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import click
from pydantic import BaseModel, ValidationError

from config import settings
from exceptions import StoreIoError
from models import QuantScheme
from precision_search import Evaluator, GanEvaluator, LinearMockEvaluator
from schemas import GanConfig, RingDataset
from tensor_store import write_json


@dataclass
class RunContext:
    """Global options shared by every subcommand."""
    seed: int
    out_dir: Path
    json_output: bool = False

    def prepare(self) -> Path:
        """Create the output directory on first use."""
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreIoError(f"Cannot create output directory {self.out_dir}: {exc}") from exc
        return self.out_dir

    def artifact(self, name: str) -> Path:
        return self.prepare() / name


def emit(run: RunContext, document: BaseModel, lines: Iterable[str] = ()) -> None:
    """JSON on stdout with --json, otherwise human-readable lines."""
    if run.json_output:
        click.echo(document.model_dump_json(indent=2))
        return
    for line in lines:
        click.echo(line)


def save_report(run: RunContext, name: str, document: BaseModel) -> Path:
    path = run.artifact(name)
    write_json(path, document)
    return path


def safe_filename(name: str) -> str:
    """Tensor names may contain separators; keep files inside the output dir."""
    return re.sub(r"[^A-Za-z0-9._-]", "_", name) or "_"


# =============================================================================
# OPTION TYPES
# =============================================================================

class BitsRange(click.ParamType):
    """Inclusive "lo..hi" bit-width range within 1..16."""
    name = "lo..hi"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        match = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", str(value))
        if not match:
            self.fail(f"expected a range like 1..4, got '{value}'", param, ctx)
        lo, hi = int(match.group(1)), int(match.group(2))
        if not 1 <= lo <= hi <= 16:
            self.fail(f"range must satisfy 1 <= lo <= hi <= 16, got {lo}..{hi}", param, ctx)
        return lo, hi


class EnumList(click.ParamType):
    """Comma-separated list of enum values, duplicates dropped, order kept."""

    def __init__(self, enum_cls):
        self.enum_cls = enum_cls
        self.name = ",".join(member.value for member in enum_cls)

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        items = [item.strip() for item in str(value).split(",") if item.strip()]
        if not items:
            self.fail("expected at least one value", param, ctx)
        try:
            return list(dict.fromkeys(self.enum_cls(item) for item in items))
        except ValueError:
            self.fail(f"values must be among {self.name}, got '{value}'", param, ctx)


SCHEME_CHOICE = click.Choice([scheme.value for scheme in QuantScheme])
BITS = click.IntRange(1, 16)


# =============================================================================
# GAN OPTIONS
# =============================================================================

def gan_options(function: Callable) -> Callable:
    """Training knobs shared by train, search, sweep and compare."""
    options = [
        click.option("--steps", type=click.IntRange(0), default=settings.gan_steps, show_default=True,
                     help="Training steps per run."),
        click.option("--batch-size", type=click.IntRange(1), default=128, show_default=True),
        click.option("--lr", "learning_rate", type=click.FloatRange(0), default=settings.learning_rate,
                     show_default=True, help="Adam step size."),
        click.option("--eval-interval", type=click.IntRange(1), default=settings.eval_interval, show_default=True),
        click.option("--eval-samples", type=click.IntRange(1), default=settings.eval_samples, show_default=True),
        click.option("--ring-modes", type=click.IntRange(1), default=8, show_default=True,
                     help="Number of mixture modes on the ring."),
        click.option("--ring-radius", type=click.FloatRange(0, min_open=True), default=2.0, show_default=True),
        click.option("--ring-sigma", type=click.FloatRange(0, min_open=True), default=0.05, show_default=True),
    ]
    for option in reversed(options):
        function = option(function)
    return function


def build_run_config(seed: int, steps: int, batch_size: int, learning_rate: float,
                     eval_interval: int, eval_samples: int, ring_modes: int, ring_radius: float,
                     ring_sigma: float, **overrides) -> tuple:
    """GanConfig and RingDataset from CLI values; invalid combinations are usage errors."""
    try:
        config = GanConfig(
            seed=seed, steps=steps, batch_size=batch_size, learning_rate=learning_rate,
            eval_interval=eval_interval, eval_samples=eval_samples, **overrides,
        )
        dataset = RingDataset(mode_count=ring_modes, radius=ring_radius, sigma=ring_sigma, seed=seed)
    except ValidationError as exc:
        raise click.UsageError(str(exc)) from exc
    return config, dataset


def build_evaluator(mock: Optional[str], scheme: QuantScheme, repeats: int,
                    config: GanConfig, dataset: RingDataset) -> Evaluator:
    """The --mock hook or a real retraining evaluator."""
    if mock:
        try:
            return LinearMockEvaluator.parse(mock)
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--mock") from exc
    return GanEvaluator(config, dataset, scheme, repeats=repeats)
