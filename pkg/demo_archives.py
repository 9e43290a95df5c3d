"""
Generate deterministic demo weight archives.

Each archive holds a few tensors from one sample family so the analyze and
quantize commands have something realistic to work on:

- gaussian: N(0, sigma^2) layers, the usual shape of trained GAN weights
- uniform: the same spread as a flat distribution
- bimodal: two clusters either side of zero
- constant: degenerate tensors that exercise the identity paths
"""
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import click
import numpy as np

from models import SampleKind, Tensor
from seeding import derive_seed
from tensor_store import random_tensor, write_weights


# (name, shape) per archive; sample family is the archive key
DEMO_LAYOUT = [
    ("layer0.weight", (2, 64)),
    ("layer1.weight", (64, 64)),
    ("layer2.weight", (64, 1)),
]

CONSTANT_TENSORS = [
    ("zeros", (4, 4), 0.0),
    ("bias", (8,), 0.5),
    ("single", (1,), -1.25),
]


def _family_tensors(kind: SampleKind, seed: int, sigma: float) -> List[Tensor]:
    tensors = []
    for index, (name, shape) in enumerate(DEMO_LAYOUT):
        size = int(np.prod(shape))
        sample = random_tensor(kind, size, derive_seed(seed, "demo", (index,)), sigma=sigma)
        tensors.append(Tensor(name=name, shape=shape, data=sample.data))
    return tensors


def _constant_tensors(seed: int, sigma: float) -> List[Tensor]:
    return [Tensor(name=name, shape=shape, data=np.full(shape, value)) for name, shape, value in CONSTANT_TENSORS]


DEMO_ARCHIVES: Dict[str, Callable[[int, float], List[Tensor]]] = {
    "gaussian": lambda seed, sigma: _family_tensors(SampleKind.GAUSSIAN, seed, sigma),
    "uniform": lambda seed, sigma: _family_tensors(SampleKind.UNIFORM, seed, sigma),
    "bimodal": lambda seed, sigma: _family_tensors(SampleKind.BIMODAL, seed, sigma),
    "constant": _constant_tensors,
}


def write_demo_archives(out_dir: Union[str, Path], seed: int, sigma: float = 0.02,
                        names: Optional[List[str]] = None) -> List[Path]:
    """Write demo_<name>.qgw for every (or each selected) archive; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    click.echo("🌱 Writing demo weight archives...", err=True)

    written = []
    for name in names or list(DEMO_ARCHIVES):
        tensors = DEMO_ARCHIVES[name](seed, sigma)
        path = out_dir / f"demo_{name}.qgw"
        write_weights(path, tensors)
        written.append(path)
        click.echo(f"  ✅ {path.name}: {len(tensors)} tensors", err=True)

    click.echo(f"🎉 Demo archives complete! 📊 {len(written)} files", err=True)
    return written
