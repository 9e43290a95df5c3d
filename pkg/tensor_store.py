"""
Weight archives, CSV/JSON artifacts and deterministic test tensors.

QGW1 layout (little-endian throughout):

    magic        4 bytes  b"QGW1"
    tensor_count u32
    per tensor:
        name_len u32, name (UTF-8), rank u32, dims u32 x rank,
        payload  float32 x prod(dims), row-major

In memory values are float64; they are stored as the nearest float32.
"""
import csv
import logging
import math
import struct
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from exceptions import BadMagic, DuplicateName, EmptyTensor, InvalidTensor, StoreIoError, TruncatedFile
from models import SampleKind, Tensor
from schemas import HistogramSpec, HistoryEntry, TensorSummary

logger = logging.getLogger(__name__)

MAGIC = b"QGW1"
HISTOGRAM_HEADER = ["bin_lo", "bin_hi", "count"]
HISTORY_HEADER = ["step", "d_loss", "g_loss", "score"]

PathLike = Union[str, Path]


# =============================================================================
# QGW1 ARCHIVES
# =============================================================================

def encode_weights(tensors: Sequence[Tensor]) -> bytes:
    """Serialize tensors into QGW1 bytes."""
    seen = set()
    chunks = [MAGIC, struct.pack("<I", len(tensors))]
    for tensor in tensors:
        if not tensor.name:
            raise InvalidTensor("Archive tensors need a non-empty name")
        if tensor.name in seen:
            raise DuplicateName(f"Tensor name '{tensor.name}' appears twice")
        seen.add(tensor.name)

        payload = tensor.data.astype("<f4")
        if not np.all(np.isfinite(payload)):
            raise InvalidTensor(f"Tensor '{tensor.name}' does not fit in 32-bit floats")
        name = tensor.name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<I", len(tensor.shape)))
        chunks.append(struct.pack(f"<{len(tensor.shape)}I", *tensor.shape))
        chunks.append(payload.tobytes())
    return b"".join(chunks)


class _Cursor:
    """Bounds-checked reader over archive bytes."""

    def __init__(self, blob: bytes, source: str):
        self.blob = blob
        self.source = source
        self.offset = 0

    def take(self, count: int) -> bytes:
        end = self.offset + count
        if end > len(self.blob):
            raise TruncatedFile(
                f"{self.source}: needed {count} bytes at offset {self.offset}, "
                f"only {len(self.blob) - self.offset} left"
            )
        chunk = self.blob[self.offset:end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def decode_weights(blob: bytes, source: str = "<bytes>") -> List[Tensor]:
    """Parse QGW1 bytes back into tensors."""
    cursor = _Cursor(blob, source)
    magic = blob[:4]
    if len(magic) == 4 and magic != MAGIC:
        raise BadMagic(f"{source}: expected magic {MAGIC!r}, found {magic!r}")
    cursor.take(4)

    tensors = []
    for _ in range(cursor.u32()):
        raw_name = cursor.take(cursor.u32())
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidTensor(f"{source}: tensor name {raw_name!r} is not valid UTF-8") from exc
        rank = cursor.u32()
        dims = list(struct.unpack(f"<{rank}I", cursor.take(4 * rank)))
        payload = cursor.take(4 * math.prod(dims))
        data = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        tensors.append(Tensor(name=name, shape=tuple(dims), data=data))

    if cursor.offset != len(blob):
        logger.warning("%s: ignoring %d trailing bytes", source, len(blob) - cursor.offset)
    return tensors


def write_weights(path: PathLike, tensors: Sequence[Tensor]) -> None:
    """Write tensors to a QGW1 file."""
    blob = encode_weights(tensors)
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise StoreIoError(f"Cannot write {path}: {exc}") from exc
    logger.info("Wrote %d tensors to %s (%d bytes)", len(tensors), path, len(blob))


def read_weights(path: PathLike) -> List[Tensor]:
    """Read every tensor from a QGW1 file."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise StoreIoError(f"Cannot read {path}: {exc}") from exc
    return decode_weights(blob, source=str(path))


# =============================================================================
# HISTOGRAMS AND SUMMARIES
# =============================================================================

def histogram_counts(tensor: Tensor, spec: HistogramSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bin counts and edges. Values outside an explicit range are clamped into
    the edge bins so that the counts always sum to the element count.
    """
    if tensor.size == 0:
        raise EmptyTensor(f"Tensor '{tensor.name}' has no elements")
    if spec.range is not None:
        lo, hi = spec.range
    else:
        lo, hi = float(np.min(tensor.data)), float(np.max(tensor.data))
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
    values = np.clip(tensor.data, lo, hi)
    return np.histogram(values, bins=spec.bin_count, range=(lo, hi))


def export_histogram(tensor: Tensor, spec: HistogramSpec, path: PathLike) -> None:
    """Write the histogram of ``tensor`` as CSV "bin_lo,bin_hi,count"."""
    counts, edges = histogram_counts(tensor, spec)
    rows = [[repr(float(edges[i])), repr(float(edges[i + 1])), int(counts[i])] for i in range(len(counts))]
    _write_csv(path, HISTOGRAM_HEADER, rows)


def summarize(tensor: Tensor, histogram_csv: Optional[str] = None) -> TensorSummary:
    """Min/max/mean/std summary of one tensor."""
    if tensor.size == 0:
        raise EmptyTensor(f"Tensor '{tensor.name}' has no elements")
    return TensorSummary(
        name=tensor.name,
        shape=list(tensor.shape),
        count=tensor.size,
        min=float(np.min(tensor.data)),
        max=float(np.max(tensor.data)),
        mean=float(np.mean(tensor.data)),
        std=float(np.std(tensor.data)),
        histogram_csv=histogram_csv,
    )


# =============================================================================
# CSV / JSON ARTIFACTS
# =============================================================================

def _write_csv(path: PathLike, header: List[str], rows: List[list]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise StoreIoError(f"Cannot write {path}: {exc}") from exc


def write_history_csv(path: PathLike, history: Sequence[HistoryEntry]) -> None:
    """Training curve as CSV "step,d_loss,g_loss,score"."""
    rows = [[entry.step, repr(entry.d_loss), repr(entry.g_loss), repr(entry.score.score)] for entry in history]
    _write_csv(path, HISTORY_HEADER, rows)


def read_history_csv(path: PathLike) -> List[Tuple[int, float, float, float]]:
    """Inverse of write_history_csv (scores as bare numbers)."""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader)
            if header != HISTORY_HEADER:
                raise BadMagic(f"{path}: unexpected header {header}")
            return [(int(s), float(d), float(g), float(q)) for s, d, g, q in reader]
    except OSError as exc:
        raise StoreIoError(f"Cannot read {path}: {exc}") from exc


def write_table_csv(path: PathLike, header: List[str], rows: List[list]) -> None:
    """Generic result table (sweep and comparison grids)."""
    _write_csv(path, header, [[repr(v) if isinstance(v, float) else v for v in row] for row in rows])


def write_json(path: PathLike, document: BaseModel) -> None:
    """Write a pydantic document as indented JSON."""
    try:
        Path(path).write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise StoreIoError(f"Cannot write {path}: {exc}") from exc


# =============================================================================
# RANDOM TENSORS
# =============================================================================

def random_tensor(kind: SampleKind, n: int, seed: int, sigma: float = 0.02,
                  name: Optional[str] = None) -> Tensor:
    """
    Deterministic sample of ``n`` weights.

    Gaussian: N(0, sigma^2). Uniform: U(-sqrt(3) sigma, sqrt(3) sigma), the
    same spread. Bimodal: half the samples around +3 sigma and half around
    -3 sigma with spread sigma / 2, so each mode stays on its side of zero.
    """
    if n < 1:
        raise EmptyTensor(f"random_tensor needs n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if kind == SampleKind.GAUSSIAN:
        data = rng.normal(0.0, sigma, n)
    elif kind == SampleKind.UNIFORM:
        bound = math.sqrt(3.0) * sigma
        data = rng.uniform(-bound, bound, n)
    else:
        positive = n // 2
        centers = np.concatenate([np.full(positive, 3.0 * sigma), np.full(n - positive, -3.0 * sigma)])
        data = rng.permutation(centers + rng.normal(0.0, sigma / 2.0, n))
    return Tensor(name=name or f"{kind.value}_{n}", shape=(n,), data=data)
