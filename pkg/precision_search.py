"""
Bit-width search and sensitivity sweeps over quantized GANs.

The search first finds the smallest discriminator bit-width that meets the
quality requirement with a full-precision generator, then, keeping that
discriminator, the smallest generator bit-width. Evaluators are pluggable so
the control flow can run against mocks in milliseconds.
"""
import logging
import math
import re
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, Union

from exceptions import EvaluatorFailure, InvalidParams, TooShort
from gan_lab import evaluate_quality, grade_quality, train
from models import QuantScheme, RunStatus, SweepMode
from schemas import (
    ComparisonCell, ComparisonResult, GanConfig, HistoryEntry, QualityScore,
    RingDataset, SearchResult, SweepCell, SweepResult, TrailEntry,
)
from seeding import derive_seed

logger = logging.getLogger(__name__)

ALL_MODES = [SweepMode.D_ONLY, SweepMode.BOTH, SweepMode.G_ONLY]
DEFAULT_MAX_BITS = 8
FAIL_THRESHOLD = 0.15
PASS_THRESHOLD = 0.5
OSCILLATION_THRESHOLD = 0.25


# =============================================================================
# EVALUATORS
# =============================================================================

class Evaluator(ABC):
    """Trains (or mocks) a GAN at the given bit-widths and scores it. None = full precision."""

    @abstractmethod
    def evaluate(self, d_bits: Optional[int], g_bits: Optional[int], seed: int) -> QualityScore:
        ...

    def evaluate_run(self, d_bits: Optional[int], g_bits: Optional[int],
                     seed: int) -> Tuple[QualityScore, List[HistoryEntry]]:
        """Score plus the training history behind it (empty for mocks)."""
        return self.evaluate(d_bits, g_bits, seed), []


class GanEvaluator(Evaluator):
    """Retrains the toy GAN from scratch for every candidate configuration."""

    def __init__(self, config: GanConfig, dataset: RingDataset, scheme: QuantScheme, repeats: int = 1):
        if repeats < 1:
            raise InvalidParams(f"repeats must be >= 1, got {repeats}")
        self.config = config
        self.dataset = dataset
        self.scheme = scheme
        self.repeats = repeats

    def evaluate_run(self, d_bits, g_bits, seed):
        runs = []
        for repeat in range(self.repeats):
            run_seed = seed if repeat == 0 else derive_seed(seed, "search", (repeat,))
            config = self.config.model_copy(update=dict(
                d_bits=d_bits, g_bits=g_bits,
                d_scheme=self.scheme, g_scheme=self.scheme,
                seed=run_seed,
            ))
            model, history = train(config, self.dataset)
            if history:
                score = history[-1].score
            else:
                score = evaluate_quality(model, self.dataset, config.eval_samples,
                                         derive_seed(run_seed, "evaluation"))
            runs.append((score, history))
        # median run; lower middle for even counts so a real run is returned
        runs.sort(key=lambda run: run[0].score)
        score, history = runs[(len(runs) - 1) // 2]
        logger.info("evaluated d=%s g=%s scheme=%s: %.3f", d_bits, g_bits, self.scheme.value, score.score)
        return score, history

    def evaluate(self, d_bits, g_bits, seed):
        return self.evaluate_run(d_bits, g_bits, seed)[0]


class LinearMockEvaluator(Evaluator):
    """
    Deterministic stand-in: min(d_slope * d_bits, 1) while the generator is
    full precision, min(g_slope * g_bits, 1) once it is quantized.
    """

    SPEC = re.compile(r"^\s*([0-9.]+)\s*d\s*,\s*([0-9.]+)\s*g\s*$")

    def __init__(self, d_slope: float, g_slope: float):
        self.d_slope = d_slope
        self.g_slope = g_slope

    @classmethod
    def parse(cls, spec: str) -> "LinearMockEvaluator":
        """Parse "0.3d,0.25g"."""
        match = cls.SPEC.match(spec)
        if not match:
            raise ValueError(f"Mock spec must look like '0.3d,0.25g', got '{spec}'")
        return cls(float(match.group(1)), float(match.group(2)))

    def evaluate(self, d_bits, g_bits, seed):
        if g_bits is not None:
            return QualityScore.synthetic(min(self.g_slope * g_bits, 1.0))
        if d_bits is not None:
            return QualityScore.synthetic(min(self.d_slope * d_bits, 1.0))
        return QualityScore.synthetic(1.0)


class FunctionEvaluator(Evaluator):
    """Wraps a plain function (d_bits, g_bits, seed) -> float."""

    def __init__(self, function: Callable[[Optional[int], Optional[int], int], float]):
        self.function = function

    def evaluate(self, d_bits, g_bits, seed):
        return QualityScore.synthetic(self.function(d_bits, g_bits, seed))


# =============================================================================
# MULTI-PRECISION SEARCH
# =============================================================================

def _check_bits_range(lo: int, hi: int) -> None:
    if not 1 <= lo <= hi <= 16:
        raise InvalidParams(f"bits range must satisfy 1 <= lo <= hi <= 16, got [{lo}, {hi}]")


def multi_precision_search(evaluator: Evaluator, quality: float, max_bits: int = DEFAULT_MAX_BITS,
                           seed: int = 0) -> SearchResult:
    """
    Two-phase search for the lowest (d_bits, g_bits) meeting ``quality``.

    Each phase tries 1, 2, ... up to ``max_bits``; an exhausted phase returns
    satisfied=False with the trail so far.
    """
    if not 0 < quality <= 1:
        raise InvalidParams(f"quality requirement must be in (0, 1], got {quality}")
    _check_bits_range(1, max_bits)
    trail: List[TrailEntry] = []

    def attempt(phase: str, d_bits: Optional[int], g_bits: Optional[int]) -> float:
        try:
            score = evaluator.evaluate(d_bits, g_bits, seed).score
        except Exception as exc:
            raise EvaluatorFailure(f"Evaluator failed at d_bits={d_bits}, g_bits={g_bits}: {exc}", trail) from exc
        trail.append(TrailEntry(phase=phase, d_bits=d_bits, g_bits=g_bits, score=score))
        logger.info("search %s-phase d=%s g=%s -> %.3f (need %.3f)", phase, d_bits, g_bits, score, quality)
        return score

    def scan(phase: str, configure: Callable[[int], Tuple[Optional[int], Optional[int]]]) -> Optional[int]:
        for bits in range(1, max_bits + 1):
            if attempt(phase, *configure(bits)) >= quality:
                return bits
        return None

    d_bits = scan("d", lambda bits: (bits, None))
    if d_bits is None:
        return SearchResult(quality_requirement=quality, max_bits=max_bits, satisfied=False, trail=trail)

    g_bits = scan("g", lambda bits: (d_bits, bits))
    return SearchResult(
        d_bits=d_bits,
        g_bits=g_bits,
        quality_requirement=quality,
        max_bits=max_bits,
        satisfied=g_bits is not None,
        trail=trail,
    )


# =============================================================================
# SENSITIVITY SWEEP
# =============================================================================

def _bits_for(mode: SweepMode, bits: int) -> Tuple[Optional[int], Optional[int]]:
    if mode == SweepMode.D_ONLY:
        return bits, None
    if mode == SweepMode.G_ONLY:
        return None, bits
    return bits, bits


def _evaluate_cell(evaluator: Evaluator, mode: SweepMode, bits: int, seed: int) -> SweepCell:
    d_bits, g_bits = _bits_for(mode, bits)
    score, history = evaluator.evaluate_run(d_bits, g_bits, seed)
    status = classify_run(history) if len(history) >= 4 else None
    return SweepCell(mode=mode, bits=bits, score=score, status=status, history=history)


def sensitivity_sweep(evaluator: Evaluator, bits_range: Tuple[int, int], seed: int,
                      modes: Sequence[SweepMode] = ALL_MODES, jobs: int = 1) -> SweepResult:
    """
    Evaluate every (mode, bits) cell. Each cell gets its own seed stream
    derived from (seed, mode, bits), so results do not depend on ``jobs``.
    """
    lo, hi = bits_range
    _check_bits_range(lo, hi)
    modes = list(dict.fromkeys(modes))
    keys = [(mode, bits) for mode in modes for bits in range(lo, hi + 1)]
    seeds = [derive_seed(seed, "sweep", (ALL_MODES.index(mode), bits)) for mode, bits in keys]

    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                cells = list(pool.map(
                    _evaluate_cell,
                    [evaluator] * len(keys), [m for m, _ in keys], [b for _, b in keys], seeds,
                ))
        else:
            cells = [_evaluate_cell(evaluator, mode, bits, cell_seed)
                     for (mode, bits), cell_seed in zip(keys, seeds)]
    except Exception as exc:
        raise EvaluatorFailure(f"Sweep evaluation failed: {exc}") from exc

    return SweepResult(bits_lo=lo, bits_hi=hi, modes=modes, cells=cells)


# =============================================================================
# RUN CLASSIFICATION
# =============================================================================

def _score_value(entry: Union[float, QualityScore, HistoryEntry]) -> float:
    if isinstance(entry, HistoryEntry):
        return entry.score.score
    if isinstance(entry, QualityScore):
        return entry.score
    return float(entry)


def classify_run(history: Sequence[Union[float, QualityScore, HistoryEntry]],
                 fail_threshold: float = FAIL_THRESHOLD,
                 pass_threshold: float = PASS_THRESHOLD,
                 oscillation_threshold: float = OSCILLATION_THRESHOLD) -> RunStatus:
    """
    Failed: the score never reaches ``fail_threshold``.
    Unstable: it reaches ``pass_threshold`` but the last quarter of the run
    (at least two points) swings by ``oscillation_threshold`` or more.
    Convergent: everything else.
    """
    scores = [_score_value(entry) for entry in history]
    if len(scores) < 4:
        raise TooShort(f"Need at least 4 history points to classify, got {len(scores)}")
    peak = max(scores)
    if peak < fail_threshold:
        return RunStatus.FAILED
    tail = scores[-max(2, math.ceil(len(scores) / 4)):]
    if peak >= pass_threshold and max(tail) - min(tail) >= oscillation_threshold:
        return RunStatus.UNSTABLE
    return RunStatus.CONVERGENT


# =============================================================================
# SCHEME COMPARISON
# =============================================================================

def scheme_comparison(evaluator_factory: Callable[[QuantScheme], Evaluator],
                      schemes: Sequence[QuantScheme], bits_range: Tuple[int, int], seed: int,
                      acceptable: float = 0.6, unacceptable: float = 0.4) -> ComparisonResult:
    """Both networks at the same bit-width, for every scheme and bit-width."""
    lo, hi = bits_range
    _check_bits_range(lo, hi)
    cells = []
    for scheme in schemes:
        evaluator = evaluator_factory(scheme)
        for bits in range(lo, hi + 1):
            try:
                score = evaluator.evaluate(bits, bits, seed).score
            except Exception as exc:
                raise EvaluatorFailure(f"Comparison failed at {scheme.value} {bits}-bit: {exc}") from exc
            cells.append(ComparisonCell(
                scheme=scheme, bits=bits, score=score,
                grade=grade_quality(score, acceptable, unacceptable),
            ))
    return ComparisonResult(bits_lo=lo, bits_hi=hi, cells=cells)
