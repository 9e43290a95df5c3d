"""
Pydantic schemas for validated run configuration and JSON reports.
"""
from typing import List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models import QualityGrade, QuantScheme, RunStatus, SweepMode


# =============================================================================
# BASE SCHEMAS
# =============================================================================

class BaseSchema(BaseModel):
    """Base schema with common configuration."""
    model_config = ConfigDict(frozen=True)


# =============================================================================
# CONFIGURATION SCHEMAS
# =============================================================================

class HistogramSpec(BaseSchema):
    """Histogram binning; range defaults to the data min/max."""
    bin_count: int = Field(default=80, ge=2)
    range: Optional[Tuple[float, float]] = None

    @field_validator("range")
    @classmethod
    def validate_range(cls, v):
        if v is not None and not v[0] < v[1]:
            raise ValueError("Histogram range needs lo < hi")
        return v


class RingDataset(BaseSchema):
    """Gaussian mixture with modes equally spaced on a circle."""
    mode_count: int = Field(default=8, ge=1)
    radius: float = Field(default=2.0, gt=0)
    sigma: float = Field(default=0.05, gt=0)
    seed: int = 0


class GanConfig(BaseSchema):
    """
    Toy GAN run configuration.

    Layer lists are full dimension chains, input first. A missing
    d_bits/g_bits keeps that network full-precision.
    """
    noise_dim: int = Field(default=2, ge=1)
    gen_layers: List[int] = Field(default_factory=lambda: [2, 64, 64, 2])
    disc_layers: List[int] = Field(default_factory=lambda: [2, 64, 64, 1])
    d_bits: Optional[int] = Field(default=None, ge=1, le=16)
    g_bits: Optional[int] = Field(default=None, ge=1, le=16)
    d_scheme: QuantScheme = QuantScheme.EM_LINEAR
    g_scheme: QuantScheme = QuantScheme.EM_LINEAR
    learning_rate: float = Field(default=1e-3, ge=0)
    adam_beta1: float = Field(default=0.5, ge=0, lt=1)
    adam_beta2: float = Field(default=0.999, ge=0, lt=1)
    batch_size: int = Field(default=128, ge=1)
    steps: int = Field(default=4000, ge=0)
    seed: int = 42
    eval_interval: int = Field(default=250, ge=1)
    eval_samples: int = Field(default=5000, ge=1)

    @model_validator(mode="after")
    def validate_chains(self):
        if len(self.gen_layers) < 2 or len(self.disc_layers) < 2:
            raise ValueError("Each network needs at least one layer")
        if min(self.gen_layers + self.disc_layers) < 1:
            raise ValueError("Layer widths must be positive")
        if self.gen_layers[0] != self.noise_dim:
            raise ValueError("Generator input width must equal noise_dim")
        if self.gen_layers[-1] != self.disc_layers[0]:
            raise ValueError("Generator output width must equal discriminator input width")
        if self.disc_layers[-1] != 1:
            raise ValueError("Discriminator must end in a single unit")
        return self


# =============================================================================
# QUANTIZATION REPORTS
# =============================================================================

class UtilizationReport(BaseSchema):
    """How well the quantized states cover the weight distribution."""
    bits: int
    state_count: int
    states_used: int
    entropy: float  # nats
    extremum_mass: float  # share of elements in codes 0 and 2^k - 1
    l2_error: float


class TensorQuantReport(BaseSchema):
    """Per-tensor line of a quantize run."""
    name: str
    shape: List[int]
    scheme: QuantScheme
    bits: int
    alpha: Optional[float] = None
    beta: Optional[float] = None
    l2_error: float
    states_used: int
    entropy: float
    extremum_mass: float
    em_iterations: Optional[int] = None
    em_converged: Optional[bool] = None


class QuantizeReport(BaseSchema):
    """Report of the quantize command."""
    input: str
    output: str
    scheme: QuantScheme
    bits: int
    tensors: List[TensorQuantReport] = []


class TensorSummary(BaseSchema):
    """Distribution summary of one tensor."""
    name: str
    shape: List[int]
    count: int
    min: float
    max: float
    mean: float
    std: float
    histogram_csv: Optional[str] = None


class AnalysisReport(BaseSchema):
    """Report of the analyze command."""
    input: str
    bins: int
    tensors: List[TensorSummary] = []


# =============================================================================
# GAN SCHEMAS
# =============================================================================

class QualityScore(BaseSchema):
    """Mode-coverage quality of generated samples, in [0, 1]."""
    covered_modes: int = Field(..., ge=0)
    mode_count: int = Field(..., ge=1)
    hq_fraction: float = Field(..., ge=0, le=1)
    score: float = Field(..., ge=0, le=1)

    @classmethod
    def synthetic(cls, value: float) -> "QualityScore":
        """Score for evaluators that produce a bare number (single virtual mode)."""
        value = min(max(float(value), 0.0), 1.0)
        return cls(covered_modes=1, mode_count=1, hq_fraction=value, score=value)


class HistoryEntry(BaseSchema):
    """One training-curve point."""
    step: int
    d_loss: float
    g_loss: float
    score: QualityScore


class TrainingSummary(BaseSchema):
    """Report of the train command."""
    config: GanConfig
    dataset: RingDataset
    final_score: QualityScore
    status: Optional[RunStatus] = None
    grade: QualityGrade
    history_csv: str
    checkpoint: str


# =============================================================================
# SEARCH SCHEMAS
# =============================================================================

class TrailEntry(BaseSchema):
    """One evaluation performed by the bit-width search."""
    phase: str  # "d" or "g"
    d_bits: Optional[int] = None
    g_bits: Optional[int] = None
    score: float


class SearchResult(BaseSchema):
    """Outcome of the two-phase bit-width search."""
    d_bits: Optional[int] = None
    g_bits: Optional[int] = None
    quality_requirement: float
    max_bits: int
    satisfied: bool
    trail: List[TrailEntry] = []


class SweepCell(BaseSchema):
    """One (mode, bits) evaluation of a sensitivity sweep."""
    mode: SweepMode
    bits: int
    score: QualityScore
    status: Optional[RunStatus] = None
    curve_csv: Optional[str] = None
    history: List[HistoryEntry] = Field(default_factory=list, exclude=True)


class SweepResult(BaseSchema):
    """Sensitivity sweep table over modes and bit-widths."""
    bits_lo: int
    bits_hi: int
    modes: List[SweepMode]
    cells: List[SweepCell] = []

    def score(self, mode: SweepMode, bits: int) -> float:
        for cell in self.cells:
            if cell.mode == mode and cell.bits == bits:
                return cell.score.score
        raise KeyError((mode, bits))


class ComparisonCell(BaseSchema):
    """One (scheme, bits) cell with both networks quantized."""
    scheme: QuantScheme
    bits: int
    score: float
    grade: QualityGrade


class ComparisonResult(BaseSchema):
    """Scheme-by-bits comparison table."""
    bits_lo: int
    bits_hi: int
    cells: List[ComparisonCell] = []


# =============================================================================
# COMMON SCHEMAS
# =============================================================================

class MessageResponse(BaseSchema):
    """Simple message response."""
    message: str
    success: bool = True
    files: List[str] = []
