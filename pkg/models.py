"""
Numeric domain types for the quantization lab.

Arrays are numpy float64 in memory regardless of on-disk precision.
"""
import math
from dataclasses import dataclass, field
from enum import Enum as PyEnum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import InvalidTensor


# =============================================================================
# ENUMS
# =============================================================================

class QuantScheme(PyEnum):
    """Weight quantization schemes."""
    MIN_MAX = "minmax"
    LOG_MIN_MAX = "log"
    TANH = "tanh"
    EM_LINEAR = "em"


class Activation(PyEnum):
    """Layer activations supported by the MLPs."""
    LEAKY_RELU = "leaky_relu"  # slope 0.2
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


class SampleKind(PyEnum):
    """Random tensor families used for tests and demos."""
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    BIMODAL = "bimodal"


class SweepMode(PyEnum):
    """Which networks a sweep cell quantizes."""
    D_ONLY = "d"
    BOTH = "both"
    G_ONLY = "g"


class RunStatus(PyEnum):
    """Training-run taxonomy."""
    CONVERGENT = "convergent"
    UNSTABLE = "unstable"
    FAILED = "failed"


class QualityGrade(PyEnum):
    """Banding of a quality score for reporting."""
    ACCEPTABLE = "acceptable"
    NEEDS_INSPECTION = "needs_inspection"
    UNACCEPTABLE = "unacceptable"


# =============================================================================
# TENSORS
# =============================================================================

@dataclass
class Tensor:
    """
    Named, shaped weight array.

    ``data`` is always a private flat float64 copy; ``matrix()`` gives the
    shaped view. Dims may be zero so that empty inputs can be represented
    and rejected by the operations that need elements.
    """
    name: str
    shape: Tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        self.shape = tuple(int(d) for d in self.shape)
        if any(d < 0 for d in self.shape):
            raise InvalidTensor(f"Tensor '{self.name}' has a negative dimension: {self.shape}")
        data = np.array(self.data, dtype=np.float64).reshape(-1)
        if data.size != math.prod(self.shape):
            raise InvalidTensor(
                f"Tensor '{self.name}' has {data.size} values but shape {self.shape} "
                f"needs {math.prod(self.shape)}"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidTensor(f"Tensor '{self.name}' contains NaN or Inf")
        self.data = data

    @classmethod
    def from_array(cls, name: str, array) -> "Tensor":
        """Build a tensor taking the shape from an array-like."""
        array = np.asarray(array, dtype=np.float64)
        return cls(name=name, shape=array.shape, data=array)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def matrix(self) -> np.ndarray:
        """Shaped view over the flat data (shares memory)."""
        return self.data.reshape(self.shape)

    def with_data(self, data) -> "Tensor":
        """Same name and shape, new values."""
        return Tensor(name=self.name, shape=self.shape, data=data)

    def is_constant(self) -> bool:
        return self.size > 0 and bool(np.max(self.data) == np.min(self.data))

    def __repr__(self):
        return f"<Tensor(name='{self.name}', shape={self.shape})>"


# =============================================================================
# QUANTIZATION
# =============================================================================

@dataclass(frozen=True)
class QuantParams:
    """
    Scheme tag plus fitted scale/offset.

    alpha/beta describe the linear map w = alpha * z + beta (in the log
    domain for LogMinMax). ``None`` means "fit from the data when quantizing".
    """
    scheme: QuantScheme
    bits: int
    alpha: Optional[float] = None
    beta: Optional[float] = None
    epsilon: float = 1e-7
    saturation_delta: float = 1e-6

    @property
    def levels(self) -> int:
        """Largest code, 2^k - 1."""
        return (1 << self.bits) - 1

    @property
    def state_count(self) -> int:
        return 1 << self.bits


@dataclass
class QuantOutcome:
    """Quantized tensor, its integer codes and occupancy statistics."""
    quantized: Tensor
    codes: np.ndarray
    l2_error: float
    states_used: int
    state_histogram: Dict[int, int]
    # log-Q only: key is +(code+1) for non-negative weights, -(code+1) otherwise
    signed_histogram: Optional[Dict[int, int]] = None


@dataclass
class EmTrace:
    """Per-iteration (alpha, beta, objective) of an EM fit."""
    iterations: List[Tuple[float, float, float]] = field(default_factory=list)
    converged: bool = False
    steps_taken: int = 0
    degenerate_steps: List[int] = field(default_factory=list)

    @property
    def objectives(self) -> List[float]:
        return [objective for _, _, objective in self.iterations]


# =============================================================================
# NETWORKS
# =============================================================================

@dataclass
class Layer:
    """Affine map followed by an activation. Weight shape is [in, out]."""
    weight: Tensor
    bias: Tensor
    activation: Activation

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class Mlp:
    """Stack of layers holding full-precision master weights."""
    layers: List[Layer]

    @property
    def dims(self) -> List[int]:
        if not self.layers:
            return []
        return [self.layers[0].in_dim] + [layer.out_dim for layer in self.layers]

    def parameters(self) -> List[np.ndarray]:
        """Flat master arrays in (w0, b0, w1, b1, ...) order, shared with the model."""
        arrays = []
        for layer in self.layers:
            arrays.append(layer.weight.data)
            arrays.append(layer.bias.data)
        return arrays


@dataclass(frozen=True)
class QuantSetting:
    """Per-network quantization used in forward passes (QAT)."""
    scheme: QuantScheme
    bits: int


@dataclass
class AdamState:
    """First/second moment buffers for one network."""
    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, arrays: Sequence[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(a) for a in arrays], v=[np.zeros_like(a) for a in arrays])


@dataclass
class GanModel:
    """Generator and discriminator with their optimizer state and QAT settings."""
    generator: Mlp
    discriminator: Mlp
    g_quant: Optional[QuantSetting] = None
    d_quant: Optional[QuantSetting] = None
    g_optimizer: Optional[AdamState] = None
    d_optimizer: Optional[AdamState] = None

    def __post_init__(self):
        if self.g_optimizer is None:
            self.g_optimizer = AdamState.zeros_like(self.generator.parameters())
        if self.d_optimizer is None:
            self.d_optimizer = AdamState.zeros_like(self.discriminator.parameters())

    def __repr__(self):
        return (
            f"<GanModel(g={self.generator.dims}, d={self.discriminator.dims}, "
            f"g_quant={self.g_quant}, d_quant={self.d_quant})>"
        )
