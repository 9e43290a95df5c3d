"""
Weight quantizers: minmax, log-minmax, tanh, and the EM-fitted linear quantizer.

All schemes follow the same pipeline: scale the weights into [0, 2^k - 1],
round to integer codes, and rescale the codes back to reals. Rounding is
half-away-from-zero everywhere. Every function here is pure.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from exceptions import DegenerateCodes, EmptyTensor, InvalidParams, ZeroRange
from models import EmTrace, QuantOutcome, QuantParams, QuantScheme, Tensor
from schemas import UtilizationReport

logger = logging.getLogger(__name__)

MIN_BITS = 1
MAX_BITS = 16
DEFAULT_EPSILON = 1e-7
DEFAULT_DELTA = 1e-6
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-9

LINEAR_SCHEMES = (QuantScheme.MIN_MAX, QuantScheme.EM_LINEAR)


# =============================================================================
# HELPERS
# =============================================================================

def round_half_away(values: np.ndarray) -> np.ndarray:
    """Round to nearest integer, ties away from zero."""
    values = np.asarray(values, dtype=np.float64)
    magnitude = np.abs(values)
    whole = np.floor(magnitude)
    rounded = whole + (magnitude - whole >= 0.5)
    return np.copysign(rounded, values)


def _check_bits(bits: int) -> None:
    if isinstance(bits, bool) or int(bits) != bits or not MIN_BITS <= bits <= MAX_BITS:
        raise InvalidParams(f"bits must be an integer in [{MIN_BITS}, {MAX_BITS}], got {bits}")


def _require_elements(input: Tensor) -> None:
    if input.size == 0:
        raise EmptyTensor(f"Tensor '{input.name}' has no elements")


def _levels(bits: int) -> int:
    return (1 << bits) - 1


def _linear_codes(values: np.ndarray, alpha: float, beta: float, levels: int) -> np.ndarray:
    codes = round_half_away((values - beta) / alpha)
    return np.clip(codes, 0, levels).astype(np.int64)


def _reconstruct(codes: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    return alpha * codes.astype(np.float64) + beta


def _objective(values: np.ndarray, codes: np.ndarray, alpha: float, beta: float) -> float:
    return float(np.sum((values - _reconstruct(codes, alpha, beta)) ** 2))


def _histogram(labels: np.ndarray) -> dict:
    keys, counts = np.unique(labels, return_counts=True)
    return {int(k): int(c) for k, c in zip(keys, counts)}


def _outcome(input: Tensor, quantized_data: np.ndarray, codes: np.ndarray,
             signs: Optional[np.ndarray] = None) -> QuantOutcome:
    quantized = input.with_data(quantized_data)
    histogram = _histogram(codes)
    signed = None
    if signs is not None:
        signed = _histogram(signs.astype(np.int64) * (codes + 1))
    return QuantOutcome(
        quantized=quantized,
        codes=codes,
        l2_error=float(np.sum((input.data - quantized.data) ** 2)),
        states_used=len(histogram),
        state_histogram=histogram,
        signed_histogram=signed,
    )


def _identity_outcome(input: Tensor, signed: bool = False) -> QuantOutcome:
    """Constant tensors are represented exactly by a single state."""
    codes = np.zeros(input.size, dtype=np.int64)
    signs = np.where(input.data < 0, -1, 1) if signed else None
    return _outcome(input, input.data.copy(), codes, signs)


def _validate(params: QuantParams) -> None:
    _check_bits(params.bits)
    if params.scheme == QuantScheme.LOG_MIN_MAX and not params.epsilon > 0:
        raise InvalidParams(f"epsilon must be > 0, got {params.epsilon}")
    if params.scheme == QuantScheme.TANH and not 0 < params.saturation_delta < 1:
        raise InvalidParams(f"saturation_delta must be in (0, 1), got {params.saturation_delta}")


def _check_scale(alpha: Optional[float], beta: Optional[float], scheme: QuantScheme) -> None:
    if alpha is None or beta is None or not np.isfinite(beta) or not (alpha > 0 and np.isfinite(alpha)):
        raise InvalidParams(f"{scheme.value} quantization needs a finite alpha > 0, got alpha={alpha}, beta={beta}")


# =============================================================================
# BASELINE QUANTIZERS
# =============================================================================

def minmax_scale(input: Tensor, k: int) -> Tuple[np.ndarray, float, float]:
    """
    Scale by the data range into [0, 2^k - 1].

    Returns the scaled values and the equivalent linear parameters, so that
    scaled = (x - beta) / alpha. Raises ZeroRange on constant input.
    """
    _require_elements(input)
    _check_bits(k)
    lo = float(np.min(input.data))
    hi = float(np.max(input.data))
    if hi == lo:
        raise ZeroRange(f"Tensor '{input.name}' is constant ({lo}); range scaling is undefined")
    levels = _levels(k)
    scaled = (input.data - lo) / (hi - lo) * levels
    return scaled, (hi - lo) / levels, lo


def _log_domain(input: Tensor, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    signs = np.where(input.data < 0, -1.0, 1.0)
    return signs, np.log(np.abs(input.data) + epsilon)


def _fit_log(input: Tensor, bits: int, epsilon: float) -> Tuple[float, float]:
    _, magnitudes = _log_domain(input, epsilon)
    lo = float(np.min(magnitudes))
    hi = float(np.max(magnitudes))
    if hi == lo:
        # all magnitudes equal: one log-domain state reproduces them
        return 1.0, lo
    return (hi - lo) / _levels(bits), lo


def _apply_log(input: Tensor, params: QuantParams) -> QuantOutcome:
    if input.is_constant():
        return _identity_outcome(input, signed=True)
    alpha, beta = params.alpha, params.beta
    if alpha is None:
        alpha, beta = _fit_log(input, params.bits, params.epsilon)
    _check_scale(alpha, beta, params.scheme)
    signs, magnitudes = _log_domain(input, params.epsilon)
    codes = _linear_codes(magnitudes, alpha, beta, params.levels)
    restored = np.maximum(np.exp(_reconstruct(codes, alpha, beta)) - params.epsilon, 0.0)
    return _outcome(input, signs * restored, codes, signs)


def _apply_tanh(input: Tensor, params: QuantParams) -> QuantOutcome:
    levels = params.levels
    delta = params.saturation_delta
    scaled = (np.tanh(input.data) + 1.0) / 2.0 * levels
    codes = np.clip(round_half_away(scaled), 0, levels).astype(np.int64)
    # arctanh(+-1) is infinite; clamp keeps outputs finite
    argument = np.clip(2.0 * codes / levels - 1.0, -1.0 + delta, 1.0 - delta)
    return _outcome(input, np.arctanh(argument), codes)


def _apply_linear(input: Tensor, params: QuantParams) -> QuantOutcome:
    if input.is_constant():
        return _identity_outcome(input)
    if params.alpha is None:
        params, _ = fit_params(input, params.scheme, params.bits)
    _check_scale(params.alpha, params.beta, params.scheme)
    codes = _linear_codes(input.data, params.alpha, params.beta, params.levels)
    return _outcome(input, _reconstruct(codes, params.alpha, params.beta), codes)


def quantize(input: Tensor, params: QuantParams) -> QuantOutcome:
    """
    Scale, discretize and rescale ``input`` under ``params``.

    With fixed alpha/beta the operation is idempotent: quantizing the output
    again returns it unchanged. Constant tensors come back unchanged for the
    range-based schemes.
    """
    _require_elements(input)
    _validate(params)
    if params.scheme in LINEAR_SCHEMES:
        return _apply_linear(input, params)
    if params.scheme == QuantScheme.LOG_MIN_MAX:
        return _apply_log(input, params)
    return _apply_tanh(input, params)


def log_quantize(input: Tensor, k: int, epsilon: float = DEFAULT_EPSILON) -> QuantOutcome:
    """Minmax quantization of log magnitudes, signs reattached (sign(0) = +1)."""
    _require_elements(input)
    if not epsilon > 0:
        raise InvalidParams(f"epsilon must be > 0, got {epsilon}")
    params, _ = fit_params(input, QuantScheme.LOG_MIN_MAX, k, epsilon=epsilon)
    return quantize(input, params)


def tanh_quantize(input: Tensor, k: int, saturation_delta: float = DEFAULT_DELTA) -> QuantOutcome:
    """Quantize tanh-squashed weights; endpoint codes rescale to +-arctanh(1 - delta)."""
    _require_elements(input)
    params = QuantParams(scheme=QuantScheme.TANH, bits=k, saturation_delta=saturation_delta)
    return quantize(input, params)


# =============================================================================
# EM LINEAR QUANTIZER
# =============================================================================

def em_estep(input: Tensor, alpha: float, beta: float, k: int) -> np.ndarray:
    """Best codes for fixed (alpha, beta): nearest integer in [0, 2^k - 1]."""
    _check_bits(k)
    if not (alpha > 0 and np.isfinite(alpha)):
        raise InvalidParams(f"alpha must be > 0, got {alpha}")
    return _linear_codes(input.data, alpha, beta, _levels(k))


def em_mstep(input: Tensor, codes) -> Tuple[float, float]:
    """Least-squares (alpha, beta) for fixed codes."""
    codes = np.asarray(codes)
    if codes.shape != (input.size,):
        raise InvalidParams(f"Expected {input.size} codes, got {codes.shape}")
    _require_elements(input)
    if np.all(codes == codes[0]):
        raise DegenerateCodes("All codes are equal; the slope is undefined")
    z = codes.astype(np.float64)
    w = input.data
    z_mean = float(np.mean(z))
    w_mean = float(np.mean(w))
    centered = z - z_mean
    alpha = float(np.mean((w - w_mean) * centered) / np.mean(centered * centered))
    return alpha, w_mean - alpha * z_mean


def em_fit(input: Tensor, k: int, max_iter: int = DEFAULT_MAX_ITER,
           tol: float = DEFAULT_TOL) -> Tuple[QuantParams, QuantOutcome, EmTrace]:
    """
    Fit w ~ alpha * z + beta minimizing the L2 reconstruction error.

    Starts from the minmax parameters and alternates E-steps (rounding) and
    M-steps (least squares). Stops when codes stop changing, the relative
    objective improvement drops below ``tol``, or after ``max_iter`` steps.
    The objective never increases, so the result is never worse than minmax.
    """
    _require_elements(input)
    _check_bits(k)
    if max_iter < 1:
        raise InvalidParams(f"max_iter must be >= 1, got {max_iter}")
    if not tol > 0:
        raise InvalidParams(f"tol must be > 0, got {tol}")

    w = input.data
    if input.is_constant():
        constant = float(w[0])
        params = QuantParams(scheme=QuantScheme.EM_LINEAR, bits=k, alpha=1.0, beta=constant)
        trace = EmTrace(iterations=[(1.0, constant, 0.0)], converged=True, steps_taken=0)
        return params, _identity_outcome(input), trace

    levels = _levels(k)
    _, alpha, beta = minmax_scale(input, k)
    codes = _linear_codes(w, alpha, beta, levels)
    objective = _objective(w, codes, alpha, beta)
    trace = EmTrace(iterations=[(alpha, beta, objective)])

    for step in range(1, max_iter + 1):
        try:
            new_alpha, new_beta = em_mstep(input, codes)
        except DegenerateCodes:
            new_alpha = None
        if new_alpha is None or not (new_alpha > 0 and np.isfinite(new_alpha)):
            # keep the slope, re-center the offset
            new_alpha = alpha
            new_beta = float(np.mean(w) - alpha * np.mean(codes))
            trace.degenerate_steps.append(step)

        new_codes = _linear_codes(w, new_alpha, new_beta, levels)
        new_objective = _objective(w, new_codes, new_alpha, new_beta)
        if new_objective > objective:
            # rounding noise only; the previous point is the fixed point
            trace.converged = True
            break

        unchanged = np.array_equal(new_codes, codes)
        improvement = (objective - new_objective) / objective if objective > 0 else 0.0
        alpha, beta, codes, objective = new_alpha, new_beta, new_codes, new_objective
        trace.iterations.append((alpha, beta, objective))
        if unchanged or improvement < tol:
            trace.converged = True
            break

    trace.steps_taken = len(trace.iterations) - 1
    logger.debug(
        "em_fit %s k=%d: %d steps, converged=%s, objective=%.6g",
        input.name, k, trace.steps_taken, trace.converged, objective,
    )
    params = QuantParams(scheme=QuantScheme.EM_LINEAR, bits=k, alpha=alpha, beta=beta)
    return params, quantize(input, params), trace


# =============================================================================
# FITTING FRONT END
# =============================================================================

def fit_params(input: Tensor, scheme: QuantScheme, bits: int,
               epsilon: float = DEFAULT_EPSILON,
               saturation_delta: float = DEFAULT_DELTA,
               max_iter: int = DEFAULT_MAX_ITER,
               tol: float = DEFAULT_TOL) -> Tuple[QuantParams, Optional[EmTrace]]:
    """Data-derived parameters for ``scheme``; the EM trace is returned for EmLinear."""
    _require_elements(input)
    _check_bits(bits)
    common = dict(scheme=scheme, bits=bits, epsilon=epsilon, saturation_delta=saturation_delta)

    if scheme == QuantScheme.EM_LINEAR:
        params, _, trace = em_fit(input, bits, max_iter=max_iter, tol=tol)
        return QuantParams(alpha=params.alpha, beta=params.beta, **common), trace
    if scheme == QuantScheme.MIN_MAX:
        if input.is_constant():
            return QuantParams(alpha=1.0, beta=float(input.data[0]), **common), None
        _, alpha, beta = minmax_scale(input, bits)
        return QuantParams(alpha=alpha, beta=beta, **common), None
    if scheme == QuantScheme.LOG_MIN_MAX:
        if not epsilon > 0:
            raise InvalidParams(f"epsilon must be > 0, got {epsilon}")
        alpha, beta = _fit_log(input, bits, epsilon)
        return QuantParams(alpha=alpha, beta=beta, **common), None
    return QuantParams(**common), None


def fit_quantize(input: Tensor, scheme: QuantScheme, bits: int,
                 epsilon: float = DEFAULT_EPSILON,
                 saturation_delta: float = DEFAULT_DELTA,
                 max_iter: int = DEFAULT_MAX_ITER,
                 tol: float = DEFAULT_TOL) -> Tuple[QuantParams, QuantOutcome, Optional[EmTrace]]:
    """Fit parameters for ``scheme`` and quantize with them."""
    params, trace = fit_params(
        input, scheme, bits,
        epsilon=epsilon, saturation_delta=saturation_delta, max_iter=max_iter, tol=tol,
    )
    return params, quantize(input, params), trace


def state_values(params: QuantParams) -> np.ndarray:
    """
    Reconstruction value of every code 0 .. 2^k - 1.

    For log-minmax these are magnitudes; the sign comes from the weight.
    """
    _validate(params)
    codes = np.arange(params.state_count, dtype=np.int64)
    if params.scheme == QuantScheme.TANH:
        argument = np.clip(2.0 * codes / params.levels - 1.0,
                           -1.0 + params.saturation_delta, 1.0 - params.saturation_delta)
        return np.arctanh(argument)
    _check_scale(params.alpha, params.beta, params.scheme)
    values = _reconstruct(codes, params.alpha, params.beta)
    if params.scheme == QuantScheme.LOG_MIN_MAX:
        return np.maximum(np.exp(values) - params.epsilon, 0.0)
    return values


# =============================================================================
# UTILIZATION
# =============================================================================

def quant_report(outcome: QuantOutcome, bits: int) -> UtilizationReport:
    """Occupancy statistics of the quantized states."""
    _check_bits(bits)
    counts = np.array(list(outcome.state_histogram.values()), dtype=np.float64)
    total = float(np.sum(counts))
    probabilities = counts / total
    entropy = float(-np.sum(probabilities * np.log(probabilities))) + 0.0
    levels = _levels(bits)
    extremes = outcome.state_histogram.get(0, 0) + outcome.state_histogram.get(levels, 0)
    return UtilizationReport(
        bits=bits,
        state_count=levels + 1,
        states_used=outcome.states_used,
        entropy=max(entropy, 0.0),
        extremum_mass=extremes / total,
        l2_error=outcome.l2_error,
    )
