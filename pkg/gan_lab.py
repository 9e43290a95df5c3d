"""
Desk-scale GAN harness.

Small MLP generator/discriminator with hand-written backprop and Adam,
trained on a ring of Gaussians. Under quantization-aware training the
forward passes see per-layer quantized weight copies while gradients update
the full-precision master weights (straight-through estimator).
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from exceptions import ShapeMismatch
from models import Activation, AdamState, GanModel, Layer, Mlp, QualityGrade, QuantSetting, Tensor
from quant_core import fit_quantize
from schemas import GanConfig, HistoryEntry, QualityScore, RingDataset
from seeding import derive_seed, subsystem_rng
from tensor_store import read_weights, write_weights

logger = logging.getLogger(__name__)

LEAKY_SLOPE = 0.2
PROB_CLAMP = 1e-7
ADAM_EPS = 1e-8
COVERAGE_SHARE = 0.02
HQ_SIGMAS = 3.0

ArrayLike = Union[Tensor, np.ndarray]


# =============================================================================
# NETWORK CONSTRUCTION
# =============================================================================

def build_mlp(dims: Sequence[int], hidden: Activation, output: Activation,
              rng: np.random.Generator, prefix: str) -> Mlp:
    """Dense chain over ``dims`` with N(0, 1/fan_in) weights and zero biases."""
    layers = []
    last = len(dims) - 2
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        weight = rng.normal(0.0, 1.0 / np.sqrt(fan_in), (fan_in, fan_out))
        layers.append(Layer(
            weight=Tensor.from_array(f"{prefix}.{i}.w", weight),
            bias=Tensor(name=f"{prefix}.{i}.b", shape=(fan_out,), data=np.zeros(fan_out)),
            activation=output if i == last else hidden,
        ))
    return Mlp(layers=layers)


def init_model(config: GanConfig, rng: np.random.Generator) -> GanModel:
    """Fresh generator (identity output) and discriminator (sigmoid output)."""
    generator = build_mlp(config.gen_layers, Activation.LEAKY_RELU, Activation.IDENTITY, rng, "g")
    discriminator = build_mlp(config.disc_layers, Activation.LEAKY_RELU, Activation.SIGMOID, rng, "d")
    return GanModel(
        generator=generator,
        discriminator=discriminator,
        g_quant=QuantSetting(config.g_scheme, config.g_bits) if config.g_bits else None,
        d_quant=QuantSetting(config.d_scheme, config.d_bits) if config.d_bits else None,
    )


# =============================================================================
# FORWARD / BACKWARD
# =============================================================================

def _activate(pre: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.LEAKY_RELU:
        return np.where(pre > 0, pre, LEAKY_SLOPE * pre)
    if activation == Activation.RELU:
        return np.maximum(pre, 0.0)
    if activation == Activation.TANH:
        return np.tanh(pre)
    if activation == Activation.SIGMOID:
        return 0.5 * (1.0 + np.tanh(0.5 * pre))
    return pre


def _activation_grad(pre: np.ndarray, out: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.LEAKY_RELU:
        return np.where(pre > 0, 1.0, LEAKY_SLOPE)
    if activation == Activation.RELU:
        return (pre > 0).astype(np.float64)
    if activation == Activation.TANH:
        return 1.0 - out * out
    if activation == Activation.SIGMOID:
        return out * (1.0 - out)
    return np.ones_like(pre)


def effective_weights(mlp: Mlp, quant: Optional[QuantSetting]) -> List[np.ndarray]:
    """Weight matrices the forward pass uses: master copies, or per-layer quantized copies."""
    if quant is None:
        return [layer.weight.matrix() for layer in mlp.layers]
    matrices = []
    for layer in mlp.layers:
        _, outcome, _ = fit_quantize(layer.weight, quant.scheme, quant.bits)
        matrices.append(outcome.quantized.matrix())
    return matrices


def _forward(mlp: Mlp, weights: List[np.ndarray], x: np.ndarray):
    if x.ndim != 2 or x.shape[1] != mlp.layers[0].in_dim:
        raise ShapeMismatch(f"Batch of shape {x.shape} does not fit input width {mlp.layers[0].in_dim}")
    cache = []
    with np.errstate(over="ignore", invalid="ignore"):
        for layer, weight in zip(mlp.layers, weights):
            pre = x @ weight + layer.bias.data
            out = _activate(pre, layer.activation)
            cache.append((x, pre, out))
            x = out
    return x, cache


def _backward(mlp: Mlp, weights: List[np.ndarray], cache, grad_out: np.ndarray):
    """Gradients w.r.t. (w0, b0, w1, b1, ...) as flat arrays, plus w.r.t. the input."""
    grads: List[np.ndarray] = [None] * (2 * len(mlp.layers))
    for i in reversed(range(len(mlp.layers))):
        x, pre, out = cache[i]
        delta = grad_out * _activation_grad(pre, out, mlp.layers[i].activation)
        grads[2 * i] = (x.T @ delta).reshape(-1)
        grads[2 * i + 1] = delta.sum(axis=0)
        grad_out = delta @ weights[i].T
    return grads, grad_out


def forward(mlp: Mlp, batch: Tensor, quant: Optional[QuantSetting] = None) -> Tensor:
    """Affine + activation chain over a [n, in_dim] batch."""
    if len(batch.shape) != 2:
        raise ShapeMismatch(f"Batch must be 2-D, got shape {batch.shape}")
    output, _ = _forward(mlp, effective_weights(mlp, quant), batch.matrix())
    return Tensor.from_array("output", output)


# =============================================================================
# LOSSES
# =============================================================================

def _probabilities(values: ArrayLike) -> np.ndarray:
    array = values.matrix() if isinstance(values, Tensor) else np.asarray(values, dtype=np.float64)
    if array.ndim == 2 and array.shape[1] == 1:
        array = array[:, 0]
    if array.ndim != 1 or array.size == 0:
        raise ShapeMismatch(f"Discriminator outputs must be a non-empty column, got shape {array.shape}")
    return array


def gan_losses(d_real: ArrayLike, d_fake: ArrayLike) -> Tuple[float, float]:
    """
    Discriminator loss -mean(log D(x)) - mean(log(1 - D(G(z)))) and the
    non-saturating generator loss -mean(log D(G(z))).
    """
    real = np.clip(_probabilities(d_real), PROB_CLAMP, 1.0 - PROB_CLAMP)
    fake = np.clip(_probabilities(d_fake), PROB_CLAMP, 1.0 - PROB_CLAMP)
    d_loss = float(-np.mean(np.log(real)) - np.mean(np.log(1.0 - fake)))
    g_loss = float(-np.mean(np.log(fake)))
    return d_loss, g_loss


def gan_loss_grads(d_real: ArrayLike, d_fake: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Derivatives w.r.t. the probabilities: (d_loss/d_real, d_loss/d_fake, g_loss/d_fake).
    Clamped entries have zero gradient.
    """
    real = _probabilities(d_real)
    fake = _probabilities(d_fake)
    real_live = (real > PROB_CLAMP) & (real < 1.0 - PROB_CLAMP)
    fake_live = (fake > PROB_CLAMP) & (fake < 1.0 - PROB_CLAMP)
    real_c = np.clip(real, PROB_CLAMP, 1.0 - PROB_CLAMP)
    fake_c = np.clip(fake, PROB_CLAMP, 1.0 - PROB_CLAMP)
    d_real_grad = np.where(real_live, -1.0 / (real.size * real_c), 0.0)
    d_fake_grad = np.where(fake_live, 1.0 / (fake.size * (1.0 - fake_c)), 0.0)
    g_fake_grad = np.where(fake_live, -1.0 / (fake.size * fake_c), 0.0)
    return d_real_grad, d_fake_grad, g_fake_grad


@dataclass
class GanGradients:
    """Both losses and their master-weight gradients at one point."""
    d_loss: float
    g_loss: float
    d_grads: List[np.ndarray]
    g_grads: List[np.ndarray]


def _discriminator_pass(model: GanModel, real: np.ndarray, noise: np.ndarray):
    g_weights = effective_weights(model.generator, model.g_quant)
    d_weights = effective_weights(model.discriminator, model.d_quant)
    fake, _ = _forward(model.generator, g_weights, noise)
    d_real, real_cache = _forward(model.discriminator, d_weights, real)
    d_fake, fake_cache = _forward(model.discriminator, d_weights, fake)
    d_loss, _ = gan_losses(d_real, d_fake)
    real_grad, fake_grad, _ = gan_loss_grads(d_real, d_fake)
    grads_real, _ = _backward(model.discriminator, d_weights, real_cache, real_grad[:, None])
    grads_fake, _ = _backward(model.discriminator, d_weights, fake_cache, fake_grad[:, None])
    return d_loss, [a + b for a, b in zip(grads_real, grads_fake)]


def _generator_pass(model: GanModel, noise: np.ndarray):
    g_weights = effective_weights(model.generator, model.g_quant)
    d_weights = effective_weights(model.discriminator, model.d_quant)
    fake, g_cache = _forward(model.generator, g_weights, noise)
    d_fake, fake_cache = _forward(model.discriminator, d_weights, fake)
    fake_p = _probabilities(d_fake)
    g_loss = float(-np.mean(np.log(np.clip(fake_p, PROB_CLAMP, 1.0 - PROB_CLAMP))))
    _, _, g_grad = gan_loss_grads(fake_p, fake_p)
    _, sample_grad = _backward(model.discriminator, d_weights, fake_cache, g_grad[:, None])
    g_grads, _ = _backward(model.generator, g_weights, g_cache, sample_grad)
    return g_loss, g_grads


def gan_gradients(model: GanModel, real: np.ndarray, noise: np.ndarray) -> GanGradients:
    """Losses and gradients with both networks held at their current weights."""
    d_loss, d_grads = _discriminator_pass(model, real, noise)
    g_loss, g_grads = _generator_pass(model, noise)
    return GanGradients(d_loss=d_loss, g_loss=g_loss, d_grads=d_grads, g_grads=g_grads)


# =============================================================================
# TRAINING
# =============================================================================

def adam_update(params: List[np.ndarray], grads: List[np.ndarray], state: AdamState,
                learning_rate: float, beta1: float, beta2: float) -> None:
    """In-place Adam step on the master arrays."""
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        param -= learning_rate * (m / correction1) / (np.sqrt(v / correction2) + ADAM_EPS)


def _check_dims(model: GanModel, config: GanConfig) -> None:
    if model.generator.dims != list(config.gen_layers) or model.discriminator.dims != list(config.disc_layers):
        raise ShapeMismatch(
            f"Model dims g={model.generator.dims} d={model.discriminator.dims} do not match "
            f"config g={config.gen_layers} d={config.disc_layers}"
        )


def train_step(model: GanModel, config: GanConfig, rng: np.random.Generator,
               dataset: Optional[RingDataset] = None) -> Tuple[float, float]:
    """
    One discriminator update then one generator update.

    Draw order from ``rng``: real batch, discriminator noise, generator noise.
    The generator loss is measured against the freshly updated discriminator.
    """
    _check_dims(model, config)
    dataset = dataset or RingDataset()
    real = sample_ring(dataset, config.batch_size, rng)
    noise = rng.standard_normal((config.batch_size, config.noise_dim))
    d_loss, d_grads = _discriminator_pass(model, real, noise)
    adam_update(model.discriminator.parameters(), d_grads, model.d_optimizer,
                config.learning_rate, config.adam_beta1, config.adam_beta2)

    noise = rng.standard_normal((config.batch_size, config.noise_dim))
    g_loss, g_grads = _generator_pass(model, noise)
    adam_update(model.generator.parameters(), g_grads, model.g_optimizer,
                config.learning_rate, config.adam_beta1, config.adam_beta2)
    return d_loss, g_loss


def train(config: GanConfig, dataset: RingDataset) -> Tuple[GanModel, List[HistoryEntry]]:
    """
    Train from scratch. Initialization, batches and evaluation noise come from
    separate streams of ``config.seed``; history holds one entry every
    ``eval_interval`` steps plus the final step.
    """
    model = init_model(config, subsystem_rng(config.seed, "init"))
    rng = subsystem_rng(config.seed, "training")
    eval_seed = derive_seed(config.seed, "evaluation")
    history: List[HistoryEntry] = []

    for step in range(1, config.steps + 1):
        d_loss, g_loss = train_step(model, config, rng, dataset)
        if step % config.eval_interval == 0 or step == config.steps:
            score = evaluate_quality(model, dataset, config.eval_samples, eval_seed)
            history.append(HistoryEntry(step=step, d_loss=d_loss, g_loss=g_loss, score=score))
            logger.info("step %d: d_loss=%.4f g_loss=%.4f score=%.3f", step, d_loss, g_loss, score.score)
    return model, history


# =============================================================================
# DATA AND QUALITY
# =============================================================================

def mode_centers(dataset: RingDataset) -> np.ndarray:
    """[mode_count, 2] centers equally spaced on the circle, mode 0 at angle 0."""
    angles = 2.0 * np.pi * np.arange(dataset.mode_count) / dataset.mode_count
    return dataset.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def sample_ring(dataset: RingDataset, n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Mode center plus N(0, sigma^2) noise; uses the dataset seed when no rng is given."""
    rng = rng if rng is not None else subsystem_rng(dataset.seed, "data")
    modes = rng.integers(0, dataset.mode_count, n)
    return mode_centers(dataset)[modes] + rng.normal(0.0, dataset.sigma, (n, 2))


def score_samples(samples: np.ndarray, dataset: RingDataset) -> QualityScore:
    """
    Mode-coverage score of 2-D samples.

    A sample is high quality when both coordinates lie within 3 sigma of some
    mode center; a mode is covered when at least 2% of the samples are high
    quality for it.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ShapeMismatch(f"Samples must be [n, 2], got {samples.shape}")
    with np.errstate(invalid="ignore"):
        distance = np.max(np.abs(samples[:, None, :] - mode_centers(dataset)[None, :, :]), axis=2)
        near = distance <= HQ_SIGMAS * dataset.sigma
    hq_fraction = float(np.mean(np.any(near, axis=1)))
    covered = int(np.sum(near.sum(axis=0) >= COVERAGE_SHARE * len(samples)))
    return QualityScore(
        covered_modes=covered,
        mode_count=dataset.mode_count,
        hq_fraction=hq_fraction,
        score=covered / dataset.mode_count * hq_fraction,
    )


def evaluate_quality(model: GanModel, dataset: RingDataset, n_samples: int = 5000, seed: int = 0) -> QualityScore:
    """Score ``n_samples`` generator outputs drawn with noise from ``seed``."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_samples, model.generator.layers[0].in_dim))
    samples, _ = _forward(model.generator, effective_weights(model.generator, model.g_quant), noise)
    return score_samples(samples, dataset)


def grade_quality(score: float, acceptable: float = 0.6, unacceptable: float = 0.4) -> QualityGrade:
    """Band a score: acceptable above the bar, unacceptable below the floor, else inspect."""
    if score >= acceptable:
        return QualityGrade.ACCEPTABLE
    if score < unacceptable:
        return QualityGrade.UNACCEPTABLE
    return QualityGrade.NEEDS_INSPECTION


# =============================================================================
# CHECKPOINTS
# =============================================================================

def _named_tensors(model: GanModel) -> List[Tensor]:
    tensors = []
    for mlp in (model.generator, model.discriminator):
        for layer in mlp.layers:
            tensors.extend([layer.weight, layer.bias])
    return tensors


def save_checkpoint(model: GanModel, path: Union[str, Path]) -> None:
    """Master weights as a QGW1 archive (g.0.w, g.0.b, ..., d.0.w, ...)."""
    write_weights(path, _named_tensors(model))


def load_checkpoint(path: Union[str, Path], config: GanConfig) -> GanModel:
    """Model shaped by ``config`` with master weights read from ``path``."""
    model = init_model(config, np.random.default_rng(0))
    stored = {tensor.name: tensor for tensor in read_weights(path)}
    for target in _named_tensors(model):
        source = stored.get(target.name)
        if source is None or source.shape != target.shape:
            raise ShapeMismatch(f"Checkpoint {path} has no tensor '{target.name}' of shape {target.shape}")
        target.data[:] = source.data
    return model
