"""Toy GAN harness: forward pass, losses, gradients, training and the quality metric."""
import copy
import math

import numpy as np
import pytest

from exceptions import ShapeMismatch
from gan_lab import (
    build_mlp, effective_weights, evaluate_quality, forward, gan_gradients, gan_loss_grads, gan_losses,
    grade_quality, init_model, load_checkpoint, mode_centers, sample_ring, save_checkpoint, score_samples,
    train, train_step,
)
from models import Activation, GanModel, Layer, Mlp, QualityGrade, QuantScheme, QuantSetting, Tensor
from schemas import GanConfig, RingDataset

SMALL = dict(gen_layers=[2, 16, 2], disc_layers=[2, 16, 1], batch_size=32, eval_samples=200)


def _reference_forward(mlp, x):
    """Straight-line forward pass written independently of the library."""
    for layer in mlp.layers:
        a = x @ layer.weight.matrix() + layer.bias.data
        if layer.activation == Activation.LEAKY_RELU:
            x = np.maximum(a, 0.0) + 0.2 * np.minimum(a, 0.0)
        elif layer.activation == Activation.RELU:
            x = np.maximum(a, 0.0)
        elif layer.activation == Activation.TANH:
            x = np.tanh(a)
        elif layer.activation == Activation.SIGMOID:
            x = 1.0 / (1.0 + np.exp(-a))
        else:
            x = a
    return x


def _smooth_model(seed):
    """Small model with differentiable activations everywhere, for finite differences."""
    rng = np.random.default_rng(seed)
    generator = build_mlp([2, 5, 2], Activation.TANH, Activation.IDENTITY, rng, "g")
    discriminator = build_mlp([2, 4, 3, 1], Activation.TANH, Activation.SIGMOID, rng, "d")
    return GanModel(generator=generator, discriminator=discriminator)


def _random_smooth_model(seed):
    """Smooth model with one or two hidden layers of random width in 2..16."""
    rng = np.random.default_rng(seed)

    def dims(out):
        hidden = rng.integers(2, 17, size=int(rng.integers(1, 3))).tolist()
        return [2, *hidden, out]

    generator = build_mlp(dims(2), Activation.TANH, Activation.IDENTITY, rng, "g")
    discriminator = build_mlp(dims(1), Activation.TANH, Activation.SIGMOID, rng, "d")
    return GanModel(generator=generator, discriminator=discriminator)


def _constant_generator(point):
    """Generator whose output is ``point`` for every noise vector."""
    rng = np.random.default_rng(0)
    generator = build_mlp([2, 8, 2], Activation.LEAKY_RELU, Activation.IDENTITY, rng, "g")
    for layer in generator.layers:
        layer.weight.data[:] = 0.0
    generator.layers[-1].bias.data[:] = point
    discriminator = build_mlp([2, 8, 1], Activation.LEAKY_RELU, Activation.SIGMOID, rng, "d")
    return GanModel(generator=generator, discriminator=discriminator)


class TestForward:
    def test_identity_layer(self):
        mlp = Mlp(layers=[Layer(
            weight=Tensor.from_array("w", np.eye(2)),
            bias=Tensor.from_array("b", np.zeros(2)),
            activation=Activation.IDENTITY,
        )])
        out = forward(mlp, Tensor.from_array("x", [[1.0, 2.0]]))
        np.testing.assert_array_equal(out.matrix(), [[1.0, 2.0]])

    def test_zero_weights_sigmoid(self):
        mlp = Mlp(layers=[Layer(
            weight=Tensor.from_array("w", np.zeros((3, 1))),
            bias=Tensor.from_array("b", np.zeros(1)),
            activation=Activation.SIGMOID,
        )])
        out = forward(mlp, Tensor.from_array("x", np.random.default_rng(1).normal(size=(5, 3))))
        np.testing.assert_array_equal(out.data, 0.5)

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(5)
        mlp = build_mlp([2, 16, 1], Activation.LEAKY_RELU, Activation.SIGMOID, rng, "d")
        batch = rng.normal(size=(10, 2))
        out = forward(mlp, Tensor.from_array("x", batch))
        np.testing.assert_allclose(out.matrix(), _reference_forward(mlp, batch), rtol=1e-12, atol=1e-15)

    def test_width_mismatch(self):
        mlp = build_mlp([2, 4, 1], Activation.RELU, Activation.SIGMOID, np.random.default_rng(0), "d")
        with pytest.raises(ShapeMismatch):
            forward(mlp, Tensor.from_array("x", np.zeros((4, 3))))

    def test_quantized_forward_uses_few_states(self):
        mlp = build_mlp([2, 16, 2], Activation.LEAKY_RELU, Activation.IDENTITY, np.random.default_rng(2), "g")
        for matrix in effective_weights(mlp, QuantSetting(QuantScheme.EM_LINEAR, 1)):
            assert len(np.unique(matrix)) <= 2


class TestLosses:
    def test_maximum_confusion(self):
        """D = 0.5 everywhere gives 2 ln 2 and ln 2."""
        d_loss, g_loss = gan_losses(np.full(8, 0.5), np.full(8, 0.5))
        assert d_loss == pytest.approx(2 * math.log(2), abs=1e-15)
        assert g_loss == pytest.approx(math.log(2), abs=1e-15)

    def test_clamped_extremes(self):
        d_loss, g_loss = gan_losses(np.ones(4), np.zeros(4))
        assert d_loss == pytest.approx(2e-7, rel=1e-3)
        assert g_loss == pytest.approx(-math.log(1e-7))
        assert g_loss == pytest.approx(16.118, abs=1e-3)

    def test_column_outputs_accepted(self):
        d_loss, _ = gan_losses(np.full((3, 1), 0.5), np.full((3, 1), 0.5))
        assert d_loss == pytest.approx(2 * math.log(2))

    def test_empty_outputs(self):
        with pytest.raises(ShapeMismatch):
            gan_losses(np.array([]), np.array([0.5]))

    def test_logit_gradient_matches_finite_differences(self):
        """d(d_loss)/d(logit) by the chain rule vs central differences."""
        rng = np.random.default_rng(8)
        real_logits = rng.uniform(-2, 2, 6)
        fake_logits = rng.uniform(-2, 2, 6)

        def sigmoid(x):
            return 1.0 / (1.0 + np.exp(-x))

        real_p, fake_p = sigmoid(real_logits), sigmoid(fake_logits)
        grad_real, grad_fake, _ = gan_loss_grads(real_p, fake_p)
        analytic = np.concatenate([grad_real * real_p * (1 - real_p), grad_fake * fake_p * (1 - fake_p)])

        logits = np.concatenate([real_logits, fake_logits])
        numeric = np.zeros_like(logits)
        h = 1e-5
        for i in range(logits.size):
            up, down = logits.copy(), logits.copy()
            up[i] += h
            down[i] -= h
            loss_up = gan_losses(sigmoid(up[:6]), sigmoid(up[6:]))[0]
            loss_down = gan_losses(sigmoid(down[:6]), sigmoid(down[6:]))[0]
            numeric[i] = (loss_up - loss_down) / (2 * h)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-10)


class TestGradients:
    @staticmethod
    def _losses(model, real, noise):
        fake = _reference_forward(model.generator, noise)
        d_fake = _reference_forward(model.discriminator, fake)
        d_real = _reference_forward(model.discriminator, real)
        return gan_losses(d_real, d_fake)

    @pytest.mark.parametrize("seed", range(50))
    def test_parameter_gradients_match_finite_differences(self, seed):
        """Every analytic gradient of both losses agrees with central differences on 50 random MLPs."""
        model = _random_smooth_model(seed)
        rng = np.random.default_rng(100 + seed)
        real = rng.normal(size=(8, 2))
        noise = rng.normal(size=(8, 2))
        grads = gan_gradients(model, real, noise)

        h = 1e-5
        cases = [(model.discriminator, grads.d_grads, 0), (model.generator, grads.g_grads, 1)]
        for mlp, analytic, loss_index in cases:
            for param, grad in zip(mlp.parameters(), analytic):
                for j in range(param.size):
                    saved = param[j]
                    param[j] = saved + h
                    loss_up = self._losses(model, real, noise)[loss_index]
                    param[j] = saved - h
                    loss_down = self._losses(model, real, noise)[loss_index]
                    param[j] = saved
                    numeric = (loss_up - loss_down) / (2 * h)
                    assert abs(grad[j] - numeric) <= max(1e-8, 1e-5 * max(abs(grad[j]), abs(numeric)))

    def test_losses_match_reference(self):
        model = _smooth_model(3)
        rng = np.random.default_rng(4)
        real, noise = rng.normal(size=(16, 2)), rng.normal(size=(16, 2))
        grads = gan_gradients(model, real, noise)
        d_loss, g_loss = self._losses(model, real, noise)
        assert grads.d_loss == pytest.approx(d_loss, abs=1e-10)
        assert grads.g_loss == pytest.approx(g_loss, abs=1e-10)


class TestTrainStep:
    def test_zero_learning_rate_keeps_weights(self):
        config = GanConfig(learning_rate=0.0, **SMALL)
        model = init_model(config, np.random.default_rng(0))
        before = [p.copy() for p in model.generator.parameters() + model.discriminator.parameters()]
        train_step(model, config, np.random.default_rng(1))
        after = model.generator.parameters() + model.discriminator.parameters()
        for old, new in zip(before, after):
            np.testing.assert_array_equal(old, new)

    def test_discriminator_loss_matches_reference(self):
        """The reported D loss is the pre-update loss on the step's batches."""
        config = GanConfig(**SMALL)
        dataset = RingDataset()
        model = init_model(config, np.random.default_rng(0))
        snapshot = copy.deepcopy(model)

        d_loss, g_loss = train_step(model, config, np.random.default_rng(9), dataset)

        rng = np.random.default_rng(9)
        real = sample_ring(dataset, config.batch_size, rng)
        noise = rng.standard_normal((config.batch_size, config.noise_dim))
        d_real = _reference_forward(snapshot.discriminator, real)
        d_fake = _reference_forward(snapshot.discriminator, _reference_forward(snapshot.generator, noise))
        assert d_loss == pytest.approx(gan_losses(d_real, d_fake)[0], abs=1e-10)
        assert math.isfinite(g_loss)

    def test_mismatched_model(self):
        model = init_model(GanConfig(**SMALL), np.random.default_rng(0))
        with pytest.raises(ShapeMismatch):
            train_step(model, GanConfig(), np.random.default_rng(0))

    def test_master_weights_stay_full_precision(self):
        """Under 1-bit QAT the forward copies have 2 states, the masters many more."""
        config = GanConfig(d_bits=1, g_bits=1, **SMALL)
        model = init_model(config, np.random.default_rng(0))
        rng = np.random.default_rng(1)
        for _ in range(5):
            train_step(model, config, rng)
        for mlp, quant in ((model.generator, model.g_quant), (model.discriminator, model.d_quant)):
            for layer, matrix in zip(mlp.layers, effective_weights(mlp, quant)):
                assert len(np.unique(matrix)) <= 2
                if layer.weight.size > 2:
                    assert len(np.unique(layer.weight.data)) > 2


class TestTrain:
    def test_zero_steps(self):
        model, history = train(GanConfig(steps=0, **SMALL), RingDataset())
        assert history == []
        assert model.generator.dims == [2, 16, 2]

    def test_history_cadence(self):
        _, history = train(GanConfig(steps=25, eval_interval=10, **SMALL), RingDataset())
        assert [entry.step for entry in history] == [10, 20, 25]

    def test_deterministic(self):
        config = GanConfig(steps=20, eval_interval=10, d_bits=2, **SMALL)
        _, first = train(config, RingDataset())
        _, second = train(config, RingDataset())
        assert first == second

    def test_checkpoint_round_trip(self, tmp_path):
        config = GanConfig(steps=5, **SMALL)
        model, _ = train(config, RingDataset())
        path = tmp_path / "checkpoint.qgw"
        save_checkpoint(model, path)
        restored = load_checkpoint(path, config)
        for original, back in zip(model.generator.parameters() + model.discriminator.parameters(),
                                  restored.generator.parameters() + restored.discriminator.parameters()):
            np.testing.assert_array_equal(back, original.astype(np.float32).astype(np.float64))

    def test_checkpoint_shape_mismatch(self, tmp_path):
        model, _ = train(GanConfig(steps=0, **SMALL), RingDataset())
        path = tmp_path / "checkpoint.qgw"
        save_checkpoint(model, path)
        with pytest.raises(ShapeMismatch):
            load_checkpoint(path, GanConfig())


class TestQuality:
    def test_constant_point_on_one_mode(self):
        model = _constant_generator([2.0, 0.0])
        score = evaluate_quality(model, RingDataset(), n_samples=500, seed=0)
        assert (score.covered_modes, score.hq_fraction) == (1, 1.0)
        assert score.score == pytest.approx(0.125)

    def test_zero_generator(self):
        model = _constant_generator([0.0, 0.0])
        assert evaluate_quality(model, RingDataset(), n_samples=500).score <= 0.125

    def test_ideal_sampler(self):
        dataset = RingDataset()
        score = score_samples(sample_ring(dataset, 5000, np.random.default_rng(3)), dataset)
        assert score.covered_modes == 8
        assert score.hq_fraction >= 0.99
        assert score.score >= 0.99

    def test_mode_centers_on_circle(self):
        centers = mode_centers(RingDataset(mode_count=4, radius=3.0))
        np.testing.assert_allclose(np.hypot(centers[:, 0], centers[:, 1]), 3.0)
        np.testing.assert_allclose(centers[0], [3.0, 0.0])

    def test_sample_ring_uses_dataset_seed(self):
        dataset = RingDataset(seed=5)
        np.testing.assert_array_equal(sample_ring(dataset, 10), sample_ring(dataset, 10))

    def test_samples_must_be_points(self):
        with pytest.raises(ShapeMismatch):
            score_samples(np.zeros((4, 3)), RingDataset())

    @pytest.mark.parametrize("score,grade", [
        (0.9, QualityGrade.ACCEPTABLE),
        (0.6, QualityGrade.ACCEPTABLE),
        (0.5, QualityGrade.NEEDS_INSPECTION),
        (0.4, QualityGrade.NEEDS_INSPECTION),
        (0.1, QualityGrade.UNACCEPTABLE),
    ])
    def test_grades(self, score, grade):
        assert grade_quality(score) == grade


@pytest.mark.slow
class TestCalibratedRuns:
    """Seed-pinned 4000-step runs at the default configuration; see DESIGN.md for calibration."""

    def test_full_precision_reaches_quality(self):
        _, history = train(GanConfig(seed=42), RingDataset())
        final = history[-1].score
        assert final.score >= 0.6
        assert final.covered_modes >= 6

    @pytest.mark.parametrize("scheme", [QuantScheme.EM_LINEAR, QuantScheme.MIN_MAX])
    def test_two_bit_runs_stay_finite(self, scheme):
        config = GanConfig(seed=42, d_bits=2, g_bits=2, d_scheme=scheme, g_scheme=scheme)
        _, history = train(config, RingDataset())
        assert len(history) == config.steps // config.eval_interval
        for entry in history:
            assert math.isfinite(entry.d_loss) and math.isfinite(entry.g_loss)
            assert 0.0 <= entry.score.score <= 1.0

    @pytest.mark.xfail(strict=False, reason="quantized thresholds not yet measured at lr 1e-3")
    def test_em_two_bit_beats_minmax(self):
        scores = {}
        for scheme in (QuantScheme.EM_LINEAR, QuantScheme.MIN_MAX):
            runs = []
            for seed in (42, 43, 44):
                config = GanConfig(seed=seed, d_bits=2, g_bits=2, d_scheme=scheme, g_scheme=scheme)
                _, history = train(config, RingDataset())
                runs.append(history[-1].score.score)
            scores[scheme] = float(np.median(runs))
        assert scores[QuantScheme.EM_LINEAR] >= 0.45
        assert scores[QuantScheme.MIN_MAX] < scores[QuantScheme.EM_LINEAR]
