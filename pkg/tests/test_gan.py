import math

import numpy as np
import pytest

from mopadgan import dpp, gan
from mopadgan import quality as ql
from mopadgan.datasynth import generate_dataset, ring_spec
from mopadgan.errors import DegenerateBatch, NonFiniteLoss
from mopadgan.verify import central_difference

BENCH = ql.default_benchmark()
DATA = generate_dataset(ring_spec(n_samples=400, seed=1))


def small_config(**kw):
    base = dict(batch_size=8, steps=6, hidden=(8,), log_every=2, seed=0)
    base.update(kw)
    return gan.TrainConfig(**base)


def test_discriminator_loss_examples():
    assert gan.discriminator_loss([0.5], [0.5]) == pytest.approx(2 * math.log(2), rel=1e-14)
    assert gan.discriminator_loss([0.5], [0.5]) == pytest.approx(1.386294, abs=1e-6)
    assert gan.discriminator_loss([1 - 1e-7], [1e-7]) == pytest.approx(2e-7, rel=1e-6)
    # exact 0 and 1 are clamped rather than producing infinities
    assert gan.discriminator_loss([1.0], [0.0]) == pytest.approx(2e-7, rel=1e-6)
    assert gan.discriminator_loss([0.9], [0.3]) < gan.discriminator_loss([0.6], [0.3])


def test_generator_objective_examples():
    assert gan.generator_objective([0.5], 0.0, 0.0) == pytest.approx(math.log(2))
    assert gan.generator_objective([0.5], 2.0, 0.2) == pytest.approx(math.log(2) + 0.4, rel=1e-14)
    assert gan.generator_objective([0.5], 2.0, 0.2) == pytest.approx(1.09315, abs=1e-5)
    a, b = gan.generator_objective([0.3, 0.8], 3.7, 0.1), gan.generator_objective([0.3, 0.8], 3.7, 0.6)
    assert b - a == pytest.approx(0.5 * 3.7, rel=1e-12)
    assert np.isfinite(gan.generator_objective([0.0], 0.0, 0.0))


def test_zero_steps_returns_initial_parameters():
    cfg = small_config(steps=0)
    g0 = gan.init_generator(cfg, 2)
    d0 = gan.init_discriminator(cfg, 2)
    g, d, log = gan.train(cfg, DATA, gan.analytic_quality(BENCH), 2)
    assert np.array_equal(g.params, g0.params)
    assert np.array_equal(d.params, d0.params)
    assert log.records == []


def test_training_is_deterministic():
    cfg = small_config()
    a = gan.train(cfg, DATA, gan.analytic_quality(BENCH), 2)
    b = gan.train(cfg, DATA, gan.analytic_quality(BENCH), 2)
    assert np.array_equal(a[0].params, b[0].params)
    assert np.array_equal(a[1].params, b[1].params)
    assert a[2].rows() == b[2].rows()


def test_train_log_layout():
    _, _, log = gan.train(small_config(steps=5), DATA, gan.analytic_quality(BENCH), 2)
    assert log.columns == ["step", "d_loss", "g_adv_loss", "pad_loss", "mean_q1", "mean_q2", "batch_diversity"]
    assert log.column("step").tolist() == [2, 4, 5]
    assert np.all(np.isfinite(np.array(log.rows(), dtype=float)))


def test_gamma1_zero_matches_forced_pad():
    cfg = small_config(gamma1=0.0)
    plain = gan.train(cfg, DATA, gan.analytic_quality(BENCH), 2)
    forced = gan.train(cfg, DATA, gan.analytic_quality(BENCH), 2, force_pad=True)
    assert np.array_equal(plain[0].params, forced[0].params)
    assert plain[2].rows() == forced[2].rows()


def test_pad_changes_training():
    a = gan.train(small_config(gamma1=0.0), DATA, gan.analytic_quality(BENCH), 2)
    b = gan.train(small_config(gamma1=0.2), DATA, gan.analytic_quality(BENCH), 2)
    assert not np.array_equal(a[0].params, b[0].params)


def test_generator_pad_gradient_fd():
    cfg = gan.TrainConfig(d_z=2, hidden=(4,), seed=5)
    gen = gan.init_generator(cfg, 2)
    rng = np.random.default_rng(0)
    z = gan.latent(rng, 4, 2)
    w = ql.sample_weights(2, rng)
    sim, hp = dpp.SimilarityConfig(1.0), dpp.DppHyperparams(5.0, 0.2)
    qf = gan.analytic_quality(BENCH)
    _, g = gan.generator_pad_gradient(gen, z, qf, w, sim, hp)
    fd = central_difference(lambda th: gan.generator_pad_gradient(gen, z, qf, w, sim, hp, params=th)[0], gen.params, 1e-5)
    assert np.all(np.abs(g - fd) <= 1e-4 * np.maximum(np.abs(g), np.abs(fd)) + 1e-8)


def test_samples_inside_domain():
    cfg = small_config()
    gen = gan.init_generator(cfg, 2, domain=(-0.5, 0.5))
    x = gan.sample(gen, 500, seed=1)
    assert x.shape == (500, 2)
    assert np.all((x >= -0.5) & (x <= 0.5))
    assert gan.sample(gen, 0, seed=1).shape == (0, 2)
    assert np.array_equal(gan.sample(gen, 10, seed=3), gan.sample(gen, 10, seed=3))


def test_checkpoint_roundtrip(tmp_path):
    from mopadgan import neuralnet as nn

    gen = gan.init_generator(small_config(), 2, domain=(-2.0, 2.0))
    nn.save_checkpoint(tmp_path / "g.json", gen.checkpoint())
    back = gan.GeneratorState.from_checkpoint(nn.load_checkpoint(tmp_path / "g.json"))
    assert np.array_equal(back.params, gen.params)
    assert back.domain == (-2.0, 2.0)
    assert np.array_equal(gan.sample(back, 20, 0), gan.sample(gen, 20, 0))


def test_pad_spreads_collapsed_generator():
    # Two-mode data, generator squeezed onto one point at init: with the PaD
    # term on, batch diversity must trend upward over training.
    from mopadgan.datasynth import DatasetSpec, Mode

    data = generate_dataset(DatasetSpec((Mode((-0.5, 0.0), 0.05), Mode((0.5, 0.0), 0.05)), n_samples=1000, seed=2))
    cfg = small_config(batch_size=16, steps=300, lr_g=1e-3, lr_d=1e-3, gamma1=0.2, log_every=10)
    gen = gan.init_generator(cfg, 2)
    gen.params = gen.params * 0.01
    _, _, log = gan.train(cfg, data, gan.analytic_quality(BENCH), 2, generator=gen)
    steps, div = log.column("step"), log.column("batch_diversity")
    slope = np.polyfit(steps, div, 1)[0]
    assert slope > 0
    assert div[-5:].mean() > div[:5].mean()


def test_degenerate_batch_reports_step(monkeypatch):
    cfg = small_config(gamma1=0.2)
    gen = gan.init_generator(cfg, 2)
    gen.params = np.zeros_like(gen.params)  # every latent maps to the same design
    # clones are rescued by the jitter ladder, so take the ladder away
    strict = dpp.pad_loss
    monkeypatch.setattr(dpp, "pad_loss", lambda bk, ladder=None: strict(bk, ladder=(0.0,)))
    with pytest.raises(DegenerateBatch, match="step 1"):
        gan.train(cfg, DATA, gan.analytic_quality(BENCH), 2, generator=gen)


def test_non_finite_loss_detected():
    cfg = small_config(gamma1=0.0)
    data = DATA.copy()
    data[:] = np.nan
    with pytest.raises(NonFiniteLoss):
        gan.train(cfg, data, gan.analytic_quality(BENCH), 2)


def test_config_validation():
    with pytest.raises(ValueError):
        gan.TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        gan.TrainConfig(quality_source="oracle")
    with pytest.raises(ValueError):
        gan.train(small_config(), np.zeros((0, 2)), gan.analytic_quality(BENCH), 2)
