"""GAN / MO-PaDGAN training.

The generator objective is the nonsaturating adversarial term plus
``gamma1`` times the PaD loss of the same fake batch.  The PaD gradient is
injected at the generator output, next to the gradient arriving from the
discriminator, and the two flow back through G together.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dpp
from . import neuralnet as nn
from . import quality as ql
from .errors import DegenerateBatch, NonFiniteLoss
from .evalmetrics import diversity_score

log = logging.getLogger(__name__)

D_CLAMP = 1e-7

QualityFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass
class TrainConfig:
    batch_size: int = 32
    steps: int = 5000
    d_z: int = 5
    lr_g: float = 1e-4
    lr_d: float = 1e-4
    beta1: float = 0.5
    d_steps: int = 1
    gamma0: float = 5.0
    gamma1: float = 0.2
    bandwidth: float = 1.0
    quality_source: str = "analytic"
    seed: int = 0
    hidden: tuple[int, ...] = (64, 64)
    log_every: int = 50

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        for name in ("batch_size", "d_z", "d_steps", "log_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.lr_g <= 0 or self.lr_d <= 0 or self.bandwidth <= 0:
            raise ValueError("learning rates and bandwidth must be positive")
        if self.gamma0 < 0 or self.gamma1 < 0:
            raise ValueError("gamma0 and gamma1 must be nonnegative")
        if self.quality_source not in ("analytic", "surrogate"):
            raise ValueError(f"unknown quality_source {self.quality_source!r}")


@dataclass
class GeneratorState:
    spec: nn.NetworkSpec
    params: np.ndarray
    optimizer: nn.AdamState
    domain: tuple[float, float] = (-1.0, 1.0)

    @property
    def d_z(self) -> int:
        return self.spec.n_in

    def checkpoint(self) -> nn.Checkpoint:
        return nn.Checkpoint(self.spec, self.params, self.optimizer, {"role": "generator", "domain": list(self.domain)})

    @classmethod
    def from_checkpoint(cls, ck: nn.Checkpoint) -> "GeneratorState":
        opt = ck.optimizer or nn.AdamState.fresh(ck.spec.n_params)
        return cls(ck.spec, ck.params, opt, tuple(ck.extra.get("domain", (-1.0, 1.0))))


@dataclass
class DiscriminatorState:
    spec: nn.NetworkSpec
    params: np.ndarray
    optimizer: nn.AdamState

    def checkpoint(self) -> nn.Checkpoint:
        return nn.Checkpoint(self.spec, self.params, self.optimizer, {"role": "discriminator"})


@dataclass
class TrainLog:
    n_objectives: int
    records: list[dict] = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        return (
            ["step", "d_loss", "g_adv_loss", "pad_loss"]
            + [f"mean_q{j + 1}" for j in range(self.n_objectives)]
            + ["batch_diversity"]
        )

    def rows(self) -> list[list]:
        return [[r[c] for c in self.columns] for r in self.records]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])


# --- losses --------------------------------------------------------------------


def _clamp(d) -> np.ndarray:
    return np.clip(np.asarray(d, dtype=float), D_CLAMP, 1.0 - D_CLAMP)


def discriminator_loss(d_real, d_fake) -> float:
    return float(-np.mean(np.log(_clamp(d_real))) - np.mean(np.log(1.0 - _clamp(d_fake))))


def generator_objective(d_fake, pad_loss_value: float, gamma1: float) -> float:
    return float(-np.mean(np.log(_clamp(d_fake))) + gamma1 * pad_loss_value)


def _inside(d: np.ndarray) -> np.ndarray:
    return ((d >= D_CLAMP) & (d <= 1.0 - D_CLAMP)).astype(float)


# --- networks ------------------------------------------------------------------


def init_generator(config: TrainConfig, dim: int = 2, domain=(-1.0, 1.0), seed: int | None = None) -> GeneratorState:
    seed = config.seed if seed is None else seed
    spec = nn.NetworkSpec((config.d_z, *config.hidden, dim), "tanh", "tanh")
    params = nn.init_params(spec, seed)
    opt = nn.AdamState.fresh(spec.n_params, lr=config.lr_g, beta1=config.beta1)
    return GeneratorState(spec, params, opt, tuple(domain))


def init_discriminator(config: TrainConfig, dim: int = 2, seed: int | None = None) -> DiscriminatorState:
    seed = (config.seed if seed is None else seed) + 1
    spec = nn.NetworkSpec((dim, *config.hidden, 1), "leaky_relu", "sigmoid")
    params = nn.init_params(spec, seed)
    opt = nn.AdamState.fresh(spec.n_params, lr=config.lr_d, beta1=config.beta1)
    return DiscriminatorState(spec, params, opt)


def _affine(domain) -> tuple[float, float]:
    lo, hi = domain
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def generate(gen: GeneratorState, z: np.ndarray, params: np.ndarray | None = None):
    """Map latents into the design box; returns (designs, cache)."""
    params = gen.params if params is None else params
    out, cache = nn.forward(gen.spec, params, z)
    mid, half = _affine(gen.domain)
    return mid + half * out, cache


def latent(rng: np.random.Generator, count: int, d_z: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(count, d_z))


def sample(gen: GeneratorState, count: int, seed: int) -> np.ndarray:
    if count == 0:
        return np.zeros((0, gen.spec.n_out))
    rng = np.random.default_rng(seed)
    x, _ = generate(gen, latent(rng, count, gen.d_z))
    lo, hi = gen.domain
    return np.clip(x, lo, hi)


def analytic_quality(spec: ql.QualityFunctionSpec) -> QualityFn:
    return lambda x: (ql.evaluate_performance(spec, x), ql.performance_gradient(spec, x))


def surrogate_quality(model: ql.Surrogate) -> QualityFn:
    return lambda x: ql.surrogate_predict_with_gradient(model, x)


def pad_terms(x, quality_fn: QualityFn, w, cfg: dpp.SimilarityConfig, hp: dpp.DppHyperparams):
    """PaD loss of a design batch and its gradient w.r.t. each design."""
    p, jac = quality_fn(x)
    q, dq = ql.aggregate_gradient(p, jac, w)
    bk = dpp.build_kernel(x, q, cfg, hp)
    return dpp.pad_loss(bk), dpp.pad_loss_gradients(bk, dq), p


def generator_pad_gradient(gen: GeneratorState, z, quality_fn: QualityFn, w, cfg, hp, params=None):
    """(gamma1 * PaD loss, its gradient w.r.t. the generator parameter vector)."""
    params = gen.params if params is None else params
    x, cache = generate(gen, z, params)
    loss, gx, _ = pad_terms(x, quality_fn, w, cfg, hp)
    _, half = _affine(gen.domain)
    grads, _ = nn.backward(gen.spec, params, cache, hp.gamma1 * gx * half)
    return hp.gamma1 * loss, grads


# --- training loop -------------------------------------------------------------


def train(
    config: TrainConfig,
    dataset,
    quality_fn: QualityFn,
    n_objectives: int,
    *,
    generator: GeneratorState | None = None,
    discriminator: DiscriminatorState | None = None,
    domain=(-1.0, 1.0),
    force_pad: bool = False,
) -> tuple[GeneratorState, DiscriminatorState, TrainLog]:
    """Alternate discriminator and generator updates for ``config.steps`` steps.

    With ``gamma1 == 0`` the PaD gradient is skipped entirely (vanilla GAN);
    ``force_pad`` computes and adds it anyway, scaled by zero, which must not
    change any result.  One set of scalarization weights is drawn per step.
    """
    data = np.asarray(dataset, dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise ValueError("dataset must be a nonempty (N, d) array")
    dim = data.shape[1]
    gen = generator or init_generator(config, dim, domain)
    disc = discriminator or init_discriminator(config, dim)
    rng = np.random.default_rng(config.seed)
    cfg = dpp.SimilarityConfig(config.bandwidth)
    hp = dpp.DppHyperparams(config.gamma0, config.gamma1)
    n = config.batch_size
    _, half = _affine(gen.domain)
    use_pad = config.gamma1 > 0 or force_pad
    tlog = TrainLog(n_objectives)

    g_params, g_opt = gen.params.copy(), gen.optimizer
    d_params, d_opt = disc.params.copy(), disc.optimizer

    for step in range(1, config.steps + 1):
        for _ in range(config.d_steps):
            real = data[rng.integers(0, len(data), size=n)]
            fake, _ = generate(gen, latent(rng, n, gen.d_z), g_params)
            out, cache = nn.forward(disc.spec, d_params, np.vstack([real, fake]))
            d_real, d_fake = out[:n], out[n:]
            d_loss = discriminator_loss(d_real, d_fake)
            grad_out = np.vstack([
                -_inside(d_real) / (n * d_real),
                _inside(d_fake) / (n * (1.0 - d_fake)),
            ])
            gd, _ = nn.backward(disc.spec, d_params, cache, grad_out)
            d_params, d_opt = nn.adam_step(d_params, gd, d_opt)

        w = ql.sample_weights(n_objectives, rng)
        z = latent(rng, n, gen.d_z)
        x, g_cache = generate(gen, z, g_params)
        out, d_cache = nn.forward(disc.spec, d_params, x)
        g_adv = generator_objective(out, 0.0, 0.0)
        _, gx = nn.backward(disc.spec, d_params, d_cache, -_inside(out) / (n * out))

        logging_step = step % config.log_every == 0 or step == config.steps
        pad_value = None
        p = None
        try:
            if use_pad:
                pad_value, gx_pad, p = pad_terms(x, quality_fn, w, cfg, hp)
                gx = gx + config.gamma1 * gx_pad
            elif logging_step:
                p, jac = quality_fn(x)
                q, _ = ql.aggregate_gradient(p, jac, w)
                pad_value = dpp.pad_loss(dpp.build_kernel(x, q, cfg, hp))
        except DegenerateBatch as exc:
            raise DegenerateBatch(str(exc), step=step) from exc

        gg, _ = nn.backward(gen.spec, g_params, g_cache, gx * half)
        g_params, g_opt = nn.adam_step(g_params, gg, g_opt)

        if not (np.isfinite(d_loss) and np.isfinite(g_adv) and (pad_value is None or np.isfinite(pad_value))):
            raise NonFiniteLoss(f"step {step}: d_loss={d_loss} g_adv={g_adv} pad={pad_value}")

        if logging_step:
            rec = {"step": step, "d_loss": d_loss, "g_adv_loss": g_adv, "pad_loss": float(pad_value)}
            for j in range(n_objectives):
                rec[f"mean_q{j + 1}"] = float(np.mean(p[:, j]))
            rec["batch_diversity"] = diversity_score(x, cfg)
            tlog.records.append(rec)
            log.debug("step %d d=%.4f g=%.4f pad=%.4f", step, d_loss, g_adv, pad_value)

    gen_out = GeneratorState(gen.spec, g_params, g_opt, gen.domain)
    disc_out = DiscriminatorState(disc.spec, d_params, d_opt)
    return gen_out, disc_out, tlog
