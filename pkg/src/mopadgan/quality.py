"""Multivariate performance, scalarization and the differentiable surrogate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import neuralnet as nn
from .errors import EmptyDataset

# Floor on aggregated quality; the DPP loss takes log q.
EPS_Q = 1e-6


@dataclass(frozen=True)
class Bump:
    center: tuple[float, ...]
    amplitude: float
    sigma: float

    def __post_init__(self):
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError(f"amplitude must lie in (0, 1], got {self.amplitude}")
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class QualityFunctionSpec:
    """K objectives, each a clamped sum of Gaussian bumps over a box domain."""

    objectives: tuple[tuple[Bump, ...], ...]
    domain: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if len(self.objectives) < 1:
            raise ValueError("need at least one objective")
        dims = {len(b.center) for obj in self.objectives for b in obj}
        if len(dims) > 1:
            raise ValueError("all bump centers must share one dimension")
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("domain must satisfy lo < hi")

    @property
    def n_objectives(self) -> int:
        return len(self.objectives)

    @property
    def dim(self) -> int:
        for obj in self.objectives:
            for b in obj:
                return len(b.center)
        return 2

    def to_dict(self) -> dict:
        return {
            "domain": list(self.domain),
            "objectives": [
                {"bumps": [{"center": list(b.center), "amplitude": b.amplitude, "sigma": b.sigma} for b in obj]}
                for obj in self.objectives
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QualityFunctionSpec":
        objectives = tuple(
            tuple(Bump(tuple(float(c) for c in b["center"]), float(b["amplitude"]), float(b["sigma"])) for b in o["bumps"])
            for o in d["objectives"]
        )
        return cls(objectives=objectives, domain=tuple(float(v) for v in d.get("domain", (-1.0, 1.0))))


def default_benchmark() -> QualityFunctionSpec:
    """The "bimodal-frontier" problem: two objectives, peaks just outside the data ring."""
    amp, sig = 0.95, 0.25
    return QualityFunctionSpec(
        objectives=(
            (Bump((0.7, 0.0), amp, sig), Bump((-0.4, 0.55), amp, sig)),
            (Bump((0.0, 0.7), amp, sig), Bump((0.55, -0.4), amp, sig)),
        ),
        domain=(-1.0, 1.0),
    )


def _raw_and_grad(spec: QualityFunctionSpec, x: np.ndarray):
    n, d = x.shape
    raw = np.zeros((n, spec.n_objectives))
    grad = np.zeros((n, spec.n_objectives, d))
    for j, bumps in enumerate(spec.objectives):
        for b in bumps:
            diff = np.asarray(b.center) - x  # (n, d)
            g = b.amplitude * np.exp(-np.sum(diff * diff, axis=1) / (2.0 * b.sigma**2))
            raw[:, j] += g
            grad[:, j, :] += g[:, None] * diff / b.sigma**2
    return raw, grad


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return (x[None, :] if single else x), single


def evaluate_performance(spec: QualityFunctionSpec, x) -> np.ndarray:
    """Per-objective scores in [0, 1] for one design (d,) or a batch (n, d)."""
    xb, single = _as_batch(x)
    raw, _ = _raw_and_grad(spec, xb)
    p = np.clip(raw, 0.0, 1.0)
    return p[0] if single else p


def performance_gradient(spec: QualityFunctionSpec, x) -> np.ndarray:
    """K x d Jacobian (or n x K x d for a batch); rows vanish where the clamp is active."""
    xb, single = _as_batch(x)
    raw, grad = _raw_and_grad(spec, xb)
    grad[(raw < 0.0) | (raw > 1.0)] = 0.0
    return grad[0] if single else grad


def sample_weights(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the (k-1)-simplex via normalized exponentials."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        return np.ones(1)
    e = rng.exponential(size=k)
    return e / e.sum()


def aggregate(p, w) -> np.ndarray | float:
    """Linear scalarization ``sum_j w_j p_j`` clamped to [EPS_Q, 1]."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    if p.shape[-1] != w.shape[0]:
        raise ValueError("performance and weight lengths differ")
    q = np.clip(p @ w, EPS_Q, 1.0)
    return float(q) if q.ndim == 0 else q


def aggregate_gradient(p, jac, w) -> tuple[np.ndarray, np.ndarray]:
    """Batched q and dq/dx from performances (n, K) and Jacobians (n, K, d).

    Gradient rows are zero wherever the quality clamp is active.
    """
    p = np.asarray(p, dtype=float)
    raw = p @ w
    q = np.clip(raw, EPS_Q, 1.0)
    dq = np.einsum("k,nkd->nd", w, jac)
    dq[(raw < EPS_Q) | (raw > 1.0)] = 0.0
    return q, dq


# --- surrogate ---------------------------------------------------------------


def default_surrogate_spec(dim: int = 2, n_objectives: int = 2) -> nn.NetworkSpec:
    return nn.NetworkSpec((dim, 64, 64, n_objectives), "tanh", "sigmoid")


@dataclass
class SurrogateConfig:
    epochs: int = 400
    batch_size: int = 128
    lr: float = 3e-3
    lr_final: float = 3e-4
    holdout: float = 0.1
    seed: int = 0


@dataclass
class Surrogate:
    spec: nn.NetworkSpec
    params: np.ndarray
    heldout_mse: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def heldout_rmse(self) -> np.ndarray:
        return np.sqrt(self.heldout_mse)


def train_surrogate(designs, performances, spec: nn.NetworkSpec | None = None, config: SurrogateConfig | None = None) -> Surrogate:
    """Fit an MLP to (design, performance) pairs with minibatch Adam on MSE.

    A shuffled 10% (``config.holdout``) split is held out and its per-objective
    MSE is reported on the returned model.  The learning rate decays
    geometrically from ``lr`` to ``lr_final`` over the run.
    """
    config = config or SurrogateConfig()
    x = np.asarray(designs, dtype=float)
    y = np.asarray(performances, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise EmptyDataset("surrogate training needs at least one design")
    if y.shape[0] != x.shape[0]:
        raise ValueError("designs and performances differ in length")
    if np.any(y < 0.0) or np.any(y > 1.0):
        raise ValueError("performance targets must lie in [0, 1]")
    spec = spec or default_surrogate_spec(x.shape[1], y.shape[1])

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(x))
    n_hold = int(round(config.holdout * len(x)))
    if len(x) - n_hold < 1:
        n_hold = 0
    hold, fit = perm[:n_hold], perm[n_hold:]
    if n_hold == 0:
        hold = fit  # tiny datasets: report training error

    params = nn.init_params(spec, config.seed)
    state = nn.AdamState.fresh(spec.n_params, lr=config.lr)
    n_fit = len(fit)
    bs = min(config.batch_size, n_fit)
    steps_per_epoch = max(1, n_fit // bs)
    total = config.epochs * steps_per_epoch
    decay = (config.lr_final / config.lr) ** (1.0 / max(1, total))
    for _epoch in range(config.epochs):
        order = fit[rng.permutation(n_fit)]
        for s in range(steps_per_epoch):
            idx = order[s * bs : (s + 1) * bs]
            out, cache = nn.forward(spec, params, x[idx])
            grad_out = 2.0 * (out - y[idx]) / out.size
            g, _ = nn.backward(spec, params, cache, grad_out)
            params, state = nn.adam_step(params, g, state)
            state.lr *= decay

    pred, _ = nn.forward(spec, params, x[hold])
    mse = np.mean((pred - y[hold]) ** 2, axis=0)
    return Surrogate(spec=spec, params=params, heldout_mse=mse)


def surrogate_predict_with_gradient(surrogate: Surrogate, x) -> tuple[np.ndarray, np.ndarray]:
    """Predicted performances and exact K x d Jacobians (batched if x is 2-D)."""
    xb, single = _as_batch(x)
    out, jac = nn.input_jacobian(surrogate.spec, surrogate.params, xb)
    return (out[0], jac[0]) if single else (out, jac)
