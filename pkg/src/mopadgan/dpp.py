"""Performance-augmented DPP kernel, loss and exact gradients.

The batch kernel is ``L = D K D`` with ``K`` the RBF similarity matrix and
``D = diag(q_i ** gamma0)``.  Its log-determinant therefore splits into
``2 * gamma0 * sum(log q) + logdet(K)``, which is how the loss is evaluated;
the eigenvalue route is kept for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DegenerateBatch, NotPositiveDefinite, QualityOutOfRange
from .quality import EPS_Q


@dataclass(frozen=True)
class SimilarityConfig:
    bandwidth: float = 1.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True)
class DppHyperparams:
    gamma0: float = 5.0
    gamma1: float = 0.2

    def __post_init__(self):
        for name in ("gamma0", "gamma1"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


@dataclass(frozen=True)
class BatchKernel:
    x: np.ndarray  # (n, d)
    q: np.ndarray  # (n,)
    K: np.ndarray  # similarity part
    L: np.ndarray  # full kernel
    gamma0: float
    bandwidth: float

    @property
    def n(self) -> int:
        return len(self.q)


def similarity(xi, xj, cfg: SimilarityConfig = SimilarityConfig()) -> float:
    diff = np.asarray(xi, dtype=float) - np.asarray(xj, dtype=float)
    return float(np.exp(-np.dot(diff, diff) / (2.0 * cfg.bandwidth**2)))


def similarity_matrix(x, cfg: SimilarityConfig = SimilarityConfig()) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    sq = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
    k = np.exp(-sq / (2.0 * cfg.bandwidth**2))
    np.fill_diagonal(k, 1.0)
    return k


def build_kernel(
    x, q, cfg: SimilarityConfig = SimilarityConfig(), hp: DppHyperparams = DppHyperparams()
) -> BatchKernel:
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    if x.ndim != 2 or len(x) != len(q) or len(q) < 1:
        raise ValueError("need a nonempty (n, d) batch with n qualities")
    if np.any(q < EPS_Q) or np.any(q > 1.0) or not np.all(np.isfinite(q)):
        raise QualityOutOfRange(f"qualities must lie in [{EPS_Q}, 1]")
    k = similarity_matrix(x, cfg)
    dscale = q**hp.gamma0
    big_l = dscale[:, None] * k * dscale[None, :]
    return BatchKernel(x=x, q=q, K=k, L=big_l, gamma0=hp.gamma0, bandwidth=cfg.bandwidth)


def _factor(bk: BatchKernel, ladder):
    try:
        return linalg.logdet_with_ladder(bk.K, ladder)
    except NotPositiveDefinite as exc:
        raise DegenerateBatch(f"similarity kernel not positive definite after jitter ladder ({exc})") from exc


def pad_loss(bk: BatchKernel, ladder=linalg.JITTER_LADDER) -> float:
    """``-(1/n) log det L_B`` via the quality / similarity split."""
    _, logdet_k, _ = _factor(bk, ladder)
    return float(-(2.0 * bk.gamma0 * np.sum(np.log(bk.q)) + logdet_k) / bk.n)


def pad_loss_eigen(bk: BatchKernel) -> float:
    """Same loss as the mean negative log-eigenvalue of ``L_B`` (Jacobi)."""
    lam = linalg.sym_eigen(bk.L).values
    return float(-np.sum(np.log(lam)) / bk.n)


def pad_loss_gradients(
    bk: BatchKernel, quality_grads, ladder=linalg.JITTER_LADDER
) -> np.ndarray:
    """d loss / d x_m for every batch item, shape (n, d).

    ``quality_grads`` holds dq/dx per item and must already be zero where the
    quality clamp is active (see :func:`quality.aggregate_gradient`).
    """
    n = bk.n
    dq = np.asarray(quality_grads, dtype=float).reshape(bk.x.shape)
    factor, _, _ = _factor(bk, ladder)
    a = -linalg.cho_solve(factor, np.eye(n)) / n
    s = a + a.T
    diff = bk.x[:, None, :] - bk.x[None, :, :]  # x_m - x_j
    kernel_term = np.einsum("mj,mjd->md", s * bk.K, -diff / bk.bandwidth**2)
    quality_term = (-2.0 * bk.gamma0 / (n * bk.q))[:, None] * dq
    return quality_term + kernel_term


def subset_probability(
    x, q, subset, hp: DppHyperparams = DppHyperparams(), cfg: SimilarityConfig = SimilarityConfig()
) -> float:
    """Unnormalized DPP probability ``prod(q_i ** (2 gamma0)) * det(K_S)``."""
    idx = list(subset)
    if not idx:
        raise ValueError("subset must be nonempty")
    xs = np.asarray(x, dtype=float)[idx]
    qs = np.asarray(q, dtype=float)[idx]
    if len({tuple(r) for r in xs}) < len(idx):
        return 0.0
    try:
        _, logdet = linalg.cholesky_logdet(similarity_matrix(xs, cfg))
    except NotPositiveDefinite:
        return 0.0
    return float(np.prod(qs ** (2.0 * hp.gamma0)) * np.exp(logdet))
