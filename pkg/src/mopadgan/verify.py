"""Finite-difference and identity suites behind the ``gradcheck`` and ``oracle`` commands.

Each suite returns a :class:`SuiteResult` carrying the worst error seen and
whether it stayed inside the suite's tolerance.  Errors are measured as
``|a - b| / max(|a|, |b|, atol / rtol)`` so a suite passes exactly when every
coordinate satisfies ``|a - b| <= max(rtol * max(|a|, |b|), atol)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import dpp, gan, linalg
from . import neuralnet as nn
from . import quality as ql


@dataclass(frozen=True)
class SuiteResult:
    name: str
    max_error: float
    tolerance: float
    cases: int

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "cases": self.cases,
            "passed": self.passed,
        }


def rel_error(a, b, rtol: float, atol: float = 0.0) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), atol / rtol if atol > 0 else 0.0)
    diff = np.abs(a - b)
    with np.errstate(invalid="ignore", divide="ignore"):
        err = np.where(diff == 0, 0.0, diff / scale)
    return float(np.max(err)) if err.size else 0.0


def central_difference(fn, x: np.ndarray, h: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (fn(xp) - fn(xm)) / (2 * h)
    return g


# --- gradient suites -----------------------------------------------------------


def check_network_gradients(seed: int = 0) -> SuiteResult:
    """Backprop through a random [2, 8, 1] net against central differences."""
    rng = np.random.default_rng(seed)
    rtol, worst = 1e-5, 0.0
    for hidden in nn.HIDDEN_ACTIVATIONS:
        spec = nn.NetworkSpec((2, 8, 1), hidden, "sigmoid")
        params = nn.init_params(spec, int(rng.integers(1 << 30)))
        x = rng.normal(size=(6, 2))
        # redraw inputs sitting within 1e-4 of a relu kink
        while hidden != "tanh" and any(np.any(np.abs(z) < 1e-4) for z in nn.forward(spec, params, x)[1].preacts[:-1]):
            x = rng.normal(size=(6, 2))
        target = rng.uniform(size=(6, 1))

        def loss(theta):
            out, _ = nn.forward(spec, theta, x)
            return 0.5 * float(np.sum((out - target) ** 2))

        out, cache = nn.forward(spec, params, x)
        grads, _ = nn.backward(spec, params, cache, out - target)
        worst = max(worst, rel_error(grads, central_difference(loss, params, 1e-5), rtol, 1e-10))
    return SuiteResult("neuralnet.backward", worst, rtol, len(nn.HIDDEN_ACTIVATIONS))


def check_quality_gradients(n_cases: int = 20, seed: int = 0) -> SuiteResult:
    """Analytic performance gradients away from the [0, 1] clamp."""
    spec = ql.default_benchmark()
    rng = np.random.default_rng(seed)
    rtol, worst, used = 1e-5, 0.0, 0
    lo, hi = spec.domain
    while used < n_cases:
        x = rng.uniform(lo, hi, spec.dim)
        raw = ql.evaluate_performance(spec, x)
        if np.any(raw < 1e-4) or np.any(raw > 1 - 1e-4):
            continue
        fd = np.stack(
            [central_difference(lambda y, j=j: ql.evaluate_performance(spec, y)[j], x, 1e-6) for j in range(spec.n_objectives)]
        )
        worst = max(worst, rel_error(ql.performance_gradient(spec, x), fd, rtol, 1e-9))
        used += 1
    return SuiteResult("quality.performance_gradient", worst, rtol, used)


def check_surrogate_gradients(n_cases: int = 10, seed: int = 0) -> SuiteResult:
    """Input Jacobian of a randomly initialised surrogate network."""
    rng = np.random.default_rng(seed)
    spec = ql.default_surrogate_spec(2, 2)
    model = ql.Surrogate(spec, nn.init_params(spec, seed), float("nan"))
    rtol, worst = 1e-5, 0.0
    for _ in range(n_cases):
        x = rng.uniform(-1, 1, 2)
        _, jac = ql.surrogate_predict_with_gradient(model, x)
        fd = np.stack(
            [
                central_difference(lambda y, j=j: ql.surrogate_predict_with_gradient(model, y)[0][j], x, 1e-6)
                for j in range(2)
            ]
        )
        worst = max(worst, rel_error(jac, fd, rtol, 1e-9))
    return SuiteResult("quality.surrogate_gradient", worst, rtol, n_cases)


def _mixture_loss(x, w, spec, cfg, hp):
    q = ql.aggregate(ql.evaluate_performance(spec, x), w)
    return dpp.pad_loss(dpp.build_kernel(x, q, cfg, hp))


def check_pad_gradients(n_batches: int = 20, n: int = 8, seed: int = 0) -> SuiteResult:
    """Closed-form PaD gradients w.r.t. the designs against central differences."""
    spec = ql.default_benchmark()
    cfg, hp = dpp.SimilarityConfig(1.0), dpp.DppHyperparams(5.0, 0.2)
    rng = np.random.default_rng(seed)
    rtol, atol, worst = 1e-4, 1e-8, 0.0
    for _ in range(n_batches):
        x = rng.uniform(-1, 1, (n, spec.dim))
        w = ql.sample_weights(spec.n_objectives, rng)
        p = ql.evaluate_performance(spec, x)
        q, dq = ql.aggregate_gradient(p, ql.performance_gradient(spec, x), w)
        g = dpp.pad_loss_gradients(dpp.build_kernel(x, q, cfg, hp), dq)
        fd = central_difference(lambda y: _mixture_loss(y, w, spec, cfg, hp), x, 1e-5)
        worst = max(worst, rel_error(g, fd, rtol, atol))
    return SuiteResult("dpp.pad_loss_gradients", worst, rtol, n_batches)


def check_generator_gradient(n_cases: int = 3, seed: int = 0) -> SuiteResult:
    """gamma1 * PaD backpropagated to every parameter of a frozen [2, 4, 2] generator."""
    spec_q = ql.default_benchmark()
    quality_fn = gan.analytic_quality(spec_q)
    cfg, hp = dpp.SimilarityConfig(1.0), dpp.DppHyperparams(5.0, 0.2)
    rng = np.random.default_rng(seed)
    rtol, atol, worst = 1e-4, 1e-8, 0.0
    for case in range(n_cases):
        tc = gan.TrainConfig(d_z=2, hidden=(4,), seed=seed + case)
        gen = gan.init_generator(tc, dim=2)
        z = gan.latent(rng, 4, 2)
        w = ql.sample_weights(2, rng)
        _, grads = gan.generator_pad_gradient(gen, z, quality_fn, w, cfg, hp)

        def loss(theta):
            return gan.generator_pad_gradient(gen, z, quality_fn, w, cfg, hp, params=theta)[0]

        worst = max(worst, rel_error(grads, central_difference(loss, gen.params, 1e-5), rtol, atol))
    return SuiteResult("gan.generator_pad_gradient", worst, rtol, n_cases)


def gradcheck_suites(seed: int = 0) -> list[SuiteResult]:
    return [
        check_network_gradients(seed=seed),
        check_quality_gradients(seed=seed),
        check_surrogate_gradients(seed=seed),
        check_pad_gradients(seed=seed),
        check_generator_gradient(seed=seed),
    ]


# --- identity suites -----------------------------------------------------------


def check_subset_determinants(n_sets: int = 20, size: int = 6, seed: int = 0) -> SuiteResult:
    """prod q^(2 gamma0) det K_S against det L_S taken straight from the kernel entries."""
    rng = np.random.default_rng(seed)
    hp, cfg = dpp.DppHyperparams(5.0, 0.2), dpp.SimilarityConfig(1.0)
    rtol, worst, cases = 1e-10, 0.0, 0
    for _ in range(n_sets):
        x = rng.uniform(-2, 2, (size, 2))
        q = rng.uniform(0.3, 1.0, size)
        sim = dpp.similarity_matrix(x, cfg)
        entries = np.outer(q**hp.gamma0, q**hp.gamma0) * sim
        for r in range(1, size + 1):
            for s in itertools.combinations(range(size), r):
                direct = np.linalg.det(entries[np.ix_(s, s)])
                worst = max(worst, rel_error(dpp.subset_probability(x, q, s, hp, cfg), direct, rtol))
                cases += 1
    return SuiteResult("dpp.subset_probability", worst, rtol, cases)


def check_loss_decomposition(n_batches: int = 100, n: int = 8, seed: int = 0) -> SuiteResult:
    """Eigenvalue form of the PaD loss against the quality/diversity split form."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_batches):
        x = rng.uniform(-1.5, 1.5, (n, 2))
        q = rng.uniform(0.01, 1.0, n)
        bk = dpp.build_kernel(x, q)
        worst = max(worst, abs(dpp.pad_loss_eigen(bk) - dpp.pad_loss(bk)))
    return SuiteResult("dpp.pad_loss_decomposition", worst, 1e-8, n_batches)


def random_spd(rng: np.random.Generator, order: int) -> np.ndarray:
    a = rng.normal(size=(order, order))
    return a.T @ a / order + np.eye(order)


def check_logdet_routes(n_mats: int = 50, max_order: int = 100, seed: int = 0) -> SuiteResult:
    """Cholesky log-det against the sum of log Jacobi eigenvalues."""
    rng = np.random.default_rng(seed)
    orders = np.linspace(1, max_order, n_mats).round().astype(int)
    worst = 0.0
    for order in orders:
        m = random_spd(rng, int(order))
        _, ld = linalg.cholesky_logdet(m)
        lam = linalg.sym_eigen(m).values
        worst = max(worst, abs(ld - float(np.sum(np.log(lam)))))
    return SuiteResult("linalg.logdet_routes", worst, 1e-8, n_mats)


def oracle_suites(seed: int = 0) -> list[SuiteResult]:
    return [
        check_subset_determinants(seed=seed),
        check_loss_decomposition(seed=seed),
        check_logdet_routes(n_mats=20, max_order=60, seed=seed),
    ]
