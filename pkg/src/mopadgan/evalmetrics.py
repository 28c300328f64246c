"""Post-training evaluation: diversity, Pareto front, hypervolume, novelty, top-k."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import linalg
from .dpp import SimilarityConfig, similarity_matrix
from .errors import PoolTooSmall

EIG_FLOOR = 1e-12


def worker_threads() -> int:
    """Thread cap from PADGAN_THREADS, else the machine core count."""
    env = os.environ.get("PADGAN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def diversity_score(subset, cfg=None, *, method: str = "jacobi") -> float:
    """log det of the subset's similarity matrix, eigenvalues floored at 1e-12."""
    cfg = cfg or SimilarityConfig()
    x = np.asarray(subset, dtype=float)
    if len(x) < 1:
        raise ValueError("subset must be nonempty")
    if len(x) == 1:
        return 0.0
    lam = linalg.sym_eigen(similarity_matrix(x, cfg), method=method).values
    return float(np.sum(np.log(np.maximum(lam, EIG_FLOOR))))


@dataclass
class DiversityReport:
    values: np.ndarray
    n_repetitions: int
    subset_size: int
    pool_size: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values))

    @property
    def quartiles(self) -> tuple[float, float, float]:
        q1, q2, q3 = np.percentile(self.values, [25, 50, 75])
        return float(q1), float(q2), float(q3)

    def summary(self) -> dict:
        q1, q2, q3 = self.quartiles
        return {
            "mean": self.mean,
            "std": self.std,
            "min": float(np.min(self.values)),
            "q1": q1,
            "median": q2,
            "q3": q3,
            "max": float(np.max(self.values)),
            "n_repetitions": self.n_repetitions,
            "subset_size": self.subset_size,
            "pool_size": self.pool_size,
        }


def diversity_statistics(
    pool,
    n_repetitions: int = 1000,
    subset_size: int = 100,
    seed: int = 0,
    cfg=None,
    *,
    method: str = "lapack",
    threads: int | None = None,
) -> DiversityReport:
    """Diversity of ``n_repetitions`` random subsets drawn without replacement.

    Subsets are drawn up front from one generator, so the result does not
    depend on how many worker threads score them.  The bulk protocol defaults
    to the LAPACK eigensolver; pass ``method="jacobi"`` for the in-house one.
    """
    pool = np.asarray(pool, dtype=float)
    if len(pool) < subset_size or subset_size < 1:
        raise PoolTooSmall(f"pool of {len(pool)} cannot supply subsets of {subset_size}")
    rng = np.random.default_rng(seed)
    picks = [rng.choice(len(pool), size=subset_size, replace=False) for _ in range(n_repetitions)]
    threads = threads or worker_threads()

    def score(idx):
        return diversity_score(pool[idx], cfg, method=method)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            values = list(ex.map(score, picks))
    else:
        values = [score(idx) for idx in picks]
    return DiversityReport(np.array(values), n_repetitions, subset_size, len(pool))


# --- Pareto ----------------------------------------------------------------------


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a >= b) and np.any(a > b))


def nondominated_mask(points) -> np.ndarray:
    """Maximization; duplicates of a front point are all kept."""
    p = np.asarray(points, dtype=float)
    n = len(p)
    mask = np.ones(n, dtype=bool)
    # lexicographic descending order: any dominator of p[i] precedes it
    order = np.lexsort(tuple(-p[:, k] for k in range(p.shape[1] - 1, -1, -1)))
    front: list[int] = []
    for i in order:
        if front:
            f = p[front]
            dom = np.all(f >= p[i], axis=1) & np.any(f > p[i], axis=1)
            if dom.any():
                mask[i] = False
                continue
        front.append(i)
    return mask


def hypervolume_2d(points, reference=(0.0, 0.0)) -> float:
    """Area dominated by ``points`` above ``reference`` (sorted sweep)."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    r = np.asarray(reference, dtype=float)
    p = p[np.all(p > r, axis=1)]
    if len(p) == 0:
        return 0.0
    p = p[np.argsort(-p[:, 0], kind="stable")]
    area = 0.0
    best_y = r[1]
    for x, y in p:
        if y > best_y:
            area += (x - r[0]) * (y - best_y)
            best_y = y
    return float(area)


@dataclass
class ParetoReport:
    front: np.ndarray  # indices into the input list
    hypervolume: float | None
    dominated_by_other: int | None = None  # points here beaten by some point of the other set
    other_dominated: int | None = None  # points of the other set beaten by some point here


def _count_dominated(a: np.ndarray, b: np.ndarray) -> int:
    """How many rows of ``a`` are dominated by at least one row of ``b``."""
    fb = b[nondominated_mask(b)]
    count = 0
    for row in a:
        if np.any(np.all(fb >= row, axis=1) & np.any(fb > row, axis=1)):
            count += 1
    return count


def pareto_front(performances, other=None, reference=None) -> ParetoReport:
    p = np.asarray(performances, dtype=float)
    if p.ndim != 2 or len(p) == 0:
        raise ValueError("need a nonempty (n, K) performance array")
    front = np.flatnonzero(nondominated_mask(p))
    hv = None
    if p.shape[1] == 2:
        hv = hypervolume_2d(p[front], (0.0, 0.0) if reference is None else reference)
    report = ParetoReport(front=front, hypervolume=hv)
    if other is not None:
        o = np.asarray(other, dtype=float)
        report.dominated_by_other = _count_dominated(p, o)
        report.other_dominated = _count_dominated(o, p)
    return report


# --- novelty / top-k -------------------------------------------------------------


@dataclass
class NoveltyReport:
    distances: np.ndarray
    threshold: float

    def summary(self) -> dict:
        return {
            "mean": float(np.mean(self.distances)),
            "max": float(np.max(self.distances)),
            "fraction_above_threshold": float(np.mean(self.distances > self.threshold)),
            "threshold": self.threshold,
        }


def novelty_distances(samples, training, threshold: float = 0.1) -> NoveltyReport:
    s = np.asarray(samples, dtype=float)
    t = np.asarray(training, dtype=float)
    if len(s) == 0 or len(t) == 0:
        raise ValueError("samples and training designs must be nonempty")
    dist, _ = cKDTree(t).query(s, k=1)
    return NoveltyReport(np.asarray(dist, dtype=float), threshold)


def top_k(scores, k: int) -> np.ndarray:
    """Indices of the k largest scores, ties resolved by lower index."""
    scores = np.asarray(scores, dtype=float)
    if not 0 <= k <= len(scores):
        raise ValueError("k must lie in [0, len(scores)]")
    order = np.lexsort((np.arange(len(scores)), -scores))
    return order[:k]


def top_k_report(samples, performances, k: int, weights=None) -> dict[str, list[dict]]:
    """Best k samples per aggregate quality (equal weights by default) and per objective."""
    x = np.asarray(samples, dtype=float)
    p = np.asarray(performances, dtype=float)
    kk = p.shape[1]
    w = np.full(kk, 1.0 / kk) if weights is None else np.asarray(weights, dtype=float)
    tables = {"aggregate": p @ w}
    for j in range(kk):
        tables[f"objective_{j + 1}"] = p[:, j]
    out = {}
    for name, score in tables.items():
        out[name] = [
            {"rank": r + 1, "index": int(i), "score": float(score[i]), "design": x[i].tolist(), "performance": p[i].tolist()}
            for r, i in enumerate(top_k(score, k))
        ]
    return out
