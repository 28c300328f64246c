"""Dense symmetric linear algebra for the DPP loss.

Everything here works on plain float64 ndarrays.  Cholesky, triangular solves
and the cyclic Jacobi eigensolver are written out by hand; ``method="lapack"``
on :func:`sym_eigen` routes to ``numpy.linalg.eigh`` for bulk evaluation where
speed matters more than relative accuracy of tiny eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NoConvergence, NotPositiveDefinite, ShapeMismatch

# Escalation order used by callers when a factorization fails.
JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)

# Jacobi rotation threshold relative to sqrt(|a_pp * a_qq|).
_JACOBI_TOL = 1e-15


@dataclass(frozen=True)
class EigenSpectrum:
    values: np.ndarray  # descending
    vectors: np.ndarray | None = None  # orthonormal columns matching values


def as_sym(m) -> np.ndarray:
    """Validate a square finite matrix and return its symmetrized copy."""
    a = np.array(m, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ShapeMismatch(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (a + a.T)


def cholesky(m, jitter: float = 0.0) -> np.ndarray:
    """Lower-triangular factor of ``m + jitter*I`` (outer-product form)."""
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    a = as_sym(m)
    n = a.shape[0]
    if jitter:
        a[np.diag_indices(n)] += jitter
    for k in range(n):
        pivot = a[k, k]
        if not pivot > 0.0:
            raise NotPositiveDefinite(f"pivot {k} is {pivot!r} (jitter={jitter:g})")
        d = np.sqrt(pivot)
        a[k, k] = d
        col = a[k + 1 :, k]
        col /= d
        a[k + 1 :, k + 1 :] -= np.outer(col, col)
    return np.tril(a)


def cholesky_logdet(m, jitter: float = 0.0) -> tuple[np.ndarray, float]:
    factor = cholesky(m, jitter)
    return factor, float(2.0 * np.sum(np.log(np.diag(factor))))


def _forward_sub(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = np.empty_like(b)
    for i in range(lower.shape[0]):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    return y


def _back_sub(upper: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = upper.shape[0]
    x = np.empty_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - upper[i, i + 1 :] @ x[i + 1 :]) / upper[i, i]
    return x


def cho_solve(factor: np.ndarray, b) -> np.ndarray:
    """Solve ``(L L^T) x = b`` given the lower Cholesky factor ``L``."""
    b = np.asarray(b, dtype=float)
    return _back_sub(factor.T, _forward_sub(factor, b))


def sym_inverse(m, jitter: float = 0.0) -> np.ndarray:
    factor = cholesky(m, jitter)
    inv = cho_solve(factor, np.eye(factor.shape[0]))
    return 0.5 * (inv + inv.T)


@lru_cache(maxsize=64)
def _round_robin(m: int) -> tuple[np.ndarray, ...]:
    """Slot orderings for the circle-method tournament on ``m`` (even) players.

    In each ordering, slots (0,1), (2,3), ... are the disjoint pairs rotated
    together; every pair of players meets exactly once over ``m - 1`` rounds.
    """
    orders = []
    for r in range(m - 1):
        order = [r, m - 1]
        for k in range(1, m // 2):
            order += [(r + k) % (m - 1), (r - k) % (m - 1)]
        orders.append(np.array(order))
    return tuple(orders)


def _jacobi(a: np.ndarray, want_vectors: bool, max_sweeps: int):
    n = a.shape[0]
    m = n + (n % 2)
    if m != n:
        # decoupled zero row/column; its pairs always have a_pq == 0 exactly
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(m) if want_vectors else None
    orders = _round_robin(m)
    current = np.arange(m)  # player held by each slot of ``a``
    pos = np.empty(m, dtype=int)
    ev, od = slice(0, None, 2), slice(1, None, 2)
    # flat offsets of a[2i, 2i]; +1, +m, +m+1 reach the rest of each 2x2 block
    dp = np.arange(0, m * m, 2 * m + 2)

    for _sweep in range(max_sweeps):
        rotated = False
        for order in orders:
            pos[current] = np.arange(m)
            rel = pos[order]
            a = a.take(rel, axis=0).take(rel, axis=1)
            if v is not None:
                v = v.take(rel, axis=1)
            current = order

            flat = a.ravel()
            app, aqq, apq = flat[dp], flat[dp + m + 1], flat[dp + 1]
            active = np.abs(apq) > _JACOBI_TOL * np.sqrt(np.abs(app * aqq))
            if not active.any():
                continue
            rotated = True
            theta = (aqq - app) / (2.0 * np.where(active, apq, 1.0))
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            t[~active] = 0.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            colp = a[:, ev].copy()
            colq = a[:, od]
            a[:, ev] = c * colp - s * colq
            a[:, od] = s * colp + c * colq
            rowp = a[ev, :].copy()
            rowq = a[od, :]
            a[ev, :] = c[:, None] * rowp - s[:, None] * rowq
            a[od, :] = s[:, None] * rowp + c[:, None] * rowq

            flat[dp] = app - t * apq
            flat[dp + m + 1] = aqq + t * apq
            off = np.where(active, 0.0, apq)
            flat[dp + 1] = off
            flat[dp + m] = off

            if v is not None:
                vp = v[:, ev].copy()
                vq = v[:, od]
                v[:, ev] = c * vp - s * vq
                v[:, od] = s * vp + c * vq
        if not rotated:
            break
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (order {n})")

    values = a.diagonal().copy()
    keep = current < n
    values = values[keep]
    if v is not None:
        v = v[:n][:, keep]
    return values, v


def sym_eigen(
    m,
    *,
    vectors: bool = False,
    method: str = "jacobi",
    max_sweeps: int = 100,
) -> EigenSpectrum:
    """Eigen-decompose a symmetric matrix; values are returned descending.

    The default cyclic Jacobi solver uses a relative rotation threshold, so the
    small eigenvalues of graded positive definite matrices such as ``D K D``
    keep high relative accuracy.  ``method="lapack"`` is faster but only
    absolutely accurate.
    """
    a = as_sym(m)
    if a.shape[0] > 4096:
        raise ShapeMismatch("order above 4096 is not supported")
    if method == "jacobi":
        if a.shape[0] == 1:
            vals, vecs = a.diagonal().copy(), np.ones((1, 1))
        else:
            vals, vecs = _jacobi(a, vectors, max_sweeps)
    elif method == "lapack":
        if vectors:
            vals, vecs = np.linalg.eigh(a)
        else:
            vals, vecs = np.linalg.eigvalsh(a), None
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    order = np.argsort(vals, kind="stable")[::-1]
    return EigenSpectrum(
        values=vals[order],
        vectors=None if not vectors else vecs[:, order],
    )


def logdet_with_ladder(m, ladder=JITTER_LADDER) -> tuple[np.ndarray, float, float]:
    """Cholesky log-det, escalating jitter along ``ladder``.

    Returns ``(factor, logdet, jitter_used)``; re-raises the last
    :class:`NotPositiveDefinite` when every rung fails.
    """
    err = None
    for jitter in ladder:
        try:
            factor, logdet = cholesky_logdet(m, jitter)
            return factor, logdet, jitter
        except NotPositiveDefinite as exc:
            err = exc
    raise err
