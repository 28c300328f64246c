"""Synthetic multimodal design datasets and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IoError, MalformedRow


@dataclass(frozen=True)
class Mode:
    center: tuple[float, ...]
    std: float
    weight: float = 1.0


@dataclass(frozen=True)
class DatasetSpec:
    modes: tuple[Mode, ...]
    n_samples: int = 10000
    domain: tuple[float, float] = (-1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not self.modes:
            raise ValueError("need at least one mode")
        lo, hi = self.domain
        for m in self.modes:
            if not m.std > 0 or not m.weight > 0:
                raise ValueError("mode std and weight must be positive")
            if any(c < lo or c > hi for c in m.center):
                raise ValueError(f"mode center {m.center} lies outside the domain box")
        if self.n_samples < 0:
            raise ValueError("n_samples must be nonnegative")

    @property
    def weights(self) -> np.ndarray:
        w = np.array([m.weight for m in self.modes], dtype=float)
        return w / w.sum()

    def to_dict(self) -> dict:
        return {
            "modes": [{"center": list(m.center), "std": m.std, "weight": m.weight} for m in self.modes],
            "n_samples": self.n_samples,
            "domain": list(self.domain),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        modes = tuple(
            Mode(tuple(float(c) for c in m["center"]), float(m["std"]), float(m.get("weight", 1.0)))
            for m in d["modes"]
        )
        return cls(
            modes=modes,
            n_samples=int(d.get("n_samples", 10000)),
            domain=tuple(float(v) for v in d.get("domain", (-1.0, 1.0))),
            seed=int(d.get("seed", 0)),
        )


def ring_spec(n_modes=6, radius=0.4, std=0.05, n_samples=10000, seed=0) -> DatasetSpec:
    """Equal-weight modes evenly spaced on a circle about the origin."""
    angles = 2.0 * np.pi * np.arange(n_modes) / n_modes
    modes = tuple(Mode((float(radius * np.cos(a)), float(radius * np.sin(a))), std) for a in angles)
    return DatasetSpec(modes=modes, n_samples=n_samples, seed=seed)


def generate_dataset(spec: DatasetSpec, return_labels: bool = False):
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.domain
    centers = np.array([m.center for m in spec.modes], dtype=float)
    stds = np.array([m.std for m in spec.modes])
    labels = rng.choice(len(spec.modes), size=spec.n_samples, p=spec.weights)
    x = centers[labels] + stds[labels, None] * rng.standard_normal((spec.n_samples, centers.shape[1]))
    # redraw the noise for anything that left the box
    bad = np.any((x < lo) | (x > hi), axis=1)
    while bad.any():
        k = labels[bad]
        x[bad] = centers[k] + stds[k, None] * rng.standard_normal((int(bad.sum()), centers.shape[1]))
        bad = np.any((x < lo) | (x > hi), axis=1)
    return (x, labels) if return_labels else x


def save_dataset(path, x, dim: int | None = None) -> None:
    x = np.asarray(x, dtype=float)
    d = x.shape[1] if x.ndim == 2 and x.size else (dim or 2)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(d)])
            for row in x.reshape(-1, d):
                w.writerow([repr(float(v)) for v in row])
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_dataset(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if not rows:
        raise MalformedRow(1, "missing header")
    header = rows[0]
    if header != [f"x{i}" for i in range(len(header))]:
        raise MalformedRow(1, f"unexpected header {header}")
    d = len(header)
    out = np.empty((len(rows) - 1, d))
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != d:
            raise MalformedRow(line, f"expected {d} cells, got {len(row)}")
        try:
            out[i] = [float(v) for v in row]
        except ValueError as exc:
            raise MalformedRow(line, str(exc)) from None
    return out


def save_table(path, header, rows) -> None:
    """Plain CSV writer shared by the reporting code; floats use repr."""
    try:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    except OSError as exc:
        raise IoError(str(exc)) from exc
