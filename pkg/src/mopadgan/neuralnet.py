"""Small fully-connected networks with hand-written backprop and Adam.

Parameters live in one flat float64 vector.  Layer ``l`` occupies a
``(w_l * w_{l+1})`` row-major weight block followed by its ``w_{l+1}`` bias,
so ``x @ W + b`` maps a batch of row vectors forward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import IoError, ShapeMismatch

CHECKPOINT_MAGIC = "PADGAN-CKPT-1"

HIDDEN_ACTIVATIONS = ("tanh", "relu", "leaky_relu")
OUTPUT_ACTIVATIONS = ("identity", "sigmoid", "tanh")
LEAKY_SLOPE = 0.2
_SIG_LO = np.finfo(float).tiny
_SIG_HI = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class NetworkSpec:
    layer_widths: tuple[int, ...]
    hidden_activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2 or min(widths) < 1:
            raise ValueError(f"need at least two positive widths, got {widths}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    @property
    def n_in(self) -> int:
        return self.layer_widths[0]

    @property
    def n_out(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_params(self) -> int:
        w = self.layer_widths
        return sum(a * b + b for a, b in zip(w[:-1], w[1:]))

    def to_dict(self) -> dict:
        return {
            "layer_widths": list(self.layer_widths),
            "hidden_activation": self.hidden_activation,
            "output_activation": self.output_activation,
        }


def _layer_slices(spec: NetworkSpec):
    offset = 0
    out = []
    w = spec.layer_widths
    for a, b in zip(w[:-1], w[1:]):
        ws = slice(offset, offset + a * b)
        offset += a * b
        bs = slice(offset, offset + b)
        offset += b
        out.append((a, b, ws, bs))
    return out


def layers(spec: NetworkSpec, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """(W, b) views into the flat parameter vector, one pair per layer."""
    params = np.asarray(params)
    if params.shape != (spec.n_params,):
        raise ShapeMismatch(f"expected {spec.n_params} parameters, got shape {params.shape}")
    return [(params[ws].reshape(a, b), params[bs]) for a, b, ws, bs in _layer_slices(spec)]


def init_params(spec: NetworkSpec, seed: int) -> np.ndarray:
    """LeCun-uniform weights, W ~ U(-sqrt(3/fan_in), sqrt(3/fan_in)); zero biases."""
    rng = np.random.default_rng(seed)
    params = np.zeros(spec.n_params)
    for a, b, ws, _bs in _layer_slices(spec):
        bound = np.sqrt(3.0 / a)
        params[ws] = rng.uniform(-bound, bound, size=a * b)
    return params


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        # split form avoids overflow in exp for large |z|
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        # keep the open interval even where float64 saturates
        return np.clip(out, _SIG_LO, _SIG_HI)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    raise ValueError(name)


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.ones_like(z)
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "relu":
        return (z > 0).astype(float)
    if name == "leaky_relu":
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    raise ValueError(name)


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer
    preacts: list[np.ndarray]
    outputs: list[np.ndarray]  # activation of each layer


def forward(spec: NetworkSpec, params: np.ndarray, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.n_in:
        raise ShapeMismatch(f"input shape {x.shape} does not match width {spec.n_in}")
    cache = ForwardCache([], [], [])
    h = x
    ls = layers(spec, params)
    for i, (w, b) in enumerate(ls):
        name = spec.output_activation if i == len(ls) - 1 else spec.hidden_activation
        z = h @ w + b
        a = _act(name, z)
        cache.inputs.append(h)
        cache.preacts.append(z)
        cache.outputs.append(a)
        h = a
    return h, cache


def backward(
    spec: NetworkSpec, params: np.ndarray, cache: ForwardCache, output_grad
) -> tuple[np.ndarray, np.ndarray]:
    """Reverse-mode pass; returns (flat parameter gradient, input gradient)."""
    g = np.asarray(output_grad, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape != cache.outputs[-1].shape:
        raise ShapeMismatch(f"output_grad shape {g.shape} != output shape {cache.outputs[-1].shape}")
    grads = np.zeros(spec.n_params)
    ls = layers(spec, params)
    slices = _layer_slices(spec)
    for i in range(len(ls) - 1, -1, -1):
        name = spec.output_activation if i == len(ls) - 1 else spec.hidden_activation
        dz = g * _act_grad(name, cache.preacts[i], cache.outputs[i])
        _a, _b, ws, bs = slices[i]
        grads[ws] = (cache.inputs[i].T @ dz).ravel()
        grads[bs] = dz.sum(axis=0)
        g = dz @ ls[i][0].T
    return grads, g


def input_jacobian(spec: NetworkSpec, params: np.ndarray, x) -> tuple[np.ndarray, np.ndarray]:
    """Outputs and per-sample Jacobians d out / d in, shape (batch, n_out, n_in)."""
    out, cache = forward(spec, params, x)
    jac = np.empty((out.shape[0], spec.n_out, spec.n_in))
    for k in range(spec.n_out):
        seed = np.zeros_like(out)
        seed[:, k] = 1.0
        _, gin = backward(spec, params, cache, seed)
        jac[:, k, :] = gin
    return out, jac


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n_params: int, **hyper) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params), **hyper)

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "m": self.m.tolist(),
            "v": self.v.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdamState":
        return cls(
            m=np.asarray(d["m"], dtype=float),
            v=np.asarray(d["v"], dtype=float),
            step=int(d["step"]),
            lr=float(d["lr"]),
            beta1=float(d["beta1"]),
            beta2=float(d["beta2"]),
            eps=float(d["eps"]),
        )


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update.  Inputs are left untouched."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ShapeMismatch("params, grads and optimizer moments must share a shape")
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, replace(state, m=m, v=v, step=t)


@dataclass
class Checkpoint:
    spec: NetworkSpec
    params: np.ndarray
    optimizer: AdamState | None = None
    extra: dict = field(default_factory=dict)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    record = {
        "magic": CHECKPOINT_MAGIC,
        "spec": ckpt.spec.to_dict(),
        "params": np.asarray(ckpt.params, dtype=float).tolist(),
        "optimizer": None if ckpt.optimizer is None else ckpt.optimizer.to_dict(),
        "extra": ckpt.extra,
    }
    try:
        Path(path).write_text(json.dumps(record))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_checkpoint(path) -> Checkpoint:
    try:
        record = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if record.get("magic") != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a {CHECKPOINT_MAGIC} checkpoint")
    s = record["spec"]
    spec = NetworkSpec(tuple(s["layer_widths"]), s["hidden_activation"], s["output_activation"])
    params = np.asarray(record["params"], dtype=float)
    if params.shape != (spec.n_params,):
        raise ShapeMismatch(f"{path}: parameter vector does not match spec")
    opt = record.get("optimizer")
    return Checkpoint(
        spec=spec,
        params=params,
        optimizer=None if opt is None else AdamState.from_dict(opt),
        extra=record.get("extra", {}),
    )
