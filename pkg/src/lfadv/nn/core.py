"""Minimal differentiable network kernel (float64, numpy).

Layers: dense, relu, dropout, batchnorm, log_softmax. A Network is a
sequence of layers built from spec dicts; forward returns the output plus a
cache that backward consumes. Gradients accumulate into Param.grad until
zero_grads() is called, so repeated backward calls sum up.

Train/eval behaviour is controlled by a Mode value: eval disables dropout
and uses batchnorm running statistics; train samples dropout masks from the
network's rng (or an rng carried by the mode) and normalizes with batch
statistics, updating the running buffers unless stats updates are frozen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError, NumericError

__all__ = ["Param", "Mode", "EVAL", "TRAIN", "Layer", "Dense", "ReLU", "Dropout",
           "BatchNorm", "LogSoftmax", "Network", "layer_from_spec"]

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass
class Param:
    """A trainable array with its gradient and Adam state."""

    value: np.ndarray
    grad: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def of(cls, value: np.ndarray) -> "Param":
        value = np.asarray(value, dtype=np.float64)
        return cls(
            value=value,
            grad=np.zeros_like(value),
            m=np.zeros_like(value),
            v=np.zeros_like(value),
        )

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def copy_state(self) -> dict:
        return {"value": self.value.copy(), "m": self.m.copy(), "v": self.v.copy(), "t": self.t}

    def load_state(self, state: dict) -> None:
        self.value[...] = state["value"]
        self.m[...] = state["m"]
        self.v[...] = state["v"]
        self.t = int(state["t"])


@dataclass(frozen=True)
class Mode:
    """Forward-pass behaviour switch.

    update_stats=None means "follow train"; set it to False to run
    train-style batch statistics without touching the running buffers
    (used for gradient checking and frozen passes).
    """

    train: bool = False
    update_stats: Optional[bool] = None
    rng: Optional[np.random.Generator] = None

    @property
    def stats_update(self) -> bool:
        return self.train if self.update_stats is None else self.update_stats


EVAL = Mode(train=False)
TRAIN = Mode(train=True)


class Layer:
    kind = "?"

    def params(self) -> list[Param]:
        return []

    def forward(self, X: np.ndarray, mode: Mode, rng: np.random.Generator):
        raise NotImplementedError

    def backward(self, cache, dY: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> dict:
        return {"kind": self.kind}

    def buffers(self) -> dict[str, np.ndarray]:
        """Non-trainable state that must survive checkpointing."""
        return {}


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        if in_dim <= 0 or out_dim <= 0:
            raise ConfigError(f"dense dims must be positive, got {in_dim}x{out_dim}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        self.W = Param.of(rng.uniform(-limit, limit, size=(in_dim, out_dim)))
        self.b = Param.of(np.zeros(out_dim))

    def params(self):
        return [self.W, self.b]

    def forward(self, X, mode, rng):
        return X @ self.W.value + self.b.value, X

    def backward(self, cache, dY):
        X = cache
        self.W.grad += X.T @ dY
        self.b.grad += dY.sum(axis=0)
        return dY @ self.W.value.T

    def spec(self):
        return {"kind": self.kind, "in_dim": self.in_dim, "out_dim": self.out_dim}


class ReLU(Layer):
    kind = "relu"

    def forward(self, X, mode, rng):
        mask = X > 0
        return X * mask, mask

    def backward(self, cache, dY):
        return dY * cache


class Dropout(Layer):
    """Inverted dropout: scales by 1/(1-p) at train time, identity at eval."""

    kind = "dropout"

    def __init__(self, p: float):
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"dropout p must be in [0, 1), got {p}")
        self.p = p

    def forward(self, X, mode, rng):
        if not mode.train or self.p == 0.0:
            return X, None
        keep = rng.random(X.shape) >= self.p
        scale = 1.0 / (1.0 - self.p)
        return X * keep * scale, (keep, scale)

    def backward(self, cache, dY):
        if cache is None:
            return dY
        keep, scale = cache
        return dY * keep * scale

    def spec(self):
        return {"kind": self.kind, "p": self.p}


class BatchNorm(Layer):
    """Per-feature batch normalization with learnable scale/shift.

    Normalization uses biased batch variance; the running-variance buffer is
    updated with the unbiased estimate, which is why train-mode batches of
    size 1 are rejected.
    """

    kind = "batchnorm"

    def __init__(self, dim: int):
        if dim <= 0:
            raise ConfigError(f"batchnorm dim must be positive, got {dim}")
        self.dim = dim
        self.gamma = Param.of(np.ones(dim))
        self.beta = Param.of(np.zeros(dim))
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)

    def params(self):
        return [self.gamma, self.beta]

    def forward(self, X, mode, rng):
        if mode.train:
            n = X.shape[0]
            if n < 2:
                raise NumericError("batchnorm requires batch size >= 2 in train mode")
            mu = X.mean(axis=0)
            var = X.var(axis=0)
            if mode.stats_update:
                self.running_mean[...] = (1 - BN_MOMENTUM) * self.running_mean + BN_MOMENTUM * mu
                self.running_var[...] = (
                    (1 - BN_MOMENTUM) * self.running_var + BN_MOMENTUM * var * n / (n - 1)
                )
            invstd = 1.0 / np.sqrt(var + BN_EPS)
        else:
            mu = self.running_mean
            invstd = 1.0 / np.sqrt(self.running_var + BN_EPS)
        xhat = (X - mu) * invstd
        Y = self.gamma.value * xhat + self.beta.value
        return Y, (xhat, invstd, mode.train)

    def backward(self, cache, dY):
        xhat, invstd, was_train = cache
        self.gamma.grad += (dY * xhat).sum(axis=0)
        self.beta.grad += dY.sum(axis=0)
        dxhat = dY * self.gamma.value
        if not was_train:
            return dxhat * invstd
        n = dY.shape[0]
        return (invstd / n) * (
            n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
        )

    def spec(self):
        return {"kind": self.kind, "dim": self.dim}

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}


class LogSoftmax(Layer):
    kind = "log_softmax"

    def forward(self, X, mode, rng):
        shifted = X - X.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        return logp, np.exp(logp)

    def backward(self, cache, dY):
        probs = cache
        return dY - probs * dY.sum(axis=1, keepdims=True)


def layer_from_spec(spec: dict, rng: np.random.Generator) -> Layer:
    kind = spec.get("kind")
    if kind == "dense":
        return Dense(int(spec["in_dim"]), int(spec["out_dim"]), rng)
    if kind == "relu":
        return ReLU()
    if kind == "dropout":
        return Dropout(float(spec["p"]))
    if kind == "batchnorm":
        return BatchNorm(int(spec["dim"]))
    if kind == "log_softmax":
        return LogSoftmax()
    raise ConfigError(f"unknown layer kind {kind!r}")


def _check_dims(specs: list[dict]) -> None:
    width = None
    for i, spec in enumerate(specs):
        kind = spec.get("kind")
        if kind == "dense":
            if width is not None and int(spec["in_dim"]) != width:
                raise ConfigError(
                    f"layer {i}: dense in_dim {spec['in_dim']} != incoming width {width}"
                )
            width = int(spec["out_dim"])
        elif kind == "batchnorm":
            if width is not None and int(spec["dim"]) != width:
                raise ConfigError(f"layer {i}: batchnorm dim {spec['dim']} != incoming width {width}")


class Network:
    """A layer stack with its own dropout rng stream."""

    def __init__(self, layers: list[Layer], rng: np.random.Generator):
        self.layers = layers
        self.rng = rng

    @classmethod
    def build(cls, specs: list[dict], seed) -> "Network":
        """``seed`` is an int or tuple of ints naming this network's streams."""
        _check_dims(list(specs))
        base = (int(seed),) if np.isscalar(seed) else tuple(int(s) for s in seed)
        init_rng = np.random.default_rng(np.random.SeedSequence(base + (0,)))
        dropout_rng = np.random.default_rng(np.random.SeedSequence(base + (1,)))
        return cls([layer_from_spec(s, init_rng) for s in specs], dropout_rng)

    def params(self) -> list[Param]:
        return [p for layer in self.layers for p in layer.params()]

    def n_params(self) -> int:
        return sum(p.value.size for p in self.params())

    def zero_grads(self) -> None:
        for p in self.params():
            p.zero_grad()

    def forward(self, X: np.ndarray, mode: Mode = EVAL):
        X = np.asarray(X, dtype=np.float64)
        if not np.isfinite(X).all():
            raise NumericError("non-finite network input")
        rng = mode.rng if mode.rng is not None else self.rng
        caches = []
        out = X
        for layer in self.layers:
            out, cache = layer.forward(out, mode, rng)
            caches.append(cache)
        return out, caches

    def backward(self, caches: list, dout: np.ndarray) -> np.ndarray:
        if len(caches) != len(self.layers):
            raise ConfigError("backward cache does not match this network")
        d = dout
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            d = layer.backward(cache, d)
        return d

    # -- state snapshots (parameters + buffers), used for freezes and checkpoints

    def copy_state(self) -> dict:
        return {
            "params": [p.copy_state() for p in self.params()],
            "buffers": [
                {k: v.copy() for k, v in layer.buffers().items()} for layer in self.layers
            ],
        }

    def load_state(self, state: dict) -> None:
        for p, s in zip(self.params(), state["params"]):
            p.load_state(s)
        for layer, bufs in zip(self.layers, state["buffers"]):
            own = layer.buffers()
            for k, v in bufs.items():
                own[k][...] = v

    def spec_list(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    def named_arrays(self) -> dict[str, np.ndarray]:
        """Flat name->array mapping of every value that a checkpoint must hold."""
        out: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.layers):
            for j, p in enumerate(layer.params()):
                base = f"layer{i}.p{j}"
                out[f"{base}.value"] = p.value
                out[f"{base}.m"] = p.m
                out[f"{base}.v"] = p.v
                out[f"{base}.t"] = np.array(p.t, dtype=np.int64)
            for name, buf in layer.buffers().items():
                out[f"layer{i}.{name}"] = buf
        return out

    def load_named_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for i, layer in enumerate(self.layers):
            for j, p in enumerate(layer.params()):
                base = f"layer{i}.p{j}"
                p.value[...] = arrays[f"{base}.value"]
                p.m[...] = arrays[f"{base}.m"]
                p.v[...] = arrays[f"{base}.v"]
                p.t = int(arrays[f"{base}.t"])
            for name in layer.buffers():
                layer.buffers()[name][...] = arrays[f"layer{i}.{name}"]

    def rng_state_json(self) -> str:
        return json.dumps(self.rng.bit_generator.state)

    def set_rng_state_json(self, payload: str) -> None:
        self.rng.bit_generator.state = json.loads(payload)
