"""Shared-trunk actor-critic MLP (3 -> 64 -> 64, softmax actor, scalar critic).

Gradients are derived by hand; all arithmetic is float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

N_IN = 3
N_HIDDEN = 64
N_ACTIONS = 2

PARAM_SHAPES = {
    "W1": (N_HIDDEN, N_IN),
    "b1": (N_HIDDEN,),
    "W2": (N_HIDDEN, N_HIDDEN),
    "b2": (N_HIDDEN,),
    "Wa": (N_ACTIONS, N_HIDDEN),
    "ba": (N_ACTIONS,),
    "wv": (N_HIDDEN,),
    "bv": (),
}
PARAM_NAMES = tuple(PARAM_SHAPES)
N_PARAMS = sum(int(np.prod(s)) for s in PARAM_SHAPES.values())


@dataclass
class PolicyParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    Wa: np.ndarray
    ba: np.ndarray
    wv: np.ndarray
    bv: np.ndarray

    def __post_init__(self):
        for name, shape in PARAM_SHAPES.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            setattr(self, name, arr)

    @classmethod
    def zeros(cls) -> "PolicyParams":
        return cls(**{k: np.zeros(s) for k, s in PARAM_SHAPES.items()})

    @classmethod
    def init(cls, rng: np.random.Generator) -> "PolicyParams":
        """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.

        Draw order is fixed: W1, W2, Wa, wv.
        """
        def uniform(shape, fan_in):
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        p = cls.zeros()
        p.W1 = uniform(PARAM_SHAPES["W1"], N_IN)
        p.W2 = uniform(PARAM_SHAPES["W2"], N_HIDDEN)
        p.Wa = uniform(PARAM_SHAPES["Wa"], N_HIDDEN)
        p.wv = uniform(PARAM_SHAPES["wv"], N_HIDDEN)
        return p

    def arrays(self):
        return [getattr(self, k) for k in PARAM_NAMES]

    def copy(self) -> "PolicyParams":
        return PolicyParams(*(a.copy() for a in self.arrays()))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def from_flat(cls, vec) -> "PolicyParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} values, got {vec.shape}")
        out, pos = {}, 0
        for k, s in PARAM_SHAPES.items():
            n = int(np.prod(s))
            out[k] = vec[pos:pos + n].reshape(s).copy()
            pos += n
        return cls(**out)

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())


@dataclass
class ForwardTrace:
    """Intermediates of one batched forward pass, kept for :func:`backward`."""

    params: PolicyParams
    obs: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    z2: np.ndarray
    h2: np.ndarray
    logits: np.ndarray
    probs: np.ndarray
    log_probs: np.ndarray
    value: np.ndarray


def forward(params: PolicyParams, obs) -> ForwardTrace:
    """Evaluate the network on ``obs`` of shape ``(3,)`` or ``(N, 3)``; outputs are always batched."""
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    if obs.ndim != 2 or obs.shape[1] != N_IN:
        raise ValueError(f"observations must have shape (N, {N_IN}), got {obs.shape}")
    if not np.isfinite(obs).all():
        raise ValueError("non-finite observation")
    z1 = obs @ params.W1.T + params.b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params.W2.T + params.b2
    h2 = np.maximum(z2, 0.0)
    logits = h2 @ params.Wa.T + params.ba
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(log_probs)
    value = h2 @ params.wv + params.bv
    return ForwardTrace(params, obs, z1, h1, z2, h2, logits, probs, log_probs, value)


def backward(trace: ForwardTrace, d_logits, d_value) -> PolicyParams:
    """Chain rule from head seeds ``dL/dlogits`` (N, 2) and ``dL/dV`` (N,) to every parameter.

    Gradients are summed over the batch. Actor and critic both backpropagate
    into the shared trunk.
    """
    p = trace.params
    n = trace.obs.shape[0]
    d_logits = np.asarray(d_logits, dtype=np.float64).reshape(-1, N_ACTIONS)
    d_value = np.asarray(d_value, dtype=np.float64).reshape(-1)
    if d_logits.shape[0] != n or d_value.shape[0] != n:
        raise ValueError(f"seed batch sizes ({d_logits.shape[0]}, {d_value.shape[0]}) "
                         f"do not match trace batch {n}")
    d_h2 = d_logits @ p.Wa + np.outer(d_value, p.wv)
    d_z2 = d_h2 * (trace.z2 > 0)
    d_h1 = d_z2 @ p.W2
    d_z1 = d_h1 * (trace.z1 > 0)
    return PolicyParams(
        W1=d_z1.T @ trace.obs,
        b1=d_z1.sum(axis=0),
        W2=d_z2.T @ trace.h1,
        b2=d_z2.sum(axis=0),
        Wa=d_logits.T @ trace.h2,
        ba=d_logits.sum(axis=0),
        wv=d_value @ trace.h2,
        bv=np.asarray(d_value.sum()),
    )


def unique_rows(obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct rows of a 2-D array and the inverse map, ``obs == uniq[inv]``.

    Rows are keyed by the exact per-column value ranks, which avoids the
    slow structured sort inside ``np.unique(axis=0)``.
    """
    key = np.zeros(obs.shape[0], dtype=np.int64)
    for col in obs.T:
        vals, ranks = np.unique(col, return_inverse=True)
        key = key * len(vals) + ranks.ravel()
    _, first, inv = np.unique(key, return_index=True, return_inverse=True)
    return obs[first], inv.ravel()


def effective_lr(base_lr: float, iteration: int, step_size: int = 1000,
                 decay: float = 0.5) -> float:
    """Step schedule: ``base_lr * decay ** (iteration // step_size)``."""
    if iteration < 0:
        raise ValueError("iteration must be non-negative")
    return base_lr * decay ** (iteration // step_size)


@dataclass
class AdamState:
    m: PolicyParams
    v: PolicyParams
    step_count: int = 0
    base_lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, base_lr: float = 1e-4, **kw) -> "AdamState":
        return cls(PolicyParams.zeros(), PolicyParams.zeros(), 0, base_lr, **kw)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.step_count, self.base_lr,
                         self.beta1, self.beta2, self.eps)


def adam_step(params: PolicyParams, grads: PolicyParams, state: AdamState,
              lr: float | None = None) -> None:
    """Bias-corrected Adam update, applied in place to ``params`` and ``state``."""
    lr = state.base_lr if lr is None else lr
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name in PARAM_NAMES:
        g = getattr(grads, name)
        m = state.beta1 * getattr(state.m, name) + (1.0 - state.beta1) * g
        v = state.beta2 * getattr(state.v, name) + (1.0 - state.beta2) * g * g
        setattr(state.m, name, m)
        setattr(state.v, name, v)
        step = lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        setattr(params, name, getattr(params, name) - step)


# Checkpoint layout, all little-endian:
#   8-byte magic, uint32 version, uint32 section flags      (16-byte header)
#   params as float64 in PARAM_NAMES order, matrices row-major
#   [flag 1] Adam: m, v (same order), then step_count, base_lr, beta1, beta2, eps
#   [flag 2] extra float64 tail (the trainer stores its dual state here)
CHECKPOINT_MAGIC = b"TUCPPONN"
CHECKPOINT_VERSION = 1
HAS_ADAM = 1
HAS_EXTRA = 2


def save_checkpoint(path, params: PolicyParams, adam: AdamState | None = None,
                    extra=None) -> None:
    flags = (HAS_ADAM if adam is not None else 0) | (HAS_EXTRA if extra is not None else 0)
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, flags),
              params.flat().astype("<f8").tobytes()]
    if adam is not None:
        tail = [adam.step_count, adam.base_lr, adam.beta1, adam.beta2, adam.eps]
        chunks += [adam.m.flat().astype("<f8").tobytes(), adam.v.flat().astype("<f8").tobytes(),
                   np.asarray(tail, dtype="<f8").tobytes()]
    if extra is not None:
        extra = np.asarray(extra, dtype="<f8").ravel()
        chunks += [struct.pack("<Q", extra.size), extra.tobytes()]
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_checkpoint(path):
    """Return ``(params, adam_or_None, extra_or_None)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a policy checkpoint")
    version, flags = struct.unpack("<II", raw[8:16])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos = 16

    def take(n):
        nonlocal pos
        out = np.frombuffer(raw, dtype="<f8", count=n, offset=pos).astype(np.float64)
        pos += 8 * n
        return out

    params = PolicyParams.from_flat(take(N_PARAMS))
    adam = None
    if flags & HAS_ADAM:
        m = PolicyParams.from_flat(take(N_PARAMS))
        v = PolicyParams.from_flat(take(N_PARAMS))
        step, base_lr, b1, b2, eps = take(5)
        adam = AdamState(m, v, int(step), float(base_lr), float(b1), float(b2), float(eps))
    extra = None
    if flags & HAS_EXTRA:
        (n,) = struct.unpack("<Q", raw[pos:pos + 8])
        pos += 8
        extra = take(n)
    return params, adam, extra
