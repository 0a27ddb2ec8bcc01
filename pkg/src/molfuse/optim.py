"""Named parameters, freezing, and Adam.

Parameters live in a :class:`ParamStore` keyed by slash-separated name paths
(e.g. ``"encoders.graph/mlp0/w"``), which is also the checkpoint table key.
Frozen parameters keep their bits through any number of optimizer steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import ContractViolation, Tensor, default_dtype


@dataclass
class Parameter:
    name: str
    tensor: Tensor
    frozen: bool = False


class ParamStore:
    """Registry of named parameters with seeded, creation-order-deterministic init."""

    def __init__(self, seed: int = 0):
        self._rng = np.random.RandomState(seed)
        self.params: dict[str, Parameter] = {}

    def add(self, name: str, shape, init: str = "gauss", scale: float = 0.02) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        if init == "gauss":
            data = self._rng.randn(*shape) * scale
        elif init == "zeros":
            data = np.zeros(shape)
        elif init == "ones":
            data = np.ones(shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        t = Tensor(np.asarray(data, dtype=default_dtype()), requires_grad=True)
        self.params[name] = Parameter(name, t)
        return t

    def freeze(self, prefix: str) -> int:
        """Freeze every parameter whose name starts with ``prefix``; idempotent."""
        hits = 0
        for p in self.params.values():
            if p.name.startswith(prefix):
                p.frozen = True
                hits += 1
        return hits

    def trainable(self) -> list[Parameter]:
        return [p for p in self.params.values() if not p.frozen]

    def all_tensors(self) -> dict[str, Tensor]:
        return {name: p.tensor for name, p in self.params.items()}

    def zero_grads(self) -> None:
        for p in self.params.values():
            p.tensor.grad = None


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, store: ParamStore) -> None:
    """One Adam update over the store's non-frozen parameters.

    Parameters with a populated gradient are updated and their grads cleared;
    a trainable parameter with no grad is a contract violation.  Frozen
    parameters are never touched, grads or not.
    """
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for p in store.params.values():
        if p.frozen:
            p.tensor.grad = None
            continue
        g = p.tensor.grad
        if g is None:
            raise ContractViolation(f"adam_step: trainable parameter {p.name!r} has no grad")
        dt = p.tensor.data.dtype
        g = g.astype(dt, copy=False)
        if p.name not in state.m:
            state.m[p.name] = np.zeros_like(p.tensor.data)
            state.v[p.name] = np.zeros_like(p.tensor.data)
        m = state.m[p.name]
        v = state.v[p.name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        mhat = m / dt.type(bc1)
        vhat = v / dt.type(bc2)
        p.tensor.data = p.tensor.data - dt.type(state.lr) * mhat / (np.sqrt(vhat) + dt.type(state.eps))
        p.tensor.grad = None
