"""Dense tensors with reverse-mode differentiation.

Everything downstream (encoders, the fusion stack, the decoder, all losses)
is built from the operations in this module.  Arrays are numpy, row-major,
and live in one of two precisions selected by a module-level switch:
``wide`` (float64, used for gradient verification) or ``standard`` (float32,
used for training).

Reduction order is fixed: sums delegate to numpy's deterministic pairwise
reduction, backward accumulation walks the tape in reverse creation order,
and scatter-adds use ``np.add.at``.  For a fixed platform and numpy build,
identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import contextlib

import numpy as np


class DimensionError(ValueError):
    """Shape mismatch between operands."""


class ContractViolation(RuntimeError):
    """An operation was called outside its contract."""


class NumericError(RuntimeError):
    """A computation produced a non-finite value where finiteness is required."""


_PRECISIONS = {"wide": np.float64, "standard": np.float32}
_default_dtype = np.float64
_grad_enabled = True


def set_precision(name: str) -> None:
    """Select the working precision ("wide" = float64, "standard" = float32)."""
    global _default_dtype
    if name not in _PRECISIONS:
        raise ValueError(f"unknown precision {name!r}; expected 'wide' or 'standard'")
    _default_dtype = _PRECISIONS[name]


def default_dtype():
    return _default_dtype


@contextlib.contextmanager
def precision(name: str):
    global _default_dtype
    prev = _default_dtype
    set_precision(name)
    try:
        yield
    finally:
        _default_dtype = prev


@contextlib.contextmanager
def no_grad():
    """Disable tape recording (pure evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A numpy array plus an optional gradient and tape linkage.

    Tensors are immutable once published; gradients accumulate in ``grad``
    during :meth:`backward` and are cleared by the optimizer.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(_default_dtype)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return _slice(self, key)

    # -- reverse mode ----------------------------------------------------
    def backward(self) -> None:
        """Accumulate gradients of this scalar into every reachable
        requires_grad tensor, in reverse topological (creation) order."""
        if self.data.size != 1:
            raise ContractViolation(
                f"backward requires a scalar loss, got shape {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise NumericError("backward called on a non-finite loss")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad and not node._parents:
                node.grad = g if node.grad is None else node.grad + g
            if node._backward is None:
                continue
            for parent, contrib in node._backward(g):
                if not parent.requires_grad:
                    continue
                pid = id(parent)
                if pid in grads:
                    grads[pid] = grads[pid] + contrib
                else:
                    grads[pid] = contrib


def tensor(data, requires_grad: bool = False) -> Tensor:
    arr = np.asarray(data, dtype=_default_dtype)
    return Tensor(arr, requires_grad=requires_grad)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=_default_dtype), requires_grad=requires_grad)


def _wants_grad(*tensors: Tensor) -> bool:
    return _grad_enabled and any(t.requires_grad for t in tensors)


def _make(data: np.ndarray, parents, backward) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericError("operation produced non-finite values")
    if _wants_grad(*parents):
        return Tensor(data, requires_grad=True, _parents=tuple(parents), _backward=backward)
    return Tensor(data)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else tensor(x)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum grad down to ``shape`` (reverses numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- arithmetic -----------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data + b.data

    def backward(g):
        return ((a, _unbroadcast(g, a.data.shape)), (b, _unbroadcast(g, b.data.shape)))

    return _make(out, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data - b.data

    def backward(g):
        return ((a, _unbroadcast(g, a.data.shape)), (b, _unbroadcast(-g, b.data.shape)))

    return _make(out, (a, b), backward)


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _make(-a.data, (a,), lambda g: ((a, -g),))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data * b.data

    def backward(g):
        return (
            (a, _unbroadcast(g * b.data, a.data.shape)),
            (b, _unbroadcast(g * a.data, b.data.shape)),
        )

    return _make(out, (a, b), backward)


def scale(a, s: float) -> Tensor:
    a = _as_tensor(a)
    s = float(s)
    return _make(a.data * s, (a,), lambda g: ((a, g * s),))


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(
            f"matmul expects matrices, got shapes {a.data.shape} and {b.data.shape}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(
            f"matmul inner extents differ: {a.data.shape} x {b.data.shape}"
        )
    out = a.data @ b.data

    def backward(g):
        return ((a, g @ b.data.T), (b, a.data.T @ g))

    return _make(out, (a, b), backward)


def transpose(a) -> Tensor:
    a = _as_tensor(a)
    return _make(a.data.T, (a,), lambda g: ((a, g.T),))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out = np.exp(a.data)

    def backward(g):
        return ((a, g * out),)

    return _make(out, (a,), backward)


def log(a) -> Tensor:
    a = _as_tensor(a)
    out = np.log(a.data)

    def backward(g):
        return ((a, g / a.data),)

    return _make(out, (a,), backward)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = np.tanh(a.data)

    def backward(g):
        return ((a, g * (1.0 - out * out)),)

    return _make(out, (a,), backward)


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return ((a, np.broadcast_to(g, a.data.shape).copy()),)

    return _make(out, (a,), backward)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis]
    return scale(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def _slice(a, key) -> Tensor:
    a = _as_tensor(a)
    out = a.data[key]

    def backward(g):
        buf = np.zeros_like(a.data)
        buf[key] = g
        return ((a, buf),)

    return _make(out, (a,), backward)


def vcat(parts) -> Tensor:
    """Concatenate matrices along axis 0."""
    parts = [_as_tensor(p) for p in parts]
    out = np.concatenate([p.data for p in parts], axis=0)
    offsets = np.cumsum([0] + [p.data.shape[0] for p in parts])

    def backward(g):
        return tuple(
            (p, g[offsets[i] : offsets[i + 1]]) for i, p in enumerate(parts)
        )

    return _make(out, tuple(parts), backward)


def stack_rows(vectors) -> Tensor:
    """Stack 1-D tensors into a matrix (one row each)."""
    vectors = [_as_tensor(v) for v in vectors]
    out = np.stack([v.data for v in vectors], axis=0)

    def backward(g):
        return tuple((v, g[i]) for i, v in enumerate(vectors))

    return _make(out, tuple(vectors), backward)


def embed_rows(table, ids) -> Tensor:
    """Gather rows ``ids`` from an embedding table (scatter-add backward)."""
    table = _as_tensor(table)
    idx = np.asarray(ids, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.data.shape[0]):
        raise IndexError(
            f"embedding index out of range for table of {table.data.shape[0]} rows"
        )
    out = table.data[idx]

    def backward(g):
        buf = np.zeros_like(table.data)
        np.add.at(buf, idx, g)
        return ((table, buf),)

    return _make(out, (table,), backward)


# -- fused numerical kernels ----------------------------------------------

def softmax(a, axis: int = -1) -> Tensor:
    """Numerically stable softmax (max subtraction) along ``axis``."""
    a = _as_tensor(a)
    if a.data.ndim == 0:
        raise DimensionError("softmax needs at least one axis")
    try:
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
    except np.exceptions.AxisError as e:
        raise DimensionError(str(e)) from None
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return ((a, (g - dot) * out),)

    return _make(out, (a,), backward)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    sm = np.exp(out)

    def backward(g):
        return ((a, g - sm * g.sum(axis=axis, keepdims=True)),)

    return _make(out, (a,), backward)


def cross_entropy_logits(logits, targets) -> Tensor:
    """Mean of -log softmax(logits)[row, target] over rows.

    ``logits`` is n x c; ``targets`` holds one class index per row.
    """
    logits = _as_tensor(logits)
    if logits.data.ndim != 2:
        raise DimensionError(f"cross_entropy_logits expects a matrix, got {logits.data.shape}")
    idx = np.asarray(targets, dtype=np.int64)
    n, c = logits.data.shape
    if idx.shape != (n,):
        raise DimensionError(f"targets shape {idx.shape} does not match {n} rows")
    if idx.size and (idx.min() < 0 or idx.max() >= c):
        raise IndexError(f"target class out of range for {c} classes")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    out = -logp[np.arange(n), idx].mean()

    def backward(g):
        sm = np.exp(logp)
        sm[np.arange(n), idx] -= 1.0
        return ((logits, (g / n) * sm),)

    return _make(np.asarray(out), (logits,), backward)


def bce_with_logits(logits, labels, mask=None) -> Tensor:
    """Binary cross-entropy on raw logits, mean over unmasked entries.

    Stable form: max(z,0) - z*y + log(1 + exp(-|z|)).
    """
    logits = _as_tensor(logits)
    y = np.asarray(labels, dtype=logits.data.dtype)
    if y.shape != logits.data.shape:
        raise DimensionError(f"labels shape {y.shape} != logits shape {logits.data.shape}")
    if mask is None:
        m = np.ones_like(y)
    else:
        m = np.asarray(mask, dtype=logits.data.dtype)
        if m.shape != y.shape:
            raise DimensionError(f"mask shape {m.shape} != logits shape {logits.data.shape}")
    count = m.sum()
    if count == 0:
        raise ContractViolation("bce_with_logits: no unmasked entries")
    z = logits.data
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    out = (per * m).sum() / count

    def backward(g):
        sig = 1.0 / (1.0 + np.exp(-z))
        return ((logits, (g / count) * m * (sig - y)),)

    return _make(np.asarray(out), (logits,), backward)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Row-wise layer normalization: gain * (x - mu) / sqrt(var + eps) + bias."""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    d = x.data.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gain.data + bias.data

    def backward(g):
        gg = g * gain.data
        dxhat_mean = gg.mean(axis=-1, keepdims=True)
        proj = (gg * xhat).mean(axis=-1, keepdims=True)
        dx = inv * (gg - dxhat_mean - xhat * proj)
        axes = tuple(range(g.ndim - 1))
        return (
            (x, dx),
            (gain, (g * xhat).sum(axis=axes)),
            (bias, g.sum(axis=axes)),
        )

    return _make(out, (x, gain, bias), backward)


# -- verification -----------------------------------------------------------

def grad_check(f, params, eps: float = 1e-5, samples_per_param=None, seed: int = 0) -> float:
    """Compare analytic gradients of ``f`` against central finite differences.

    ``f`` is a zero-argument callable returning a scalar Tensor, deterministic
    in ``params`` (a list of requires_grad Tensors probed in place).  With
    ``samples_per_param`` set, only a seed-controlled random subsample of
    coordinates per parameter is probed.  Returns the worst relative error
    |analytic - numeric| / max(|numeric|, 1e-6).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    for p in params:
        p.grad = None
    loss = f()
    if not np.all(np.isfinite(loss.data)):
        raise NumericError("grad_check: objective is non-finite")
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    for p in params:
        p.grad = None

    rng = np.random.RandomState(seed)
    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        n = flat.size
        if samples_per_param is None or samples_per_param >= n:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=samples_per_param, replace=False)
        for c in coords:
            orig = flat[c]
            step = eps * max(1.0, abs(orig))
            flat[c] = orig + step
            up = float(f().data)
            flat[c] = orig - step
            down = float(f().data)
            flat[c] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NumericError("grad_check: objective is non-finite at probe point")
            numeric = (up - down) / (2.0 * step)
            err = abs(a.reshape(-1)[c] - numeric) / max(abs(numeric), 1e-6)
            if err > worst:
                worst = err
    return float(worst)
