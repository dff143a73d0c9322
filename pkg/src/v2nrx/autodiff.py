"""
Minimal reverse-mode automatic differentiation on float64 numpy arrays.

Every operation records its parents and a backward closure on the output
tensor; ``Tensor.backward`` replays the recorded graph in reverse
topological order. Leading (batch) axes broadcast like numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidLabelError, ShapeError

LN_EPS = 1e-6


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None, op=""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op or 'leaf'})"

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable tensor."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward", self.shape, ())
            grad = np.ones_like(self.data)
        order, seen, stack = [], set(), [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = grad if self.grad is None else self.grad + grad
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __add__(self, other):
        return add(self, _lift(other))

    __radd__ = __add__

    def __matmul__(self, other):
        return matmul(self, other)

    def __mul__(self, c):
        if isinstance(c, Tensor):
            return mul(self, c)
        return scale(self, c)

    __rmul__ = __mul__

    def __getitem__(self, idx):
        return slice_(self, idx)


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t: Tensor, g):
    if not t.requires_grad:
        return
    t.grad = g if t.grad is None else t.grad + g


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _node(data, parents, backward, op):
    req = any(p.requires_grad for p in parents)
    return Tensor(data, req, parents if req else (), backward if req else None, op)


# -- primitives --------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[-1] != b.shape[-2 if b.data.ndim > 1 else 0]:
        raise ShapeError("matmul", a.shape, b.shape)
    out = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return _node(out, (a, b), backward, "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError("add", a.shape, b.shape) from None

    def backward(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    return _node(out, (a, b), backward, "add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError("mul", a.shape, b.shape) from None

    def backward(g):
        _accum(a, _unbroadcast(g * b.data, a.shape))
        _accum(b, _unbroadcast(g * a.data, b.shape))

    return _node(out, (a, b), backward, "mul")


def scale(x: Tensor, c: float) -> Tensor:
    return _node(x.data * c, (x,), lambda g: _accum(x, g * c), "scale")


def relu(x: Tensor) -> Tensor:
    # subgradient at exactly 0 is 0
    on = x.data > 0
    return _node(np.where(on, x.data, 0.0), (x,), lambda g: _accum(x, g * on), "relu")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LN_EPS) -> Tensor:
    """Normalize the last axis, then apply learned gain and bias."""
    if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
        raise ShapeError("layer_norm", x.shape, gain.shape)
    mu = x.data.mean(-1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc**2).mean(-1, keepdims=True) + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def backward(g):
        if gain.requires_grad:
            _accum(gain, (g * xhat).reshape(-1, xhat.shape[-1]).sum(0))
        if bias.requires_grad:
            _accum(bias, g.reshape(-1, g.shape[-1]).sum(0))
        if x.requires_grad:
            gx = g * gain.data
            dx = inv * (gx - gx.mean(-1, keepdims=True) - xhat * (gx * xhat).mean(-1, keepdims=True))
            _accum(x, dx)

    return _node(out, (x, gain, bias), backward, "layer_norm")


def softmax(x: Tensor) -> Tensor:
    """Shift-stabilized softmax over the last axis."""
    e = np.exp(x.data - x.data.max(-1, keepdims=True))
    s = e / e.sum(-1, keepdims=True)

    def backward(g):
        _accum(x, s * (g - (g * s).sum(-1, keepdims=True)))

    return _node(s, (x,), backward, "softmax")


def concat(ts, axis: int = -1) -> Tensor:
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError("concat", ts[0].shape, ts[-1].shape) from None
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def backward(g):
        for t, piece in zip(ts, np.split(g, bounds, axis=axis)):
            _accum(t, piece)

    return _node(out, tuple(ts), backward, "concat")


def slice_(x: Tensor, idx) -> Tensor:
    out = x.data[idx]

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx, g) if _is_fancy(idx) else full.__setitem__(idx, g)
        _accum(x, full)

    return _node(out, (x,), backward, "slice")


def _is_fancy(idx):
    parts = idx if isinstance(idx, tuple) else (idx,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


def reshape(x: Tensor, shape) -> Tensor:
    return _node(x.data.reshape(shape), (x,), lambda g: _accum(x, g.reshape(x.shape)), "reshape")


def transpose(x: Tensor) -> Tensor:
    """Swap the last two axes."""
    return _node(np.swapaxes(x.data, -1, -2), (x,), lambda g: _accum(x, np.swapaxes(g, -1, -2)), "transpose")


def sum_(x: Tensor) -> Tensor:
    return _node(np.array(x.data.sum()), (x,), lambda g: _accum(x, np.broadcast_to(g, x.shape).copy()), "sum")


def mean(x: Tensor) -> Tensor:
    n = x.data.size
    return _node(np.array(x.data.mean()), (x,), lambda g: _accum(x, np.full(x.shape, g / n)), "mean")


# -- layers ------------------------------------------------------------------


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return add(matmul(x, w), b)


@dataclass
class AttentionParams:
    wq: Tensor
    bq: Tensor
    wk: Tensor
    bk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor
    num_heads: int

    @property
    def embed_dim(self) -> int:
        return self.wq.shape[0]

    @property
    def d_k(self) -> int:
        return self.embed_dim // self.num_heads


def multi_head_attention(x: Tensor, p: AttentionParams, return_weights: bool = False):
    """Scaled dot-product self-attention with ``p.num_heads`` heads.

    ``x`` is ``(..., tokens, embed_dim)``; heads are column slices of the
    projected queries/keys/values, concatenated before the output projection.
    """
    E = x.shape[-1]
    if E != p.embed_dim or E % p.num_heads:
        raise ShapeError("multi_head_attention", x.shape, p.wq.shape)
    dk = p.d_k
    q, k, v = dense(x, p.wq, p.bq), dense(x, p.wk, p.bk), dense(x, p.wv, p.bv)
    heads, weights = [], []
    for h in range(p.num_heads):
        cols = (Ellipsis, slice(h * dk, (h + 1) * dk))
        scores = scale(matmul(q[cols], transpose(k[cols])), 1.0 / np.sqrt(dk))
        a = softmax(scores)
        weights.append(a.data)
        heads.append(matmul(a, v[cols]))
    out = dense(concat(heads, axis=-1), p.wo, p.bo)
    if return_weights:
        return out, np.stack(weights, axis=-3)
    return out


def bce_with_logits(logits: Tensor, labels, mask=None) -> Tensor:
    """Mean binary cross-entropy of sigmoid(logits) against {0,1} labels."""
    b = np.asarray(labels, dtype=np.float64)
    if b.shape != logits.shape:
        raise ShapeError("bce_with_logits", logits.shape, b.shape)
    if not np.isin(b, (0.0, 1.0)).all():
        raise InvalidLabelError("labels must be 0 or 1")
    w = np.ones_like(b) if mask is None else np.broadcast_to(np.asarray(mask, dtype=np.float64), b.shape)
    count = max(w.sum(), 1.0)
    l = logits.data
    per = np.maximum(l, 0) - l * b + np.log1p(np.exp(-np.abs(l)))
    loss = (w * per).sum() / count

    def backward(g):
        sig = 0.5 * (1.0 + np.tanh(0.5 * l))
        _accum(logits, g * w * (sig - b) / count)

    return _node(np.array(loss), (logits,), backward, "bce")


# -- optimizer ---------------------------------------------------------------


@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adamw_step(params: dict, grads: dict, state: OptimizerState) -> None:
    """One AdamW update, in place on the arrays of ``params``.

    ``params`` maps names to ``Tensor`` or ndarray; ``grads`` maps the same
    names to gradient arrays (missing entries count as zero).
    """
    state.step += 1
    t = state.step
    c1 = 1 - state.beta1**t
    c2 = 1 - state.beta2**t
    for name, p in params.items():
        theta = p.data if isinstance(p, Tensor) else p
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(theta)
        elif g.shape != theta.shape:
            raise ShapeError("adamw_step", theta.shape, g.shape)
        m = state.m.setdefault(name, np.zeros_like(theta))
        v = state.v.setdefault(name, np.zeros_like(theta))
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        update = (m / c1) / (np.sqrt(v / c2) + state.eps) + state.weight_decay * theta
        theta -= state.lr * update


# -- verification ------------------------------------------------------------


def relative_error(a, b) -> np.ndarray:
    return np.abs(a - b) / (np.abs(a) + np.abs(b) + 1e-12)


def grad_check(f, inputs, h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``f`` takes one Tensor per entry of ``inputs`` (arrays) and returns a
    scalar Tensor.
    """
    arrays = [np.array(x, dtype=np.float64) for x in inputs]
    ts = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    f(*ts).backward()
    worst = 0.0
    for i, a in enumerate(arrays):
        analytic = ts[i].grad if ts[i].grad is not None else np.zeros_like(a)
        numeric = np.empty_like(a)
        flat = a.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            fp = f(*[Tensor(x) for x in arrays]).data
            flat[j] = orig - h
            fm = f(*[Tensor(x) for x in arrays]).data
            flat[j] = orig
            numeric.reshape(-1)[j] = (fp - fm) / (2 * h)
        if a.size:
            worst = max(worst, float(relative_error(analytic, numeric).max()))
    return worst
