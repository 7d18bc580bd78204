"""Dense matrices with reverse-mode differentiation and first-order optimizers.

Every value is a 2-D float64 array wrapped in a :class:`Tensor`. Operations on
tensors that require gradients build a graph; :func:`backward` orders that graph
into a :class:`Tape` and replays it in reverse, writing ``.grad`` on every node.
"""

from __future__ import annotations

import numpy as np

LOG_EPS = 1e-12


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad=False, _parents=(), op=""):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"non-finite entries produced by {op or 'input'}")
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = None
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self):
        return transpose(self)

    def numpy(self):
        return self.data.copy()

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)


def tensor(data, requires_grad=False):
    return Tensor(data, requires_grad=requires_grad)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, op, backward):
    needs = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=needs, _parents=parents if needs else (), op=op)
    if needs:
        out._backward = backward
    return out


def _accumulate(node, g):
    if node.requires_grad:
        node.grad = g if node.grad is None else node.grad + g


def _unbroadcast(g, shape):
    # undo row/column broadcasting of a (1, d), (n, 1) or (1, 1) operand
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] != 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        g = g.sum(axis=1, keepdims=True)
    return g


def _check_broadcast(a, b, op):
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


# --- primitives -------------------------------------------------------------

def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _result(a.data @ b.data, (a, b), "matmul", backward)


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "add")

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _result(a.data + b.data, (a, b), "add", backward)


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "sub")

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, -_unbroadcast(g, b.shape))

    return _result(a.data - b.data, (a, b), "sub", backward)


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "mul")

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.shape))

    return _result(a.data * b.data, (a, b), "mul", backward)


def scale(a, c):
    a = _as_tensor(a)
    c = float(c)

    def backward(g):
        _accumulate(a, g * c)

    return _result(a.data * c, (a,), "scale", backward)


def relu(a):
    a = _as_tensor(a)
    mask = a.data > 0

    def backward(g):
        _accumulate(a, g * mask)

    return _result(a.data * mask, (a,), "relu", backward)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a):
    a = _as_tensor(a)
    s = _sigmoid(a.data)

    def backward(g):
        _accumulate(a, g * s * (1.0 - s))

    return _result(s, (a,), "sigmoid", backward)


def tanh(a):
    a = _as_tensor(a)
    t = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - t * t))

    return _result(t, (a,), "tanh", backward)


def log(a):
    """Natural log with inputs clamped below at ``LOG_EPS``."""
    a = _as_tensor(a)
    clamped = np.maximum(a.data, LOG_EPS)

    def backward(g):
        _accumulate(a, g * (a.data > LOG_EPS) / clamped)

    return _result(np.log(clamped), (a,), "log", backward)


def exp(a):
    a = _as_tensor(a)
    e = np.exp(a.data)

    def backward(g):
        _accumulate(a, g * e)

    return _result(e, (a,), "exp", backward)


def square(a):
    a = _as_tensor(a)

    def backward(g):
        _accumulate(a, 2.0 * g * a.data)

    return _result(a.data * a.data, (a,), "square", backward)


def transpose(a):
    a = _as_tensor(a)

    def backward(g):
        _accumulate(a, g.T)

    return _result(a.data.T, (a,), "transpose", backward)


def sum(a):  # noqa: A001 - mirrors numpy naming
    a = _as_tensor(a)

    def backward(g):
        _accumulate(a, np.full_like(a.data, g[0, 0]))

    return _result(a.data.sum(), (a,), "sum", backward)


def mean(a):
    a = _as_tensor(a)
    n = a.data.size

    def backward(g):
        _accumulate(a, np.full_like(a.data, g[0, 0] / n))

    return _result(a.data.mean(), (a,), "mean", backward)


def concat_cols(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols: row counts differ, {a.shape} vs {b.shape}")
    k = a.shape[1]

    def backward(g):
        _accumulate(a, g[:, :k])
        _accumulate(b, g[:, k:])

    return _result(np.hstack([a.data, b.data]), (a, b), "concat_cols", backward)


def take_rows(a, rows):
    a = _as_tensor(a)
    rows = np.asarray(rows, dtype=np.int64)

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, rows, g)
        _accumulate(a, full)

    return _result(a.data[rows], (a,), "take_rows", backward)


def softmax_rows(a):
    """Row-wise softmax; subtracts the row max before exponentiating."""
    a = _as_tensor(a)
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        _accumulate(a, p * (g - (g * p).sum(axis=1, keepdims=True)))

    return _result(p, (a,), "softmax_rows", backward)


def dropout(a, rate, rng):
    if rate <= 0.0:
        return _as_tensor(a)
    a = _as_tensor(a)
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return mul(a, Tensor(mask))


# --- fused losses -------------------------------------------------------------

def softmax_np(x):
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, targets):
    """Mean of ``-log(softmax(logits)[i, y_i] + 1e-12)`` over rows."""
    logits = _as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    n = logits.shape[0]
    if targets.shape != (n,):
        raise ShapeError(f"cross_entropy: {n} rows but {targets.shape} targets")
    p = softmax_np(logits.data)
    rows = np.arange(n)
    py = p[rows, targets]
    loss = -np.mean(np.log(py + LOG_EPS))

    def backward(g):
        onehot = np.zeros_like(p)
        onehot[rows, targets] = 1.0
        coef = (py / (py + LOG_EPS))[:, None]
        _accumulate(logits, g[0, 0] * coef * (p - onehot) / n)

    return _result(loss, (logits,), "cross_entropy", backward)


def bce_with_logits(logits, targets, pos_weight=1.0, mask=None):
    """Weighted binary cross-entropy on raw scores, averaged over selected entries.

    ``mask`` (same shape, 0/1) restricts which entries count; e.g. the diagonal
    of a reconstructed adjacency.
    """
    logits = _as_tensor(logits)
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != logits.shape:
        raise ShapeError(f"bce_with_logits: {logits.shape} vs targets {y.shape}")
    m = np.ones_like(y) if mask is None else np.asarray(mask, dtype=np.float64)
    count = m.sum()
    x = logits.data
    # log(1 + exp(-|x|)) form keeps both branches finite
    softplus_neg = np.log1p(np.exp(-np.abs(x))) + np.maximum(-x, 0.0)  # -log sigmoid(x)
    softplus_pos = softplus_neg + x  # -log(1 - sigmoid(x))
    per = m * (pos_weight * y * softplus_neg + (1.0 - y) * softplus_pos)
    loss = per.sum() / count
    s = _sigmoid(x)

    def backward(g):
        grad = m * (pos_weight * y * (s - 1.0) + (1.0 - y) * s) / count
        _accumulate(logits, g[0, 0] * grad)

    return _result(loss, (logits,), "bce_with_logits", backward)


def mse(pred, target):
    pred = _as_tensor(pred)
    t = np.asarray(target, dtype=np.float64)
    if t.shape != pred.shape:
        raise ShapeError(f"mse: {pred.shape} vs {t.shape}")
    diff = pred.data - t

    def backward(g):
        _accumulate(pred, g[0, 0] * 2.0 * diff / diff.size)

    return _result(np.mean(diff * diff), (pred,), "mse", backward)


# --- reverse pass ---------------------------------------------------------------

class Tape:
    """Nodes of a computation in topological order (inputs before outputs)."""

    def __init__(self, nodes):
        self.nodes = nodes

    def __len__(self):
        return len(self.nodes)

    def reverse(self):
        return reversed(self.nodes)


def record(loss):
    """Build the tape for ``loss`` by iterative depth-first search."""
    order, seen = [], set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return Tape(order)


def backward(loss):
    """Populate ``.grad`` for every node that ``loss`` depends on.

    Gradients are reset on each call, so repeated calls do not accumulate.
    Returns the tape that was replayed.
    """
    if not isinstance(loss, Tensor):
        raise TypeError("backward expects a Tensor")
    if loss.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss was not recorded: no input requires gradients")
    tape = record(loss)
    for node in tape.nodes:
        node.grad = None
    loss.grad = np.ones((1, 1))
    for node in tape.reverse():
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    for node in tape.nodes:
        if node.requires_grad and node.grad is None:
            node.grad = np.zeros_like(node.data)
    return tape


# --- initialization and optimizers ---------------------------------------------

def glorot_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), requires_grad=True)


class SGD:
    def __init__(self, params, lr=0.01):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.params = list(params)
        self.lr = lr
        self.t = 0

    def step(self, grads=None):
        grads = _grads_for(self.params, grads)
        self.t += 1
        for p, g in zip(self.params, grads):
            p.data -= self.lr * g


class Adam:
    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self, grads=None):
        grads = _grads_for(self.params, grads)
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, (p, g) in enumerate(zip(self.params, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / (1 - b1 ** self.t)
            v_hat = self.v[i] / (1 - b2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _grads_for(params, grads):
    if grads is None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
    grads = [np.asarray(g, dtype=np.float64) for g in grads]
    if len(grads) != len(params):
        raise ShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if g.shape != p.data.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter {p.data.shape}")
    return grads


def make_optimizer(kind, params, lr):
    if kind == "adam":
        return Adam(params, lr=lr)
    if kind == "sgd":
        return SGD(params, lr=lr)
    raise ValueError(f"unknown optimizer {kind!r}")
