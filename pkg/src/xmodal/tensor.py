"""Dense float64 tensors with reverse-mode automatic differentiation.

Each op returns a new :class:`Tensor` that remembers its inputs and a
closure mapping the output gradient to input gradients. :func:`backward`
linearises the graph reachable from a scalar loss (inputs always precede
their consumers) and sweeps it in reverse, accumulating into ``.grad``.
"""

import numpy as np

from .errors import ContractError, ShapeError

ACTIVATIONS = ("tanh", "hard_sigmoid", "logistic", "relu")


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn", "op")

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None, op="leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

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
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, backward_fn, op):
    needs = any(p.requires_grad for p in parents)
    if not needs:
        return Tensor(data, op=op)
    return Tensor(data, requires_grad=True, parents=parents, backward_fn=backward_fn, op=op)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    ndim_extra = grad.ndim - len(shape)
    if ndim_extra > 0:
        grad = grad.sum(axis=tuple(range(ndim_extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------- elementwise

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: cannot broadcast {a.shape} with {b.shape}") from None
    return _result(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub: cannot broadcast {a.shape} with {b.shape}") from None
    return _result(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul: cannot broadcast {a.shape} with {b.shape}") from None

    def back(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result(out, (a, b), back, "mul")


def power(a, exponent):
    a = as_tensor(a)
    exponent = float(exponent)
    out = a.data ** exponent
    return _result(out, (a,), lambda g: (g * exponent * a.data ** (exponent - 1.0),), "power")


def log(a):
    a = as_tensor(a)
    return _result(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def clip(a, lo, hi):
    """Clamp to [lo, hi]; gradient passes only where the input is strictly inside."""
    a = as_tensor(a)
    out = np.clip(a.data, lo, hi)
    inside = (a.data > lo) & (a.data < hi)
    return _result(out, (a,), lambda g: (g * inside,), "clip")


def hard_sigmoid(x):
    return np.clip(0.2 * x + 0.5, 0.0, 1.0)


def hard_sigmoid_grad(x):
    # strict inequalities: subgradient 0 at the kinks
    return np.where((x > -2.5) & (x < 2.5), 0.2, 0.0)


def logistic(x):
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def apply(f, x):
    """Elementwise activation ``f`` in {tanh, hard_sigmoid, logistic, relu}."""
    x = as_tensor(x)
    if f == "tanh":
        out = np.tanh(x.data)
        back = lambda g: (g * (1.0 - out * out),)
    elif f == "hard_sigmoid":
        out = hard_sigmoid(x.data)
        back = lambda g: (g * hard_sigmoid_grad(x.data),)
    elif f == "logistic":
        out = logistic(x.data)
        back = lambda g: (g * out * (1.0 - out),)
    elif f == "relu":
        out = np.maximum(x.data, 0.0)
        back = lambda g: (g * (x.data > 0.0),)
    else:
        raise ContractError(f"unknown activation {f!r}; expected one of {ACTIVATIONS}")
    return _result(out, (x,), back, f)


# ------------------------------------------------------------------ structural

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = a.data @ b.data
    return _result(out, (a, b), lambda g: (g @ b.data.T, a.data.T @ g), "matmul")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ContractError("concat of an empty list")
    if len(tensors) == 1:
        return tensors[0]
    ref = tensors[0].shape
    ax = axis % len(ref)
    for t in tensors[1:]:
        if len(t.shape) != len(ref) or any(
            t.shape[i] != ref[i] for i in range(len(ref)) if i != ax
        ):
            raise ShapeError(
                f"concat: mismatched non-concat dims {[t.shape for t in tensors]} on axis {axis}"
            )
    out = np.concatenate([t.data for t in tensors], axis=ax)
    bounds = np.cumsum([0] + [t.shape[ax] for t in tensors])

    def back(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=ax) for i in range(len(tensors))
        )

    return _result(out, tuple(tensors), back, "concat")


def getitem(a, idx):
    a = as_tensor(a)
    out = a.data[idx]

    def back(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        return (full,)

    return _result(np.array(out, dtype=np.float64), (a,), back, "getitem")


def reshape(a, shape):
    a = as_tensor(a)
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes=None):
    a = as_tensor(a)
    axes = tuple(reversed(range(a.data.ndim))) if axes is None else tuple(axes)
    inv = np.argsort(axes)
    return _result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),), "transpose")


def sum(a, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result(out, (a,), back, "sum")


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


# ------------------------------------------------------------------- backward

class Graph:
    """Topologically ordered view of the nodes reachable from an output.

    ``nodes`` is append-ordered: every node appears after all of its inputs.
    """

    def __init__(self, nodes):
        self.nodes = nodes
        self.index = {id(n): i for i, n in enumerate(nodes)}

    @classmethod
    def trace(cls, output):
        order, seen = [], set()
        stack = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
        return cls(order)

    def __len__(self):
        return len(self.nodes)


def backward(loss, grad=None):
    """Accumulate d(loss)/d(t) into ``t.grad`` for every ``requires_grad`` tensor."""
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return Graph([])
    graph = Graph.trace(loss)
    upstream = {id(loss): np.ones_like(loss.data) if grad is None else np.asarray(grad, float)}
    for node in reversed(graph.nodes):
        g = upstream.pop(id(node), None)
        if g is None:
            continue
        if node.backward_fn is None:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        # intermediates keep their gradient too; cheap and handy for inspection
        node.grad = g
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if not parent.requires_grad or pg is None:
                continue
            key = id(parent)
            if key in upstream:
                upstream[key] = upstream[key] + pg
            else:
                upstream[key] = pg
    return graph


def gradients(loss, inputs):
    """d(loss)/d(x) for each tensor in ``inputs`` without touching any ``.grad``.

    Safe to call concurrently on graphs that share parameter tensors.
    """
    if loss.size != 1:
        raise ContractError(f"gradients needs a scalar loss, got shape {loss.shape}")
    wanted = {id(x): None for x in inputs}
    if not loss.requires_grad:
        return [np.zeros_like(x.data) for x in inputs]
    upstream = {id(loss): np.ones_like(loss.data)}
    for node in reversed(Graph.trace(loss).nodes):
        g = upstream.pop(id(node), None)
        if g is None:
            continue
        if id(node) in wanted:
            wanted[id(node)] = g
        if node.backward_fn is None:
            continue
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if parent.requires_grad and pg is not None:
                key = id(parent)
                upstream[key] = upstream[key] + pg if key in upstream else pg
    return [np.zeros_like(x.data) if wanted[id(x)] is None else wanted[id(x)] for x in inputs]


# ---------------------------------------------------------------- init

def init(shape, scheme, rng):
    """Fresh trainable tensor of ``shape`` initialised with ``scheme``.

    xavier: U(-a, a) with a = sqrt(6 / (fan_in + fan_out));
    he: N(0, 2 / fan_in). For 1-d shapes fan_in = fan_out = shape[0].
    """
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    if any(s <= 0 for s in shape):
        raise ContractError(f"init: dimensions must be positive, got {shape}")
    fan_in = shape[0]
    fan_out = shape[1] if len(shape) > 1 else shape[0]
    if scheme == "zeros":
        data = np.zeros(shape)
    elif scheme == "ones":
        data = np.ones(shape)
    elif scheme == "xavier":
        a = np.sqrt(6.0 / (fan_in + fan_out))
        data = rng.uniform(-a, a, size=shape)
    elif scheme == "he":
        data = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
    else:
        raise ContractError(f"unknown init scheme {scheme!r}")
    return Tensor(data, requires_grad=True)
