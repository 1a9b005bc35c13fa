"""Tape-based reverse-mode differentiation over numpy arrays.

A :class:`Tape` records every primitive evaluated during a forward pass as a
node holding its output value, the indices of its inputs, and a closure that
maps the output cotangent to input cotangents. Leaves are either constants or
named slices of a :class:`ParamStore`; the backward pass scatters leaf
cotangents back into one flat gradient vector aligned with ``params.values``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import ParamStore


class NonFiniteError(FloatingPointError):
    """A tape node produced a NaN or infinite value (forward or backward)."""

    def __init__(self, index: int, kind: str, phase: str = "forward"):
        self.index = index
        self.kind = kind
        self.phase = phase
        super().__init__(f"non-finite {phase} value at tape node {index} ({kind})")


@dataclass
class Node:
    kind: str
    inputs: tuple[int, ...]
    value: np.ndarray
    vjp: Callable | None
    needs_grad: bool
    leaf: tuple[int, int] | None = None  # flat range for parameter leaves


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


class Var:
    """Handle to one node of a tape."""

    __slots__ = ("tape", "idx")

    def __init__(self, tape: "Tape", idx: int):
        self.tape = tape
        self.idx = idx

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.idx].value

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return self.tape.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.tape.sub(self, other)

    def __rsub__(self, other):
        return self.tape.sub(other, self)

    def __mul__(self, other):
        return self.tape.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.tape.mul(self, -1.0)

    def __matmul__(self, other):
        return self.tape.matmul(self, other)

    def __rmatmul__(self, other):
        return self.tape.matmul(other, self)

    def __getitem__(self, idx):
        return self.tape.getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return self.tape.sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return self.tape.mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return self.tape.reshape(self, shape)

    def __repr__(self):
        return f"Var(#{self.idx}, shape={self.shape})"


class Tape:
    def __init__(self, params: ParamStore | None = None, check_finite: bool = True):
        self.params = params
        self.nodes: list[Node] = []
        self.check_finite = check_finite
        self._param_cache: dict[str, Var] = {}

    def __len__(self):
        return len(self.nodes)

    # -- leaves -------------------------------------------------------------

    def _push(self, kind, inputs, value, vjp, needs_grad, leaf=None) -> Var:
        value = np.asarray(value, dtype=np.float64)
        if self.check_finite and not np.isfinite(value).all():
            raise NonFiniteError(len(self.nodes), kind)
        self.nodes.append(Node(kind, inputs, value, vjp, needs_grad, leaf))
        return Var(self, len(self.nodes) - 1)

    def const(self, value) -> Var:
        return self._push("const", (), value, None, False)

    def param(self, name: str) -> Var:
        if self.params is None:
            raise KeyError(f"tape has no parameter store; cannot read {name!r}")
        if name not in self._param_cache:
            value = self.params.view(name)
            self._param_cache[name] = self._push(
                "param", (), value, None, True, leaf=self.params.slice_range(name))
        return self._param_cache[name]

    def _lift(self, x) -> Var:
        if isinstance(x, Var):
            if x.tape is not self:
                raise ValueError("Var belongs to a different tape")
            return x
        return self.const(x)

    def _op(self, kind, inputs, value, vjp) -> Var:
        needs = any(self.nodes[v.idx].needs_grad for v in inputs)
        return self._push(kind, tuple(v.idx for v in inputs), value, vjp if needs else None, needs)

    # -- elementwise --------------------------------------------------------

    def add(self, a, b) -> Var:
        a, b = self._lift(a), self._lift(b)
        sa, sb = a.shape, b.shape
        return self._op("add", (a, b), a.value + b.value,
                        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))

    def sub(self, a, b) -> Var:
        a, b = self._lift(a), self._lift(b)
        sa, sb = a.shape, b.shape
        return self._op("sub", (a, b), a.value - b.value,
                        lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))

    def mul(self, a, b) -> Var:
        a, b = self._lift(a), self._lift(b)
        av, bv = a.value, b.value
        return self._op("mul", (a, b), av * bv,
                        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))

    def square(self, a) -> Var:
        a = self._lift(a)
        av = a.value
        return self._op("square", (a,), av * av, lambda g: (2.0 * av * g,))

    def tanh(self, a) -> Var:
        a = self._lift(a)
        y = np.tanh(a.value)
        return self._op("tanh", (a,), y, lambda g: (g * (1.0 - y * y),))

    def sigmoid(self, a) -> Var:
        a = self._lift(a)
        y = 0.5 * (1.0 + np.tanh(0.5 * a.value))
        return self._op("sigmoid", (a,), y, lambda g: (g * y * (1.0 - y),))

    def sin(self, a) -> Var:
        a = self._lift(a)
        av = a.value
        return self._op("sin", (a,), np.sin(av), lambda g: (g * np.cos(av),))

    def cos(self, a) -> Var:
        a = self._lift(a)
        av = a.value
        return self._op("cos", (a,), np.cos(av), lambda g: (-g * np.sin(av),))

    def exp(self, a) -> Var:
        a = self._lift(a)
        y = np.exp(a.value)
        return self._op("exp", (a,), y, lambda g: (g * y,))

    def leaky_relu(self, a, slope: float = 0.2) -> Var:
        a = self._lift(a)
        d = np.where(a.value > 0, 1.0, slope)
        return self._op("leaky_relu", (a,), a.value * d, lambda g: (g * d,))

    # -- linear algebra / reductions ----------------------------------------

    def matmul(self, a, b) -> Var:
        a, b = self._lift(a), self._lift(b)
        av, bv = a.value, b.value
        if av.ndim < 2 or bv.ndim < 2:
            raise ValueError("matmul operands must be at least 2-D")

        def vjp(g):
            ga = _unbroadcast(g @ np.swapaxes(bv, -1, -2), av.shape)
            gb = _unbroadcast(np.swapaxes(av, -1, -2) @ g, bv.shape)
            return ga, gb

        return self._op("matmul", (a, b), av @ bv, vjp)

    def sum(self, a, axis=None, keepdims=False) -> Var:
        a = self._lift(a)
        shape = a.shape

        def vjp(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return self._op("sum", (a,), a.value.sum(axis=axis, keepdims=keepdims), vjp)

    def mean(self, a, axis=None, keepdims=False) -> Var:
        a = self._lift(a)
        n = a.value.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
        return self.mul(self.sum(a, axis, keepdims), 1.0 / float(n))

    def softmax(self, a, axis=-1) -> Var:
        a = self._lift(a)
        z = a.value - a.value.max(axis=axis, keepdims=True)
        e = np.exp(z)
        s = e / e.sum(axis=axis, keepdims=True)
        return self._op("softmax", (a,), s,
                        lambda g: (s * (g - (g * s).sum(axis=axis, keepdims=True)),))

    # -- structural ---------------------------------------------------------

    def concat(self, xs, axis=-1) -> Var:
        xs = [self._lift(x) for x in xs]
        sizes = [x.shape[axis] for x in xs]
        cuts = np.cumsum(sizes)[:-1]
        return self._op("concat", tuple(xs), np.concatenate([x.value for x in xs], axis=axis),
                        lambda g: tuple(np.split(g, cuts, axis=axis)))

    def getitem(self, a, idx) -> Var:
        a = self._lift(a)
        shape = a.shape
        fancy = any(isinstance(i, (list, np.ndarray)) for i in (idx if isinstance(idx, tuple) else (idx,)))

        def vjp(g):
            z = np.zeros(shape)
            if fancy:
                np.add.at(z, idx, g)
            else:
                z[idx] += g
            return (z,)

        return self._op("getitem", (a,), a.value[idx], vjp)

    def reshape(self, a, shape) -> Var:
        a = self._lift(a)
        old = a.shape
        return self._op("reshape", (a,), a.value.reshape(shape), lambda g: (g.reshape(old),))

    def transpose(self, a, axes) -> Var:
        a = self._lift(a)
        inv = np.argsort(axes)
        return self._op("transpose", (a,), np.transpose(a.value, axes),
                        lambda g: (np.transpose(g, inv),))

    # -- reverse pass -------------------------------------------------------

    def backward(self, out: Var) -> np.ndarray:
        """Cotangent of ``out`` (a scalar) with respect to ``params.values``."""
        if out.value.size != 1:
            raise ValueError(f"backward needs a scalar output, got shape {out.shape}")
        n_params = 0 if self.params is None else len(self.params)
        flat = np.zeros(n_params)
        grads: list = [None] * len(self.nodes)
        grads[out.idx] = np.ones_like(out.value)
        for i in range(out.idx, -1, -1):
            g = grads[i]
            if g is None:
                continue
            grads[i] = None
            node = self.nodes[i]
            if self.check_finite and not np.isfinite(g).all():
                raise NonFiniteError(i, node.kind, "backward")
            if node.leaf is not None:
                lo, hi = node.leaf
                flat[lo:hi] += np.asarray(g).ravel()
                continue
            if node.vjp is None:
                continue
            for j, gj in zip(node.inputs, node.vjp(g)):
                if gj is None or not self.nodes[j].needs_grad:
                    continue
                grads[j] = gj if grads[j] is None else grads[j] + gj
        return flat


def value_and_grad(objective: Callable, params: ParamStore, check_finite: bool = True):
    """Evaluate ``objective(tape)`` and its gradient w.r.t. ``params.values``.

    ``objective`` may return a scalar :class:`Var` or ``(Var, aux)``; ``aux``
    is passed through untouched.
    """
    tape = Tape(params, check_finite=check_finite)
    result = objective(tape)
    aux = None
    if isinstance(result, tuple):
        result, aux = result
    g = tape.backward(result)
    return float(result.value.reshape(())), g, aux


def grad(objective: Callable, params: ParamStore) -> np.ndarray:
    return value_and_grad(objective, params)[1]


def finite_difference(objective: Callable, params: ParamStore, h: float = 1e-5,
                      indices=None) -> np.ndarray:
    """Central-difference gradient, evaluated without any tape bookkeeping.

    Only the coordinates in ``indices`` (all by default) are perturbed; the
    rest of the returned vector is left at zero.
    """

    def f(values):
        tape = Tape(params.with_values(values), check_finite=False)
        out = objective(tape)
        if isinstance(out, tuple):
            out = out[0]
        return float(out.value.reshape(()))

    x = params.values.copy()
    idx = range(x.size) if indices is None else indices
    out = np.zeros(x.size)
    for i in idx:
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        out[i] = (f(xp) - f(xm)) / (2.0 * h)
    return out


def relative_error(analytic, numeric, floor: float = 1e-3) -> float:
    """Largest componentwise relative error.

    Each component is scaled by the larger of its own magnitude and ``floor``
    times the largest gradient magnitude, so near-zero entries are compared
    against the overall gradient scale instead of against round-off.
    """
    a = np.asarray(analytic, dtype=float)
    b = np.asarray(numeric, dtype=float)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
    if scale == 0.0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor * scale)
    return float((np.abs(a - b) / denom).max())
