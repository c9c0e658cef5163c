"""Reverse-mode automatic differentiation over dense float64 arrays.

Every trainable part of the pipeline is built from the primitives here: a
``Tensor`` wraps an immutable numpy array and records a closure that knows how
to push adjoints back to its parents.  Calling :meth:`Tensor.backward` replays
those closures in reverse topological order.  ``finite_diff_check`` is the
independent oracle used to validate every gradient in the test suite.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "OP_KINDS",
    "forward_op",
    "backward",
    "finite_diff_check",
    "add",
    "sub",
    "mul",
    "div",
    "matmul",
    "conv1d",
    "relu",
    "abs_",
    "sigmoid",
    "tanh",
    "exp",
    "log",
    "sqrt",
    "softmax",
    "batchnorm",
    "concat",
    "stack",
    "mean_pool",
    "std_pool",
    "max_pool",
    "sum_",
    "mean",
    "affine",
    "reshape",
    "transpose",
    "narrow",
    "take",
]


def _as_array(data) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    arr.flags.writeable = False
    return arr


def _wrap_result(arr: np.ndarray) -> np.ndarray:
    # internal results are freshly allocated; freeze without copying
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


class Tensor:
    """Immutable dense float64 tensor participating in a computation record."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_consumed")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._consumed = False

    @classmethod
    def _result(cls, arr, parents: tuple["Tensor", ...], backward) -> "Tensor":
        out = cls.__new__(cls)
        out.data = _wrap_result(arr)
        out.requires_grad = any(p.requires_grad for p in parents)
        out.grad = None
        out._consumed = False
        if out.requires_grad:
            out._parents = parents
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    # ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return self.data.item()

    def detach(self) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = self.data
        out.requires_grad = False
        out.grad = None
        out._parents = ()
        out._backward = None
        out._consumed = False
        return out

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------
    def backward(
        self,
        seed: np.ndarray | float | None = None,
        leaves: Sequence["Tensor"] | None = None,
    ) -> dict["Tensor", np.ndarray]:
        """Replay the computation record in reverse, returning a gradient map.

        ``seed`` must match the output shape (defaults to ones).  Each record
        may be replayed once; a second call on the same output is rejected.
        Leaves passed explicitly receive a zero gradient when they did not
        participate in the recorded computation.
        """
        if self._consumed:
            raise RuntimeError("computation record already consumed by a previous backward()")
        if seed is None:
            seed_arr = np.ones_like(self.data)
        else:
            seed_arr = np.asarray(seed, dtype=np.float64)
            if seed_arr.shape != self.data.shape:
                raise ValueError(
                    f"seed shape {seed_arr.shape} does not match output shape {self.data.shape}"
                )
        self._consumed = True

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
            for parent in node._parents:
                if id(parent) not in visited and parent.requires_grad:
                    stack.append((parent, False))

        grads: dict[int, np.ndarray] = {id(self): seed_arr}
        self.grad = seed_arr
        for node in reversed(topo):
            if node._backward is None:
                continue
            gout = grads.pop(id(node), None)
            if gout is None:
                continue
            node._backward(gout, grads)

        result: dict[Tensor, np.ndarray] = {}
        for node in topo:
            if node._backward is None and node.requires_grad:
                node.grad = grads.get(id(node))
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                result[node] = node.grad
        if leaves is not None:
            for leaf in leaves:
                if leaf not in result:
                    leaf.grad = np.zeros_like(leaf.data)
                    result[leaf] = leaf.grad
        return result

    # operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __neg__(self):
        return affine(self, scale=-1.0)

    def __matmul__(self, other):
        return matmul(self, _lift(other))


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(grads: dict[int, np.ndarray], node: Tensor, g: np.ndarray) -> None:
    if not node.requires_grad:
        return
    key = id(node)
    if key in grads:
        grads[key] = grads[key] + g
    else:
        grads[key] = g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out the axes numpy broadcasting introduced, back to ``shape``."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    out_data = a.data + b.data

    def back(g, grads):
        _accumulate(grads, a, _unbroadcast(g, a.shape))
        _accumulate(grads, b, _unbroadcast(g, b.shape))

    return Tensor._result(out_data, (a, b), back)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    out_data = a.data - b.data

    def back(g, grads):
        _accumulate(grads, a, _unbroadcast(g, a.shape))
        _accumulate(grads, b, _unbroadcast(-g, b.shape))

    return Tensor._result(out_data, (a, b), back)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    out_data = a.data * b.data

    def back(g, grads):
        _accumulate(grads, a, _unbroadcast(g * b.data, a.shape))
        _accumulate(grads, b, _unbroadcast(g * a.data, b.shape))

    return Tensor._result(out_data, (a, b), back)


def div(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    out_data = a.data / b.data

    def back(g, grads):
        _accumulate(grads, a, _unbroadcast(g / b.data, a.shape))
        _accumulate(grads, b, _unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return Tensor._result(out_data, (a, b), back)


def affine(x: Tensor, scale: float = 1.0, shift: float = 0.0) -> Tensor:
    x = _lift(x)
    out_data = x.data * scale + shift

    def back(g, grads):
        _accumulate(grads, x, g * scale)

    return Tensor._result(out_data, (x,), back)


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.ndim < 1 or b.ndim < 2:
        raise ValueError(f"matmul needs matrices, got shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(
            f"matmul inner extents differ: {a.shape} @ {b.shape}"
        )
    out_data = a.data @ b.data

    def back(g, grads):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        _accumulate(grads, a, _unbroadcast(ga, a.shape))
        _accumulate(grads, b, _unbroadcast(gb, b.shape))

    return Tensor._result(out_data, (a, b), back)


def conv1d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    dilation: int = 1,
) -> Tensor:
    """1-D convolution of a (C_in, T) signal with a (C_out, C_in, W) kernel.

    Output length is floor((T - (W-1)*dilation - 1) / stride) + 1; stride and
    window must be positive.
    """
    x, weight = _lift(x), _lift(weight)
    if x.ndim != 2 or weight.ndim != 3:
        raise ValueError(
            f"conv1d expects (C_in, T) input and (C_out, C_in, W) kernel, got {x.shape}, {weight.shape}"
        )
    if stride < 1 or dilation < 1:
        raise ValueError(f"stride and dilation must be positive, got {stride}, {dilation}")
    c_in, t = x.shape
    c_out, c_in_w, w = weight.shape
    if w < 1:
        raise ValueError("window must be positive")
    if c_in_w != c_in:
        raise ValueError(f"kernel expects {c_in_w} input channels, signal has {c_in}")
    span = (w - 1) * dilation + 1
    if t < span:
        raise ValueError(f"signal length {t} shorter than kernel span {span}")
    t_out = (t - span) // stride + 1

    s0, s1 = x.data.strides
    patches = np.lib.stride_tricks.as_strided(
        x.data, shape=(c_in, t_out, w), strides=(s0, stride * s1, dilation * s1)
    )
    out_data = np.tensordot(weight.data, patches, axes=([1, 2], [0, 2]))
    parents = [x, weight]
    if bias is not None:
        bias = _lift(bias)
        if bias.shape != (c_out,):
            raise ValueError(f"bias shape {bias.shape} does not match {c_out} output channels")
        out_data = out_data + bias.data[:, None]
        parents.append(bias)

    def back(g, grads):
        gw = np.tensordot(g, patches, axes=([1], [1]))  # (C_out, C_in, W)
        _accumulate(grads, weight, gw)
        gx = np.zeros((c_in, t))
        for j in range(w):
            lo = j * dilation
            gx[:, lo : lo + stride * t_out : stride] += weight.data[:, :, j].T @ g
        _accumulate(grads, x, gx)
        if bias is not None:
            _accumulate(grads, bias, g.sum(axis=1))

    return Tensor._result(out_data, tuple(parents), back)


# ---------------------------------------------------------------------------
# nonlinearities


def relu(x: Tensor) -> Tensor:
    x = _lift(x)
    out_data = np.maximum(x.data, 0.0)

    def back(g, grads):
        _accumulate(grads, x, g * (x.data > 0))

    return Tensor._result(out_data, (x,), back)


def abs_(x: Tensor) -> Tensor:
    x = _lift(x)
    out_data = np.abs(x.data)

    def back(g, grads):
        _accumulate(grads, x, g * np.sign(x.data))

    return Tensor._result(out_data, (x,), back)


def sigmoid(x: Tensor) -> Tensor:
    x = _lift(x)
    d = x.data
    out_data = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))), np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))

    def back(g, grads):
        _accumulate(grads, x, g * out_data * (1.0 - out_data))

    return Tensor._result(out_data, (x,), back)


def tanh(x: Tensor) -> Tensor:
    x = _lift(x)
    out_data = np.tanh(x.data)

    def back(g, grads):
        _accumulate(grads, x, g * (1.0 - out_data * out_data))

    return Tensor._result(out_data, (x,), back)


def exp(x: Tensor) -> Tensor:
    x = _lift(x)
    out_data = np.exp(x.data)

    def back(g, grads):
        _accumulate(grads, x, g * out_data)

    return Tensor._result(out_data, (x,), back)


def log(x: Tensor) -> Tensor:
    x = _lift(x)
    out_data = np.log(x.data)

    def back(g, grads):
        _accumulate(grads, x, g / x.data)

    return Tensor._result(out_data, (x,), back)


def sqrt(x: Tensor) -> Tensor:
    x = _lift(x)
    out_data = np.sqrt(x.data)

    def back(g, grads):
        _accumulate(grads, x, g * 0.5 / out_data)

    return Tensor._result(out_data, (x,), back)


# ---------------------------------------------------------------------------
# reductions and pooling


def _normalize_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise ValueError(f"axis {axis} out of range for {ndim} dimensions")
    return axis % ndim


def sum_(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = _lift(x)
    out_data = x.data.sum(axis=axis, keepdims=keepdims)

    def back(g, grads):
        if axis is None:
            _accumulate(grads, x, np.broadcast_to(g, x.shape).copy())
        else:
            ge = g if keepdims else np.expand_dims(g, axis)
            _accumulate(grads, x, np.broadcast_to(ge, x.shape).copy())

    return Tensor._result(out_data, (x,), back)


def mean(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = _lift(x)
    n = x.data.size if axis is None else x.shape[_normalize_axis(axis, x.ndim)]
    return affine(sum_(x, axis=axis, keepdims=keepdims), scale=1.0 / n)


def mean_pool(x: Tensor, axis: int) -> Tensor:
    return mean(x, axis=axis)


def std_pool(x: Tensor, axis: int, eps: float = 1e-8) -> Tensor:
    """Population standard deviation along ``axis``.

    eps sits inside the square root so the gradient stays finite when the
    pooled slice is constant.
    """
    x = _lift(x)
    mu = mean(x, axis=axis, keepdims=True)
    centered = sub(x, mu)
    var = mean(mul(centered, centered), axis=axis)
    return sqrt(affine(var, shift=eps))


def max_pool(x: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    x = _lift(x)
    axis_n = _normalize_axis(axis, x.ndim)
    out_data = x.data.max(axis=axis_n, keepdims=keepdims)

    def back(g, grads):
        full = out_data if keepdims else np.expand_dims(out_data, axis_n)
        mask = (x.data == full).astype(np.float64)
        mask /= mask.sum(axis=axis_n, keepdims=True)
        ge = g if keepdims else np.expand_dims(g, axis_n)
        _accumulate(grads, x, mask * ge)

    return Tensor._result(out_data, (x,), back)


def softmax(x: Tensor, axis: int) -> Tensor:
    """Numerically stable softmax along ``axis``; outputs sum to one there."""
    x = _lift(x)
    shift = max_pool(x, axis=axis, keepdims=True).detach()
    e = exp(sub(x, shift))
    return div(e, sum_(e, axis=axis, keepdims=True))


# ---------------------------------------------------------------------------
# shape manipulation


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    parts = [_lift(t) for t in tensors]
    if not parts:
        raise ValueError("concat of zero tensors")
    axis_n = _normalize_axis(axis, parts[0].ndim)
    out_data = np.concatenate([p.data for p in parts], axis=axis_n)
    sizes = [p.shape[axis_n] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def back(g, grads):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis_n] = slice(lo, hi)
            _accumulate(grads, p, g[tuple(sl)])

    return Tensor._result(out_data, tuple(parts), back)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = []
    for t in tensors:
        t = _lift(t)
        parts.append(reshape(t, (1,) + t.shape))
    out = concat(parts, axis=0)
    if axis != 0:
        order = list(range(out.ndim))
        order.insert(axis, order.pop(0))
        out = transpose(out, tuple(order))
    return out


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    x = _lift(x)
    out_data = x.data.reshape(shape)

    def back(g, grads):
        _accumulate(grads, x, g.reshape(x.shape))

    return Tensor._result(out_data, (x,), back)


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    x = _lift(x)
    out_data = np.transpose(x.data, axes)
    inverse = np.argsort(axes)

    def back(g, grads):
        _accumulate(grads, x, np.transpose(g, inverse))

    return Tensor._result(out_data, (x,), back)


def narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    x = _lift(x)
    axis_n = _normalize_axis(axis, x.ndim)
    if start < 0 or length < 0 or start + length > x.shape[axis_n]:
        raise ValueError(
            f"narrow [{start}, {start + length}) out of bounds for extent {x.shape[axis_n]}"
        )
    sl = [slice(None)] * x.ndim
    sl[axis_n] = slice(start, start + length)
    out_data = x.data[tuple(sl)]

    def back(g, grads):
        gx = np.zeros(x.shape)
        gx[tuple(sl)] = g
        _accumulate(grads, x, gx)

    return Tensor._result(out_data, (x,), back)


def take(x: Tensor, indices: Sequence[int], axis: int) -> Tensor:
    x = _lift(x)
    axis_n = _normalize_axis(axis, x.ndim)
    idx = np.asarray(indices, dtype=np.intp)
    out_data = np.take(x.data, idx, axis=axis_n)

    def back(g, grads):
        gx = np.zeros(x.shape)
        sl: list = [slice(None)] * x.ndim
        sl[axis_n] = idx
        np.add.at(gx, tuple(sl), g)
        _accumulate(grads, x, gx)

    return Tensor._result(out_data, (x,), back)


# ---------------------------------------------------------------------------
# batch normalization


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    axis: int,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Batch normalization over every axis except ``axis`` (the channel axis).

    In training mode statistics come from the batch and the running arrays
    are updated in place with the given momentum; in inference mode the
    frozen running statistics make this a per-channel affine map.
    """
    x = _lift(x)
    axis_n = _normalize_axis(axis, x.ndim)
    reduce_axes = tuple(i for i in range(x.ndim) if i != axis_n)
    param_shape = tuple(x.shape[axis_n] if i == axis_n else 1 for i in range(x.ndim))
    gamma_b = reshape(_lift(gamma), param_shape)
    beta_b = reshape(_lift(beta), param_shape)

    if training:
        mu = x
        for ax in reduce_axes:
            mu = mean(mu, axis=ax, keepdims=True)
        centered = sub(x, mu)
        var = mul(centered, centered)
        for ax in reduce_axes:
            var = mean(var, axis=ax, keepdims=True)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.data.reshape(-1)
        running_var *= 1.0 - momentum
        running_var += momentum * var.data.reshape(-1)
        inv = div(Tensor(1.0), sqrt(affine(var, shift=eps)))
        normalized = mul(centered, inv)
    else:
        mu_c = running_mean.reshape(param_shape)
        inv_c = 1.0 / np.sqrt(running_var.reshape(param_shape) + eps)
        normalized = mul(sub(x, Tensor(mu_c)), Tensor(inv_c))
    return add(mul(normalized, gamma_b), beta_b)


# ---------------------------------------------------------------------------
# uniform op dispatch (one entry per supported operation kind)

OP_KINDS = (
    "matmul",
    "add",
    "sub",
    "mul",
    "div",
    "conv1d",
    "relu",
    "abs",
    "sigmoid",
    "tanh",
    "exp",
    "log",
    "sqrt",
    "softmax",
    "batchnorm",
    "concat",
    "mean_pool",
    "std_pool",
    "max_pool",
    "sum",
    "affine",
    "reshape",
    "transpose",
    "narrow",
    "take",
)

_DISPATCH: dict[str, Callable] = {
    "matmul": lambda inputs, attrs: matmul(*inputs),
    "add": lambda inputs, attrs: add(*inputs),
    "sub": lambda inputs, attrs: sub(*inputs),
    "mul": lambda inputs, attrs: mul(*inputs),
    "div": lambda inputs, attrs: div(*inputs),
    "conv1d": lambda inputs, attrs: conv1d(
        inputs[0],
        inputs[1],
        inputs[2] if len(inputs) > 2 else None,
        stride=attrs.get("stride", 1),
        dilation=attrs.get("dilation", 1),
    ),
    "relu": lambda inputs, attrs: relu(inputs[0]),
    "abs": lambda inputs, attrs: abs_(inputs[0]),
    "sigmoid": lambda inputs, attrs: sigmoid(inputs[0]),
    "tanh": lambda inputs, attrs: tanh(inputs[0]),
    "exp": lambda inputs, attrs: exp(inputs[0]),
    "log": lambda inputs, attrs: log(inputs[0]),
    "sqrt": lambda inputs, attrs: sqrt(inputs[0]),
    "softmax": lambda inputs, attrs: softmax(inputs[0], axis=attrs["axis"]),
    "batchnorm": lambda inputs, attrs: batchnorm(
        inputs[0],
        inputs[1],
        inputs[2],
        axis=attrs["axis"],
        running_mean=attrs["running_mean"],
        running_var=attrs["running_var"],
        training=attrs.get("training", False),
        momentum=attrs.get("momentum", 0.1),
        eps=attrs.get("eps", 1e-5),
    ),
    "concat": lambda inputs, attrs: concat(inputs, axis=attrs["axis"]),
    "mean_pool": lambda inputs, attrs: mean_pool(inputs[0], axis=attrs["axis"]),
    "std_pool": lambda inputs, attrs: std_pool(inputs[0], axis=attrs["axis"]),
    "max_pool": lambda inputs, attrs: max_pool(
        inputs[0], axis=attrs["axis"], keepdims=attrs.get("keepdims", False)
    ),
    "sum": lambda inputs, attrs: sum_(
        inputs[0], axis=attrs.get("axis"), keepdims=attrs.get("keepdims", False)
    ),
    "affine": lambda inputs, attrs: affine(
        inputs[0], scale=attrs.get("scale", 1.0), shift=attrs.get("shift", 0.0)
    ),
    "reshape": lambda inputs, attrs: reshape(inputs[0], tuple(attrs["shape"])),
    "transpose": lambda inputs, attrs: transpose(inputs[0], tuple(attrs["axes"])),
    "narrow": lambda inputs, attrs: narrow(
        inputs[0], axis=attrs["axis"], start=attrs["start"], length=attrs["length"]
    ),
    "take": lambda inputs, attrs: take(inputs[0], attrs["indices"], axis=attrs["axis"]),
}


def forward_op(kind: str, inputs: Iterable[Tensor], attrs: dict | None = None) -> Tensor:
    """Execute one named operation, validating inputs for finiteness."""
    if kind not in _DISPATCH:
        raise ValueError(f"unknown op kind {kind!r}")
    inputs = [_lift(t) for t in inputs]
    for i, t in enumerate(inputs):
        if not np.all(np.isfinite(t.data)):
            raise ValueError(f"non-finite input {i} to op {kind!r}")
    return _DISPATCH[kind](inputs, attrs or {})


def backward(output: Tensor, seed, leaves: Sequence[Tensor] | None = None) -> dict[Tensor, np.ndarray]:
    """Free-function form of :meth:`Tensor.backward`."""
    return output.backward(seed, leaves=leaves)


# ---------------------------------------------------------------------------
# gradient verification oracle


def finite_diff_check(
    f: Callable[[Tensor], Tensor],
    point: np.ndarray,
    step: float = 1e-5,
) -> float:
    """Compare the analytic gradient of scalar-valued ``f`` at ``point`` with
    central finite differences.

    Returns max over coordinates of |analytic - central| / max(|analytic|,
    |central|, 1e-8).  Non-finite evaluations anywhere in the step
    neighborhood are rejected.
    """
    point = np.asarray(point, dtype=np.float64)
    if step <= 0:
        raise ValueError("step must be positive")
    x = Tensor(point, requires_grad=True)
    out = f(x)
    if out.data.size != 1:
        raise ValueError(f"f must be scalar-valued, got shape {out.shape}")
    if not np.isfinite(out.data):
        raise ValueError("non-finite evaluation at the base point")
    analytic = out.backward(np.ones_like(out.data), leaves=[x])[x].reshape(-1)

    flat = point.reshape(-1)
    numeric = np.empty_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + step
        hi = f(Tensor(bumped.reshape(point.shape))).item()
        bumped[i] = flat[i] - step
        lo = f(Tensor(bumped.reshape(point.shape))).item()
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValueError(f"non-finite evaluation near coordinate {i}")
        numeric[i] = (hi - lo) / (2.0 * step)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))
