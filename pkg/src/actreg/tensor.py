"""Reverse-mode automatic differentiation over float64 numpy arrays.

A Tensor wraps a dense float64 array and, when it participates in a
differentiable graph, remembers its parents and a backward closure.
``backward()`` on a scalar walks the recorded graph once in reverse
topological order, accumulating gradients additively so fan-out is
handled correctly. Only the operations needed by the model zoo are
provided; shapes must match exactly except for the documented bias
broadcasts.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import NonFiniteError, ShapeError, ValidationError
from .rng import Seed, make_generator


class Tensor:
    """Dense float64 array with optional gradient tracking.

    Elements are finite by construction: the constructor rejects NaN and
    infinity, so any overflow inside an operation surfaces immediately.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False,
                 _parents: tuple["Tensor", ...] = ()):
        arr = np.asarray(data, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise NonFiniteError("tensor contains non-finite values")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        # Constant subgraphs are pruned: no parents, no backward closure.
        self._parents = _parents if self.requires_grad else ()
        self._backward: Callable[[], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(()))

    def backward(self) -> None:
        """Backpropagate from a scalar through the recorded graph.

        Visits every reachable node exactly once, children before
        parents, and accumulates into ``grad`` with addition.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward() starts from a scalar, shape is {self.shape}")
        if not self.requires_grad:
            raise ValidationError("backward() on a graph with no differentiable leaves")
        order: list[Tensor] = []
        seen: set[Tensor] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node in seen:
                continue
            seen.add(node)
            stack.append((node, True))
            for parent in node._parents:
                if parent not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward()

    def sum(self) -> "Tensor":
        """Sum of all elements as a scalar tensor."""
        out = Tensor(np.array(self.data.sum()), _parents=(self,))
        if out.requires_grad:
            def backward():
                _accumulate(self, np.full_like(self.data, float(out.grad)))
            out._backward = backward
        return out

    def reshape(self, shape: tuple[int, ...]) -> "Tensor":
        out = Tensor(self.data.reshape(shape), _parents=(self,))
        if out.requires_grad:
            def backward():
                _accumulate(self, out.grad.reshape(self.data.shape))
            out._backward = backward
        return out

    def __add__(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            if self.shape != other.shape:
                raise ShapeError(f"add shapes differ: {self.shape} vs {other.shape}")
            out = Tensor(self.data + other.data, _parents=(self, other))
            if out.requires_grad:
                def backward():
                    _accumulate(self, out.grad)
                    _accumulate(other, out.grad)
                out._backward = backward
            return out
        out = Tensor(self.data + float(other), _parents=(self,))
        if out.requires_grad:
            def backward():
                _accumulate(self, out.grad)
            out._backward = backward
        return out

    __radd__ = __add__

    def __mul__(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            if self.shape != other.shape:
                raise ShapeError(f"mul shapes differ: {self.shape} vs {other.shape}")
            out = Tensor(self.data * other.data, _parents=(self, other))
            if out.requires_grad:
                def backward():
                    _accumulate(self, out.grad * other.data)
                    _accumulate(other, out.grad * self.data)
                out._backward = backward
            return out
        scale = float(other)
        out = Tensor(self.data * scale, _parents=(self,))
        if out.requires_grad:
            def backward():
                _accumulate(self, out.grad * scale)
            out._backward = backward
        return out

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other) -> "Tensor":
        return self + (-other if isinstance(other, Tensor) else -float(other))

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product with exact inner-dimension checking."""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} vs {b.shape}")
    out = Tensor(a.data @ b.data, _parents=(a, b))
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad @ b.data.T)
            _accumulate(b, a.data.T @ out.grad)
        out._backward = backward
    return out


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Broadcast a bias vector onto a batch.

    Supports (n, k) + (k,) for dense layers and (n, c, h, w) + (c,) for
    convolution channels. This is the only broadcasting in the package.
    """
    if x.data.ndim == 2 and b.data.shape == (x.shape[1],):
        out = Tensor(x.data + b.data, _parents=(x, b))
        axes = (0,)
    elif x.data.ndim == 4 and b.data.shape == (x.shape[1],):
        out = Tensor(x.data + b.data[None, :, None, None], _parents=(x, b))
        axes = (0, 2, 3)
    else:
        raise ShapeError(f"bias {b.shape} does not broadcast onto {x.shape}")
    if out.requires_grad:
        def backward():
            _accumulate(x, out.grad)
            _accumulate(b, out.grad.sum(axis=axes))
        out._backward = backward
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0), _parents=(x,))
    if out.requires_grad:
        mask = x.data > 0
        def backward():
            _accumulate(x, out.grad * mask)
        out._backward = backward
    return out


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    out = Tensor(t, _parents=(x,))
    if out.requires_grad:
        def backward():
            _accumulate(x, out.grad * (1.0 - t * t))
        out._backward = backward
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)
    out = Tensor(s, _parents=(x,))
    if out.requires_grad:
        def backward():
            _accumulate(x, out.grad * s * (1.0 - s))
        out._backward = backward
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def concat(parts: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate along one axis; all other extents must agree."""
    if not parts:
        raise ValidationError("concat needs at least one tensor")
    ndim = parts[0].data.ndim
    for p in parts[1:]:
        if p.data.ndim != ndim:
            raise ShapeError(f"concat rank mismatch: {parts[0].shape} vs {p.shape}")
        for ax in range(ndim):
            if ax != axis % ndim and p.shape[ax] != parts[0].shape[ax]:
                raise ShapeError(f"concat shapes differ off-axis: "
                                 f"{parts[0].shape} vs {p.shape}")
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis),
                 _parents=tuple(parts))
    if out.requires_grad:
        widths = [p.shape[axis % ndim] for p in parts]
        splits = np.cumsum(widths)[:-1]
        def backward():
            for p, g in zip(parts, np.split(out.grad, splits, axis=axis)):
                _accumulate(p, g)
        out._backward = backward
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; rows sum to 1."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy of softmax(logits) against integer labels.

    Stabilized by max subtraction, so arbitrarily large logits do not
    overflow. The gradient reaching ``logits`` is (softmax - onehot) / n.
    """
    if logits.data.ndim != 2:
        raise ShapeError(f"logits must be (batch, classes), got {logits.shape}")
    y = np.asarray(labels)
    n, k = logits.shape
    if y.shape != (n,):
        raise ShapeError(f"labels shape {y.shape} does not match batch {n}")
    if not np.issubdtype(y.dtype, np.integer):
        raise ValidationError("labels must be integers")
    bad = np.nonzero((y < 0) | (y >= k))[0]
    if bad.size:
        raise ValidationError(f"label {int(y[bad[0]])} out of range [0, {k}) "
                              f"at row {int(bad[0])}")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(lse - z[np.arange(n), y]))
    out = Tensor(np.array(loss), _parents=(logits,))
    if out.requires_grad:
        probs = softmax(logits.data)
        def backward():
            d = probs.copy()
            d[np.arange(n), y] -= 1.0
            _accumulate(logits, float(out.grad) * d / n)
        out._backward = backward
    return out


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, padding: int,
            oh: int, ow: int) -> np.ndarray:
    """Gather sliding windows into (n, c*kh*kw, oh*ow)."""
    n, c, h, w = x.shape
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = x[:, :, i:i + stride * oh:stride,
                                 j:j + stride * ow:stride]
    return cols.reshape(n, c * kh * kw, oh * ow)


def _col2im(dcols: np.ndarray, xshape: tuple[int, ...], kh: int, kw: int,
            stride: int, padding: int, oh: int, ow: int) -> np.ndarray:
    """Scatter-add column gradients back to input positions."""
    n, c, h, w = xshape
    dxp = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=np.float64)
    d6 = dcols.reshape(n, c, kh, kw, oh, ow)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += d6[:, :, i, j]
    if padding:
        return dxp[:, :, padding:padding + h, padding:padding + w]
    return dxp


def conv2d(x: Tensor, w: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of (n, c, h, w) inputs with (o, c, kh, kw) kernels.

    Output extents are floor((side + 2*padding - kernel) / stride) + 1.
    Implemented with an im2col gather so forward and backward are plain
    matrix products. No kernel flip: this is the convention every major
    deep-learning framework calls convolution.
    """
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeError(f"conv2d needs 4-D input and kernels, got {x.shape} "
                         f"and {w.shape}")
    n, c, h, wid = x.shape
    o, ck, kh, kw = w.shape
    if ck != c:
        raise ShapeError(f"kernel channels {ck} do not match input channels {c} "
                         f"({x.shape} vs {w.shape})")
    if stride < 1 or padding < 0:
        raise ValidationError(f"stride must be >= 1 and padding >= 0, "
                              f"got {stride}, {padding}")
    if kh > h + 2 * padding or kw > wid + 2 * padding:
        raise ShapeError(f"kernel {kh}x{kw} exceeds padded input "
                         f"{h + 2 * padding}x{wid + 2 * padding}")
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (wid + 2 * padding - kw) // stride + 1
    cols = _im2col(x.data, kh, kw, stride, padding, oh, ow)
    wf = w.data.reshape(o, c * kh * kw)
    out = Tensor(np.matmul(wf, cols).reshape(n, o, oh, ow), _parents=(x, w))
    if out.requires_grad:
        def backward():
            g = out.grad.reshape(n, o, oh * ow)
            _accumulate(w, np.einsum("nol,nkl->ok", g, cols).reshape(w.shape))
            dcols = np.matmul(wf.T, g)
            _accumulate(x, _col2im(dcols, x.shape, kh, kw, stride, padding, oh, ow))
        out._backward = backward
    return out


def max_pool2(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; odd trailing rows or columns drop.

    The gradient flows to the first maximal element of each window.
    """
    if x.data.ndim != 4:
        raise ShapeError(f"max_pool2 needs (n, c, h, w), got {x.shape}")
    n, c, h, w = x.shape
    oh, ow = h // 2, w // 2
    if oh == 0 or ow == 0:
        raise ShapeError(f"input {h}x{w} too small for 2x2 pooling")
    win = (x.data[:, :, :oh * 2, :ow * 2]
           .reshape(n, c, oh, 2, ow, 2)
           .transpose(0, 1, 2, 4, 3, 5)
           .reshape(n, c, oh, ow, 4))
    idx = win.argmax(axis=-1)
    out = Tensor(np.take_along_axis(win, idx[..., None], axis=-1)[..., 0],
                 _parents=(x,))
    if out.requires_grad:
        def backward():
            dwin = np.zeros((n, c, oh, ow, 4), dtype=np.float64)
            np.put_along_axis(dwin, idx[..., None], out.grad[..., None], axis=-1)
            dx = np.zeros_like(x.data)
            dx[:, :, :oh * 2, :ow * 2] = (dwin.reshape(n, c, oh, ow, 2, 2)
                                          .transpose(0, 1, 2, 4, 3, 5)
                                          .reshape(n, c, oh * 2, ow * 2))
            _accumulate(x, dx)
        out._backward = backward
    return out


class AdamState:
    """First and second moment estimates plus the shared step counter."""

    def __init__(self, shapes: Sequence[tuple[int, ...]]):
        self.m = [np.zeros(s, dtype=np.float64) for s in shapes]
        self.v = [np.zeros(s, dtype=np.float64) for s in shapes]
        self.step_count = 0


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray | None],
              state: AdamState, *, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8,
              weight_decay: float = 0.0) -> None:
    """One Adam update, in place.

    L2 weight decay is folded into the gradient before the moment
    updates (grad += weight_decay * param), the classic coupled form.
    Bias correction uses the shared step counter, which this call
    increments.
    """
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValidationError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
    if eps <= 0.0 or lr < 0.0 or weight_decay < 0.0:
        raise ValidationError("lr and weight_decay must be >= 0 and eps > 0")
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValidationError("params, grads and state lengths differ")
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            g = np.zeros_like(p)
        if g.shape != p.shape:
            raise ShapeError(f"grad shape {g.shape} does not match param {p.shape}")
        if weight_decay:
            g = g + weight_decay * p
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


class Adam:
    """Adam bound to a list of parameter tensors."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = AdamState([p.shape for p in self.params])

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        adam_step([p.data for p in self.params], [p.grad for p in self.params],
                  self.state, lr=self.lr, beta1=self.beta1, beta2=self.beta2,
                  eps=self.eps, weight_decay=self.weight_decay)


def grad_check(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], *,
               perturbation: float = 1e-6, max_coords: int = 25,
               rng: Seed = 0) -> float:
    """Compare backward gradients against central finite differences.

    ``loss_fn`` must be a deterministic closure over ``params`` that
    returns a scalar tensor. For tensors larger than ``max_coords`` a
    seeded random subset of coordinates is probed. Returns the worst
    relative error  |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    if not (1e-7 <= perturbation <= 1e-3):
        raise ValidationError(f"perturbation {perturbation} outside [1e-7, 1e-3]")
    if not params:
        raise ValidationError("grad_check needs at least one parameter")
    gen = make_generator(rng)
    for p in params:
        p.grad = None
    loss = loss_fn()
    if loss.data.size != 1:
        raise ShapeError(f"loss_fn must return a scalar, got {loss.shape}")
    loss.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
                for p in params]
    worst = 0.0
    for pi, p in enumerate(params):
        flat = p.data.reshape(-1)
        n = flat.size
        if n <= max_coords:
            coords = np.arange(n)
        else:
            coords = np.sort(gen.choice(n, size=max_coords, replace=False))
        aflat = analytic[pi].reshape(-1)
        for ci in coords:
            orig = flat[ci]
            flat[ci] = orig + perturbation
            lo_hi = loss_fn().item()
            flat[ci] = orig - perturbation
            lo_lo = loss_fn().item()
            flat[ci] = orig
            if not (np.isfinite(lo_hi) and np.isfinite(lo_lo)):
                raise NonFiniteError(f"loss non-finite while perturbing parameter "
                                     f"{pi} coordinate {int(ci)}")
            numeric = (lo_hi - lo_lo) / (2.0 * perturbation)
            a = aflat[ci]
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            worst = max(worst, rel)
    return worst
