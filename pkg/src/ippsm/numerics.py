"""Minimal deterministic tensor core with reverse-mode autodiff.

Just enough machinery for a 1-D convolutional autoencoder: same-padding
convolutions, dense layers, row-wise softmax, label-smoothed cross-entropy,
a Gaussian-kernel MMD penalty, and Adam. Parameters and activations are
float32; scalar losses and metrics accumulate in float64.

Everything here is single-threaded and deterministic: identical inputs
produce bit-identical outputs and gradients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12  # clamp for log(p) on near-zero probabilities


class ShapeError(ValueError):
    """Raised when operand shapes are inconsistent with an operation."""


class GraphError(RuntimeError):
    """Raised when backward() is called without a recorded forward pass."""


class Tensor:
    """A numpy array plus an optional gradient buffer and a backward closure.

    Leaf tensors (parameters, inputs) are created directly; operations
    return non-leaf tensors that remember their parents, so calling
    :func:`backward` on a scalar loss fills every reachable ``grad``.
    """

    __slots__ = ("data", "grad", "name", "_parents", "_backward")

    def __init__(self, data, dtype=np.float32, name=None):
        self.data = np.asarray(data, dtype=dtype)
        self.grad = None
        self.name = name
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def accum_grad(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += np.asarray(g, dtype=self.data.dtype)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape}, dtype={self.data.dtype})"


def _result(data, parents, backward_fn):
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out._parents = tuple(p for p in parents if p is not None)
    out._backward = backward_fn
    return out


def _unbroadcast(g, shape):
    """Sum gradient g down to `shape` (reverses numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward_fn(out):
        a.accum_grad(_unbroadcast(out.grad, a.shape))
        b.accum_grad(_unbroadcast(out.grad, b.shape))

    return _result(out_data, (a, b), backward_fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward_fn(out):
        a.accum_grad(_unbroadcast(out.grad * b.data, a.shape))
        b.accum_grad(_unbroadcast(out.grad * a.data, b.shape))

    return _result(out_data, (a, b), backward_fn)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a python constant (no gradient for c)."""
    out_data = a.data * c

    def backward_fn(out):
        a.accum_grad(out.grad * c)

    return _result(out_data, (a,), backward_fn)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 1 or b.data.ndim != 2 or a.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(
            f"matmul: incompatible shapes {a.data.shape} x {b.data.shape}"
        )
    out_data = a.data @ b.data

    def backward_fn(out):
        g = out.grad
        if a.data.ndim == 1:
            a.accum_grad(g @ b.data.T)
            b.accum_grad(np.outer(a.data, g))
        else:
            a.accum_grad(g @ b.data.T)
            ga = a.data.reshape(-1, a.data.shape[-1])
            b.accum_grad(ga.T @ g.reshape(-1, g.shape[-1]))

    return _result(out_data, (a, b), backward_fn)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    out_data = np.where(mask, a.data, 0)

    def backward_fn(out):
        a.accum_grad(out.grad * mask)

    return _result(out_data, (a,), backward_fn)


def reshape(a: Tensor, shape) -> Tensor:
    out_data = a.data.reshape(shape)

    def backward_fn(out):
        a.accum_grad(out.grad.reshape(a.data.shape))

    return _result(out_data, (a,), backward_fn)


def dense(x: Tensor, weights: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map x @ weights + bias.

    x may be a vector [N] or a batch [..., N]; weights are [N, M].
    """
    if weights.data.ndim != 2 or x.data.shape[-1] != weights.data.shape[0]:
        raise ShapeError(
            f"dense: input {x.data.shape} incompatible with weights {weights.data.shape}"
        )
    if bias is not None and bias.data.shape != (weights.data.shape[1],):
        raise ShapeError(
            f"dense: bias {bias.data.shape} incompatible with weights {weights.data.shape}"
        )
    out = matmul(x, weights)
    if bias is not None:
        out = add(out, bias)
    return out


def conv1d_same(x: Tensor, kernel: Tensor, bias: Tensor | None = None) -> Tensor:
    """Same-length 1-D cross-correlation with zero padding, stride 1.

    x: [L, Cin] or batched [B, L, Cin]; kernel: [K, Cin, Cout] with K odd;
    bias: [Cout] or None. Output has the same length L.
    """
    if kernel.data.ndim != 3:
        raise ShapeError(f"conv1d_same: kernel must be [K, Cin, Cout], got {kernel.data.shape}")
    K, Cin, Cout = kernel.data.shape
    if K % 2 == 0:
        raise ShapeError(f"conv1d_same: kernel width must be odd, got {K}")
    if x.data.ndim not in (2, 3) or x.data.shape[-1] != Cin:
        raise ShapeError(
            f"conv1d_same: input {x.data.shape} incompatible with kernel {kernel.data.shape}"
        )
    if bias is not None and bias.data.shape != (Cout,):
        raise ShapeError(f"conv1d_same: bias {bias.data.shape}, expected ({Cout},)")

    squeeze = x.data.ndim == 2
    xb = x.data[None] if squeeze else x.data
    B, L, _ = xb.shape
    pad = K // 2
    xpad = np.pad(xb, ((0, 0), (pad, pad), (0, 0)))
    y = np.zeros((B, L, Cout), dtype=x.data.dtype)
    for k in range(K):
        y += xpad[:, k:k + L, :] @ kernel.data[k]
    if bias is not None:
        y += bias.data
    out_data = y[0] if squeeze else y

    def backward_fn(out):
        g = out.grad[None] if squeeze else out.grad
        gk = np.zeros_like(kernel.data)
        gxpad = np.zeros_like(xpad)
        for k in range(K):
            gk[k] = np.einsum("blc,blo->co", xpad[:, k:k + L, :], g)
            gxpad[:, k:k + L, :] += g @ kernel.data[k].T
        kernel.accum_grad(gk)
        gx = gxpad[:, pad:pad + L, :]
        x.accum_grad(gx[0] if squeeze else gx)
        if bias is not None:
            bias.accum_grad(g.sum(axis=(0, 1)))

    return _result(out_data, (x, kernel, bias), backward_fn)


def softmax_rows(logits: Tensor) -> Tensor:
    """Row-wise softmax over the last axis, overflow-safe via max subtraction."""
    z = logits.data
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=-1, keepdims=True)

    def backward_fn(out):
        g = out.grad
        dot = (g * p).sum(axis=-1, keepdims=True)
        logits.accum_grad((g - dot) * p)

    return _result(p.astype(z.dtype), (logits,), backward_fn)


def smoothed_cross_entropy(probs: Tensor, targets, epsilon: float) -> Tensor:
    """Mean label-smoothed cross-entropy over all probability rows.

    probs holds distributions on the last axis [..., A]; targets are the
    matching integer symbol indices [...]. The smoothed target is
    (1-eps)*onehot + eps/A. Probabilities below 1e-12 are clamped before
    the log (logged at debug level, not fatal).
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"label smoothing epsilon must be in [0, 1), got {epsilon}")
    p = probs.data
    t = np.asarray(targets)
    if t.shape != p.shape[:-1]:
        raise ShapeError(f"targets {t.shape} do not match probability rows {p.shape[:-1]}")
    A = p.shape[-1]
    clamped = np.maximum(p.astype(np.float64), PROB_FLOOR)
    n_clamped = int((p < PROB_FLOOR).sum())
    if n_clamped:
        log.debug("smoothed_cross_entropy: clamped %d probabilities at %g", n_clamped, PROB_FLOOR)
    logp = np.log(clamped)
    rows = int(np.prod(t.shape)) if t.shape else 1
    picked = np.take_along_axis(logp, t[..., None], axis=-1)[..., 0]
    loss = -(1.0 - epsilon) * picked.sum() - (epsilon / A) * logp.sum()
    loss /= rows

    def backward_fn(out):
        g = float(out.grad)
        dp = np.full_like(clamped, epsilon / A)
        np.put_along_axis(
            dp, t[..., None],
            np.take_along_axis(dp, t[..., None], axis=-1) + (1.0 - epsilon),
            axis=-1,
        )
        probs.accum_grad(-g * dp / clamped / rows)

    return _result(np.float64(loss), (probs,), backward_fn)


def median_heuristic_bandwidth(a, b) -> float:
    """Median pairwise distance of the joint sample; falls back to 1.0."""
    joint = np.concatenate([np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)])
    sq = np.sum((joint[:, None, :] - joint[None, :, :]) ** 2, axis=-1)
    iu = np.triu_indices(len(joint), k=1)
    if len(iu[0]) == 0:
        return 1.0
    med = float(np.median(np.sqrt(sq[iu])))
    return med if med > 0 else 1.0


def _sq_dists(a, b):
    aa = (a * a).sum(axis=1)
    bb = (b * b).sum(axis=1)
    return np.maximum(aa[:, None] + bb[None, :] - 2.0 * (a @ b.T), 0.0)


def mmd_sq(sample_a: Tensor, sample_b: Tensor, bandwidth: float | None = None) -> Tensor:
    """Biased (V-statistic) squared MMD with a Gaussian kernel.

    k(x, y) = exp(-|x-y|^2 / (2*bandwidth^2)). With bandwidth=None the
    median heuristic over the joint sample is used (treated as a constant,
    no gradient through the bandwidth). Always >= 0; exactly 0 for
    identical samples.
    """
    a64 = sample_a.data.astype(np.float64)
    b64 = sample_b.data.astype(np.float64)
    if a64.ndim != 2 or b64.ndim != 2 or a64.shape[1] != b64.shape[1]:
        raise ShapeError(f"mmd_sq: need [n,d] and [m,d], got {a64.shape} and {b64.shape}")
    if a64.shape[0] == 0 or b64.shape[0] == 0:
        raise ValueError("mmd_sq: empty sample")
    if bandwidth is None:
        bandwidth = median_heuristic_bandwidth(a64, b64)
    if bandwidth <= 0:
        raise ValueError(f"mmd_sq: bandwidth must be positive, got {bandwidth}")
    s2 = bandwidth * bandwidth
    n, m = a64.shape[0], b64.shape[0]
    kaa = np.exp(-_sq_dists(a64, a64) / (2.0 * s2))
    kbb = np.exp(-_sq_dists(b64, b64) / (2.0 * s2))
    kab = np.exp(-_sq_dists(a64, b64) / (2.0 * s2))
    value = kaa.mean() + kbb.mean() - 2.0 * kab.mean()

    def backward_fn(out):
        g = float(out.grad)
        # d/dx exp(-|x-y|^2/(2s2)) = k(x,y) * (y-x) / s2
        ga = (2.0 / (n * n)) * (kaa @ a64 - kaa.sum(axis=1)[:, None] * a64)
        ga -= (2.0 / (n * m)) * (kab @ b64 - kab.sum(axis=1)[:, None] * a64)
        gb = (2.0 / (m * m)) * (kbb @ b64 - kbb.sum(axis=1)[:, None] * b64)
        gb -= (2.0 / (n * m)) * (kab.T @ a64 - kab.sum(axis=0)[:, None] * b64)
        sample_a.accum_grad((g / s2) * ga)
        sample_b.accum_grad((g / s2) * gb)

    return _result(np.float64(max(value, 0.0)), (sample_a, sample_b), backward_fn)


def backward(loss: Tensor) -> None:
    """Reverse-mode sweep from a scalar loss; fills grad on every parent."""
    if loss.data.size != 1:
        raise GraphError(f"backward: loss must be scalar, got shape {loss.data.shape}")
    if not loss._parents:
        raise GraphError("backward: no recorded forward pass for this node")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node)


@dataclass
class OptimizerState:
    """Adam accumulators keyed by parameter name."""

    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: OptimizerState):
    """One Adam update with bias correction; mutates params and state.

    params and grads map name -> ndarray (same shapes). Raises on any
    non-finite gradient, naming the offending parameter.
    """
    if state.step < 0:
        raise ValueError("optimizer step counter must be non-negative")
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"adam_step: grad shape {g.shape} != param shape {p.shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"adam_step: non-finite gradient for parameter {name!r}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        mhat = m / corr1
        vhat = v / corr2
        p -= (state.learning_rate * mhat / (np.sqrt(vhat) + state.epsilon)).astype(p.dtype)
    return params, state


def he_init(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> np.ndarray:
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
