"""Adaptive augmentation layer built on the T-product.

Each m x n x 3 image spawns two extra views: the image is permuted so its
width (resp. height) axis becomes the tube axis, multiplied by a learnable
3 x 3 x n (resp. 3 x 3 x m) tensor under the T-product, passed through the
activation, and permuted back to image shape.  The three branch
predictions are combined with fixed convex weights.  Both weight tensors
start as the T-product identity, so an untrained layer is exactly a
no-op.

Gradients for the weight tensors and the image are closed-form: with
Z = A * W, dW = A^T * dZ and dA = dZ * W^T (tensor transpose), with dZ the
upstream gradient gated by the activation derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError, StateError
from .tensor3 import as_tensor3, dump_tensor, load_tensor
from .tprod import identity_tensor, tprod_fft, ttranspose

__all__ = [
    "PRESETS",
    "TAdafParams",
    "BranchCache",
    "combine",
    "augment_forward",
    "augment_backward",
    "augment_forward_batch",
    "augment_backward_batch",
]

PRESETS = {
    "333": (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
    "433": (0.4, 0.3, 0.3),
    "525": (0.5, 0.25, 0.25),
}

_ACTIVATIONS = {
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(np.float64)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
}


def _check_weights(w):
    w = tuple(float(v) for v in w)
    if len(w) != 3 or min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
        raise ConfigError(f"branch weights {w} must be nonnegative and sum to 1")
    return w


@dataclass
class TAdafParams:
    """Learnable augmentation state: two weight tensors plus fixed knobs."""

    w1: np.ndarray  # 3 x 3 x n, acts on the width-tube view
    w2: np.ndarray  # 3 x 3 x m, acts on the height-tube view
    weights: tuple = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    activation: str = "identity"
    frozen: bool = False

    def __post_init__(self):
        self.w1 = as_tensor3(self.w1)
        self.w2 = as_tensor3(self.w2)
        if self.w1.shape[:2] != (3, 3) or self.w2.shape[:2] != (3, 3):
            raise ShapeError("weight tensors must be 3 x 3 x depth")
        self.weights = _check_weights(self.weights)
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @classmethod
    def identity_init(cls, m: int, n: int, weights=(1 / 3, 1 / 3, 1 / 3),
                      activation: str = "identity") -> "TAdafParams":
        return cls(w1=identity_tensor(3, n), w2=identity_tensor(3, m),
                   weights=weights, activation=activation)

    @property
    def num_params(self) -> int:
        return self.w1.size + self.w2.size

    def activation_fns(self):
        return _ACTIVATIONS[self.activation]

    def checkpoint_section(self) -> str:
        head = (f"augment weights {self.weights[0]:.17g} {self.weights[1]:.17g} "
                f"{self.weights[2]:.17g} activation {self.activation}\n")
        return head + dump_tensor(self.w1) + dump_tensor(self.w2)

    @classmethod
    def from_checkpoint_section(cls, text: str) -> "TAdafParams":
        lines = text.strip().splitlines()
        head = lines[0].split()
        if head[0] != "augment" or head[1] != "weights" or head[5] != "activation":
            raise ConfigError("bad augment checkpoint header")
        weights = tuple(float(v) for v in head[2:5])
        activation = head[5 + 1]
        body = lines[1:]
        m1, n1, p1 = (int(v) for v in body[0].split())
        rows1 = m1 * p1 + 1
        w1 = load_tensor("\n".join(body[:rows1]))
        w2 = load_tensor("\n".join(body[rows1:]))
        return cls(w1=w1, w2=w2, weights=weights, activation=activation)


@dataclass
class BranchCache:
    """Intermediates retained by the forward pass for the backward pass."""

    a1: np.ndarray  # stacked (B*m) x 3 x n permuted inputs
    a2: np.ndarray  # stacked (B*n) x 3 x m permuted inputs
    z1: np.ndarray  # pre-activation T-product outputs, same shape as a1
    z2: np.ndarray
    batch: int
    dims: tuple = field(default=())  # (m, n)


def combine(results, w):
    """Convex combination of branch predictions: w0*r0 + w1*r1 + w2*r2."""
    w = _check_weights(w)
    r0, r1, r2 = (np.asarray(r, dtype=np.float64) for r in results)
    if not (r0.shape == r1.shape == r2.shape):
        raise ShapeError("branch predictions differ in shape")
    return w[0] * r0 + w[1] * r1 + w[2] * r2


def _check_image_batch(imgs, params):
    imgs = np.asarray(imgs, dtype=np.float64)
    if imgs.ndim != 4 or imgs.shape[3] != 3:
        raise ShapeError(f"expected a batch of m x n x 3 images, got {imgs.shape}")
    _, m, n, _ = imgs.shape
    if m != n:
        raise ShapeError(f"non-square images ({m} x {n}) are not supported")
    if params.w1.shape[2] != n or params.w2.shape[2] != m:
        raise ShapeError(
            f"image {m} x {n} does not match weight depths "
            f"({params.w1.shape[2]}, {params.w2.shape[2]})"
        )
    return imgs


def augment_forward_batch(imgs, params: TAdafParams):
    """Forward pass over a batch (B, m, n, 3) -> three branch batches + cache.

    The batch is stacked along the row axis so each branch costs one
    T-product regardless of batch size.
    """
    imgs = _check_image_batch(imgs, params)
    b, m, n, _ = imgs.shape
    act, _ = params.activation_fns()

    a1 = imgs.transpose(0, 1, 3, 2).reshape(b * m, 3, n)  # width becomes tubes
    a2 = imgs.transpose(0, 2, 3, 1).reshape(b * n, 3, m)  # height becomes tubes
    z1 = tprod_fft(a1, params.w1)
    z2 = tprod_fft(a2, params.w2)
    branch1 = act(z1).reshape(b, m, 3, n).transpose(0, 1, 3, 2)
    branch2 = act(z2).reshape(b, n, 3, m).transpose(0, 3, 1, 2)
    cache = BranchCache(a1=a1, a2=a2, z1=z1, z2=z2, batch=b, dims=(m, n))
    return (imgs.copy(), branch1, branch2), cache


def augment_backward_batch(grad_branches, cache: BranchCache,
                           params: TAdafParams):
    """Backward pass matching augment_forward_batch.

    grad_branches are the upstream gradients w.r.t. the three branch
    outputs (already carrying any combination-weight scaling).  Returns
    (dW1, dW2, dImgs); weight gradients are the plain sum over the batch,
    so a mean-reduced loss upstream yields mean weight gradients here.
    """
    g0, g1, g2 = (np.asarray(g, dtype=np.float64) for g in grad_branches)
    b = cache.batch
    m, n = cache.dims
    if g0.shape != (b, m, n, 3) or g1.shape != g0.shape or g2.shape != g0.shape:
        raise StateError("branch gradients do not match the cached forward")
    if params.w1.shape[2] != n or params.w2.shape[2] != m:
        raise StateError("params changed shape since the forward pass")
    _, dact = params.activation_fns()

    dz1 = g1.transpose(0, 1, 3, 2).reshape(b * m, 3, n) * dact(cache.z1)
    dz2 = g2.transpose(0, 2, 3, 1).reshape(b * n, 3, m) * dact(cache.z2)

    if params.frozen:
        dw1 = np.zeros_like(params.w1)
        dw2 = np.zeros_like(params.w2)
    else:
        dw1 = tprod_fft(ttranspose(cache.a1), dz1)
        dw2 = tprod_fft(ttranspose(cache.a2), dz2)

    da1 = tprod_fft(dz1, ttranspose(params.w1)).reshape(b, m, 3, n)
    da2 = tprod_fft(dz2, ttranspose(params.w2)).reshape(b, n, 3, m)
    dimgs = g0 + da1.transpose(0, 1, 3, 2) + da2.transpose(0, 3, 1, 2)
    return dw1, dw2, dimgs


def augment_forward(img, params: TAdafParams):
    """Single-image forward pass: (m, n, 3) -> three branches + cache."""
    img = as_tensor3(img)
    branches, cache = augment_forward_batch(img[None], params)
    return tuple(br[0] for br in branches), cache


def augment_backward(grad_branches, cache: BranchCache, params: TAdafParams):
    """Single-image backward pass matching augment_forward."""
    grads = tuple(as_tensor3(g)[None] for g in grad_branches)
    dw1, dw2, dimgs = augment_backward_batch(grads, cache, params)
    return dw1, dw2, dimgs[0]
