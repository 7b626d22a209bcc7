"""Minimal desk-scale classifier stack: conv/pool/dense layers, softmax
cross-entropy, Adam, and staged learning-rate schedules.

Layers operate on batches in (B, C, H, W) order; images stored as
(H, W, 3) tensors are converted at the model boundary.  Everything is
plain numpy with explicit backward passes so the whole pipeline is
finite-difference checkable.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, ShapeError, StateError
from .tensor3 import dump_matrix, load_matrix

__all__ = [
    "Conv2D", "Dense", "ReLU", "MaxPool2", "Flatten",
    "Model", "AdamState", "adam_step",
    "softmax", "softmax_xent", "softmax_xent_batch",
    "LrSchedule", "lr_at", "LENET_SCHEDULE", "DEEP_SCHEDULE",
    "scaled_schedule", "constant_schedule",
    "build_lenet", "build_mlp",
    "model_forward", "model_backward",
    "save_checkpoint", "load_checkpoint",
]

TPROD_RATE_FACTOR = 0.2  # T-product rate is one fifth of the model rate


# ---------------------------------------------------------------------------
# Layers

def _uniform_init(rng, shape, fan_in):
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv2D:
    """Valid (no padding) convolution, stride 1, via im2col."""

    def __init__(self, cin, cout, ksize, rng):
        self.cin, self.cout, self.ksize = cin, cout, ksize
        self.weight = _uniform_init(rng, (cout, cin * ksize * ksize),
                                    cin * ksize * ksize)
        self.bias = np.zeros(cout)

    def params(self):
        return [self.weight, self.bias]

    def _im2col(self, x):
        k = self.ksize
        win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
        b, c, oh, ow = win.shape[:4]
        # (B, C, OH, OW, k, k) -> (B, C*k*k, OH*OW), matching weight layout
        return win.transpose(0, 1, 4, 5, 2, 3).reshape(b, c * k * k, oh * ow), (oh, ow)

    def forward(self, x):
        if x.shape[1] != self.cin:
            raise ConfigError(f"conv expected {self.cin} channels, got {x.shape[1]}")
        cols, (oh, ow) = self._im2col(x)
        out = self.weight[None] @ cols + self.bias[None, :, None]
        return out.reshape(x.shape[0], self.cout, oh, ow), (x.shape, cols, oh, ow)

    def backward(self, dout, cache):
        x_shape, cols, oh, ow = cache
        b = dout.shape[0]
        dflat = dout.reshape(b, self.cout, oh * ow)
        dweight = (dflat @ cols.transpose(0, 2, 1)).sum(axis=0)
        dbias = dflat.sum(axis=(0, 2))
        dcols = self.weight.T[None] @ dflat
        k, c = self.ksize, self.cin
        dcols = dcols.reshape(b, c, k, k, oh, ow)
        dx = np.zeros(x_shape)
        for ki in range(k):
            for kj in range(k):
                dx[:, :, ki:ki + oh, kj:kj + ow] += dcols[:, :, ki, kj]
        return [dweight, dbias], dx


class Dense:
    def __init__(self, nin, nout, rng):
        self.weight = _uniform_init(rng, (nout, nin), nin)
        self.bias = np.zeros(nout)

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x):
        return x @ self.weight.T + self.bias, x

    def backward(self, dout, cache):
        x = cache
        return [dout.T @ x, dout.sum(axis=0)], dout @ self.weight


class ReLU:
    def params(self):
        return []

    def forward(self, x):
        return np.maximum(x, 0.0), (x > 0)

    def backward(self, dout, cache):
        return [], dout * cache


class MaxPool2:
    """2x2 max pooling, stride 2; input extents must be even."""

    def params(self):
        return []

    def forward(self, x):
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ShapeError(f"pool needs even extents, got {h} x {w}")
        win = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
        win = win.reshape(b, c, h // 2, w // 2, 4)
        idx = win.argmax(axis=-1)
        out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
        return out, (x.shape, idx)

    def backward(self, dout, cache):
        x_shape, idx = cache
        b, c, h, w = x_shape
        dwin = np.zeros((b, c, h // 2, w // 2, 4))
        np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
        dx = dwin.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        return [], dx.reshape(x_shape)


class Flatten:
    def params(self):
        return []

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache):
        return [], dout.reshape(cache)


class Model:
    """Ordered layer list with joint forward/backward over a batch."""

    def __init__(self, layers, input_hw, num_classes):
        self.layers = layers
        self.input_hw = input_hw
        self.num_classes = num_classes

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def num_params(self):
        return sum(p.size for p in self.params())

    def forward(self, x):
        """x: (B, C, H, W) -> (logits (B, K), caches)."""
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, dlogits, caches):
        """Reverse pass; returns (grads aligned with params(), dx)."""
        if len(caches) != len(self.layers):
            raise StateError("cache does not match the layer list")
        grads = []
        dx = dlogits
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            layer_grads, dx = layer.backward(dx, cache)
            grads[:0] = layer_grads
        return grads, dx


def images_to_batch(imgs):
    """(B, H, W, 3) image tensors -> (B, 3, H, W) network input."""
    return np.ascontiguousarray(np.transpose(imgs, (0, 3, 1, 2)))


def batch_to_images(x):
    """(B, 3, H, W) -> (B, H, W, 3)."""
    return np.ascontiguousarray(np.transpose(x, (0, 2, 3, 1)))


def model_forward(img, model: Model):
    """Single-image forward: (H, W, 3) -> (logits vector, cache)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[:2] != model.input_hw:
        raise ConfigError(
            f"image shape {img.shape} does not match model input {model.input_hw}"
        )
    logits, caches = model.forward(images_to_batch(img[None]))
    return logits[0], caches


def model_backward(grad_logits, caches, model: Model):
    """Single-image backward: returns (param grads, dImg as (H, W, 3))."""
    grads, dx = model.backward(np.asarray(grad_logits)[None], caches)
    return grads, batch_to_images(dx)[0]


# ---------------------------------------------------------------------------
# Loss

def softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits, label: int):
    """Loss and logit gradient for a single prediction vector."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < logits.shape[-1]:
        raise ValueError(f"label {label} out of range")
    p = softmax(logits)
    grad = p.copy()
    grad[label] -= 1.0
    return -np.log(p[label]), grad


def softmax_xent_batch(logits, labels):
    """Mean loss over a batch; gradient carries the 1/B factor."""
    logits = np.asarray(logits, dtype=np.float64)
    b = logits.shape[0]
    p = softmax(logits)
    losses = -np.log(p[np.arange(b), labels])
    grad = p.copy()
    grad[np.arange(b), labels] -= 1.0
    return losses.mean(), grad / b


# ---------------------------------------------------------------------------
# Adam

@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params):
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, lr, state: AdamState,
              beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place Adam update over a list of parameter arrays."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params / grads / moments disagree in length")
    state.step += 1
    t = state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"grad shape {g.shape} != param shape {p.shape}")
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        mhat = m / (1 - beta1 ** t)
        vhat = v / (1 - beta2 ** t)
        p -= lr * mhat / (np.sqrt(vhat) + eps)


# ---------------------------------------------------------------------------
# Learning-rate schedules

@dataclass(frozen=True)
class LrSchedule:
    """Piecewise-constant model rates; the T-product rate is 1/5 of them."""

    stages: tuple  # ((first_epoch, last_epoch, model_rate), ...)

    @property
    def last_epoch(self):
        return self.stages[-1][1]


LENET_SCHEDULE = LrSchedule(((1, 50, 0.1), (51, 100, 0.02)))
DEEP_SCHEDULE = LrSchedule(((1, 60, 0.1), (61, 120, 0.02),
                            (121, 160, 0.004), (161, 200, 0.0008)))


def constant_schedule(rate, epochs):
    return LrSchedule(((1, epochs, float(rate)),))


def scaled_schedule(base: LrSchedule, epochs: int) -> LrSchedule:
    """Rescale a schedule's stage boundaries proportionally to a new length."""
    total = base.last_epoch
    stages = []
    prev_end = 0
    for first, last, rate in base.stages:
        end = round(last * epochs / total)
        if first == base.stages[-1][0]:
            end = epochs
        if end <= prev_end:
            continue  # stage collapsed away at this length
        stages.append((prev_end + 1, end, rate))
        prev_end = end
    return LrSchedule(tuple(stages))


def lr_at(schedule: LrSchedule, epoch: int, which: str = "model") -> float:
    if which not in ("model", "tprod"):
        raise ValueError(f"unknown rate kind {which!r}")
    for first, last, rate in schedule.stages:
        if first <= epoch <= last:
            return rate if which == "model" else rate * TPROD_RATE_FACTOR
    raise IndexError(f"epoch {epoch} outside schedule 1..{schedule.last_epoch}")


# ---------------------------------------------------------------------------
# Model factories

def build_lenet(num_classes: int, seed: int = 0, input_hw=(32, 32)) -> Model:
    """LeNet-5-class CNN for 3-channel 32x32 inputs."""
    rng = np.random.default_rng(seed)
    h, w = input_hw
    fh = (h - 4) // 2  # after conv5 + pool
    fh = (fh - 4) // 2  # after second conv5 + pool
    flat = 16 * fh * fh
    layers = [
        Conv2D(3, 6, 5, rng), ReLU(), MaxPool2(),
        Conv2D(6, 16, 5, rng), ReLU(), MaxPool2(),
        Flatten(),
        Dense(flat, 120, rng), ReLU(),
        Dense(120, 84, rng), ReLU(),
        Dense(84, num_classes, rng),
    ]
    return Model(layers, input_hw, num_classes)


def build_mlp(input_hw, num_classes: int, hidden: int = 32, seed: int = 0) -> Model:
    rng = np.random.default_rng(seed)
    h, w = input_hw
    layers = [
        Flatten(),
        Dense(h * w * 3, hidden, rng), ReLU(),
        Dense(hidden, num_classes, rng),
    ]
    return Model(layers, input_hw, num_classes)


def build_model(kind: str, input_hw, num_classes: int, seed: int = 0) -> Model:
    if kind == "lenet":
        return build_lenet(num_classes, seed=seed, input_hw=input_hw)
    if kind == "mlp":
        return build_mlp(input_hw, num_classes, seed=seed)
    raise ConfigError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# Checkpointing

CHECKPOINT_VERSION = "tubalaug-checkpoint v1"


def save_checkpoint(path, model: Model, adam: AdamState | None = None,
                    augment_section: str | None = None):
    """Versioned text checkpoint: layer manifest + parameter dumps."""
    buf = io.StringIO()
    buf.write(CHECKPOINT_VERSION + "\n")
    buf.write(f"input {model.input_hw[0]} {model.input_hw[1]} "
              f"classes {model.num_classes}\n")
    manifest = []
    for layer in model.layers:
        name = type(layer).__name__.lower()
        if isinstance(layer, Conv2D):
            manifest.append(f"conv2d {layer.cin} {layer.cout} {layer.ksize}")
        elif isinstance(layer, Dense):
            manifest.append(f"dense {layer.weight.shape[1]} {layer.weight.shape[0]}")
        else:
            manifest.append(name)
    buf.write(f"layers {len(manifest)}\n")
    for line in manifest:
        buf.write(line + "\n")
    for p in model.params():
        buf.write(dump_matrix(p.reshape(p.shape[0], -1) if p.ndim > 1 else p[None]))
    buf.write(f"adam {1 if adam is not None else 0}\n")
    if adam is not None:
        buf.write(f"step {adam.step}\n")
        for arr in adam.m + adam.v:
            buf.write(dump_matrix(arr.reshape(arr.shape[0], -1)
                                  if arr.ndim > 1 else arr[None]))
    if augment_section is not None:
        buf.write(augment_section)
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def _read_matrices(lines, templates):
    """Consume one matrix dump per template array, restoring its shape."""
    out = []
    pos = 0
    for tpl in templates:
        rows, cols = (int(v) for v in lines[pos].split())
        blob = "\n".join(lines[pos:pos + rows + 1])
        mat = load_matrix(blob)
        out.append(mat.reshape(tpl.shape))
        pos += rows + 1
    return out, pos


def load_checkpoint(path, model: Model, adam: AdamState | None = None):
    """Load parameters (and optionally Adam moments) into a matching model.

    Returns the trailing augment section text, or None.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if lines[0] != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint header {lines[0]!r}")
    n_layers = int(lines[2].split()[1])
    body = lines[3 + n_layers:]
    params = model.params()
    loaded, pos = _read_matrices(body, params)
    for p, val in zip(params, loaded):
        p[...] = val
    if not body[pos].startswith("adam"):
        raise FormatError("missing adam marker")
    has_adam = body[pos].split()[1] == "1"
    pos += 1
    if has_adam:
        step = int(body[pos].split()[1])
        pos += 1
        moments, used = _read_matrices(body[pos:], params + params)
        pos += used
        if adam is not None:
            adam.step = step
            for dst, src in zip(adam.m + adam.v, moments):
                dst[...] = src
    rest = "\n".join(body[pos:]).strip()
    return rest or None
