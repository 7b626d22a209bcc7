"""Built-in verification routines shared by the CLI selftest/bench
subcommands and the acceptance suite: T-product route equivalence,
gradient checks against finite differences, and timing smoke checks."""

from __future__ import annotations

import time

import numpy as np

from .augment import TAdafParams, augment_backward, augment_forward, combine
from .network import (Model, batch_to_images, images_to_batch, model_backward,
                      model_forward, softmax_xent)
from .tprod import tprod_circsum, tprod_fft, tprod_naive

__all__ = [
    "tprod_equivalence_error",
    "composed_loss_and_grads",
    "gradient_check",
    "tprod_timing",
]


def tprod_equivalence_error(cases: int = 100, seed: int = 0,
                            max_dims=(6, 6, 6, 8)) -> float:
    """Max absolute disagreement between the three T-product routes."""
    rng = np.random.default_rng(seed)
    mmax, nmax, smax, pmax = max_dims
    worst = 0.0
    for _ in range(cases):
        m, n, s, p = (int(rng.integers(1, hi + 1))
                      for hi in (mmax, nmax, smax, pmax))
        a = rng.uniform(-1, 1, size=(m, n, p))
        b = rng.uniform(-1, 1, size=(n, s, p))
        ref = tprod_naive(a, b)
        worst = max(worst,
                    float(np.max(np.abs(tprod_circsum(a, b) - ref))),
                    float(np.max(np.abs(tprod_fft(a, b) - ref))))
    return worst


def composed_loss_and_grads(img, label, params: TAdafParams, model: Model):
    """Loss of the full composed pipeline and every gradient in it.

    Pipeline: augment -> model per branch -> combine logits -> softmax
    cross-entropy.  Returns (loss, dW1, dW2, dImg, model param grads).
    """
    branches, cache = augment_forward(img, params)
    logits = []
    caches = []
    for br in branches:
        lg, c = model_forward(br, model)
        logits.append(lg)
        caches.append(c)
    combined = combine(logits, params.weights)
    loss, dcomb = softmax_xent(combined, label)

    w = params.weights
    model_grads = None
    branch_grads = []
    for wi, c in zip(w, caches):
        grads, dimg = model_backward(wi * dcomb, c, model)
        branch_grads.append(dimg)
        if model_grads is None:
            model_grads = grads
        else:
            model_grads = [a + b for a, b in zip(model_grads, grads)]
    dw1, dw2, dimg = augment_backward(branch_grads, cache, params)
    return loss, dw1, dw2, dimg, model_grads


def gradient_check(img, label, params: TAdafParams, model: Model,
                   eps: float = 1e-4):
    """Max relative error of every analytic gradient vs central differences.

    Covers each coordinate of W1, W2, the input image, and all model
    parameters of the composed loss.
    """
    def loss_only():
        loss, *_ = composed_loss_and_grads(img, label, params, model)
        return loss

    _, dw1, dw2, dimg, model_grads = composed_loss_and_grads(
        img, label, params, model)

    def check(array, analytic):
        worst = 0.0
        flat = array.reshape(-1)
        aflat = analytic.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss_only()
            flat[i] = orig - eps
            lo = loss_only()
            flat[i] = orig
            fd = (hi - lo) / (2 * eps)
            scale = max(abs(fd), abs(aflat[i]), 1e-8)
            worst = max(worst, abs(fd - aflat[i]) / scale)
        return worst

    worst = max(check(params.w1, dw1), check(params.w2, dw2))
    worst = max(worst, check(img, dimg))
    for p, g in zip(model.params(), model_grads):
        worst = max(worst, check(p, g))
    return worst


def _time_route(fn, a, b, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(a, b)
        best = min(best, time.perf_counter() - t0)
    return best


def tprod_timing(m: int = 16, n: int = 16, s: int = 16, seed: int = 0):
    """Runtime ratios p=64 / p=32 for the fast and definitional routes."""
    rng = np.random.default_rng(seed)
    out = {}
    for name, fn in (("fft", tprod_fft), ("naive", tprod_naive)):
        times = {}
        for p in (32, 64):
            a = rng.uniform(-1, 1, size=(m, n, p))
            b = rng.uniform(-1, 1, size=(n, s, p))
            times[p] = _time_route(fn, a, b)
        out[name] = times[64] / times[32]
    return out
