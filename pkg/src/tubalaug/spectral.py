"""Radix-2 FFT, DFT-matrix fallback, and tube-wise transforms.

Conventions: the forward transform is unnormalized,
x_hat[k] = sum_j x[j] * omega^(jk) with omega = exp(-2*pi*i/n); the
inverse carries the 1/n factor, so ifft(fft(x)) == x.  All transforms act
along the last axis, so a single call handles every tube of a tensor.
"""

from __future__ import annotations

import numpy as np

from .errors import SpectrumError
from .tensor3 import as_tensor3

__all__ = ["fft", "ifft", "fft_tubes", "ifft_tubes", "dft_matrix"]


def dft_matrix(n: int) -> np.ndarray:
    """Unnormalized n x n DFT matrix, M[j, k] = omega^(jk)."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n)


def _fft_radix2(x: np.ndarray) -> np.ndarray:
    # recursive even/odd split; x has power-of-two length on the last axis
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    if n == 2:  # unrolled bottom of the recursion
        return np.stack([x[..., 0] + x[..., 1], x[..., 0] - x[..., 1]], axis=-1)
    even = _fft_radix2(x[..., 0::2])
    odd = _fft_radix2(x[..., 1::2])
    d = np.exp(-2j * np.pi * np.arange(n // 2) / n)
    twiddled = d * odd
    return np.concatenate([even + twiddled, even - twiddled], axis=-1)


def fft(x) -> np.ndarray:
    """Forward DFT along the last axis.

    Power-of-two lengths run the recursive radix-2 algorithm; other
    lengths fall back to a direct DFT-matrix multiply (fine for the short
    tubes used here).
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n < 1:
        raise ValueError("empty transform")
    if n & (n - 1) == 0:
        return _fft_radix2(x)
    return x @ dft_matrix(n)


def ifft(x) -> np.ndarray:
    """Inverse DFT along the last axis: conj(fft(conj(x))) / n."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    return np.conj(fft(np.conj(x))) / n


def fft_tubes(t) -> np.ndarray:
    """Forward transform of every tube t[i, j, :] of a real tensor."""
    return fft(as_tensor3(t))


def ifft_tubes(t, tol: float = 1e-8) -> np.ndarray:
    """Inverse tube transform, asserting the result is real.

    Inputs are expected to be spectra of real data; imaginary residue
    above tol (scaled by the spectrum's magnitude) means the spectrum was
    corrupted and raises SpectrumError.
    """
    t = np.asarray(t, dtype=np.complex128)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order spectrum, got ndim={t.ndim}")
    out = ifft(t)
    scale = max(1.0, float(np.max(np.abs(out))) if out.size else 1.0)
    residue = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if residue > tol * scale:
        raise SpectrumError(
            f"imaginary residue {residue:.3e} exceeds {tol * scale:.3e}"
        )
    return out.real.copy()
