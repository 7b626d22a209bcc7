"""Dense third-order tensor primitives: slicing, permutation, fold/unfold/bcirc.

A third-order tensor is a float64 ndarray of shape (m, n, p) indexed
[row, col, slice].  The canonical serialized layout is frontal-slice-major
(slice k written as an m x n row-major block).  All operations return
copies; nothing aliases its input.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError, ShapeError

__all__ = [
    "as_tensor3",
    "frontal_slice",
    "permute",
    "unfold",
    "fold",
    "bcirc",
    "bcirc_inv",
    "hadamard",
    "dump_tensor",
    "load_tensor",
    "dump_matrix",
    "load_matrix",
]


def as_tensor3(t) -> np.ndarray:
    """Validate and return a (m, n, p) float array."""
    a = np.asarray(t, dtype=np.float64)
    if a.ndim != 3:
        raise ShapeError(f"expected a third-order tensor, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("tensor contains non-finite entries")
    return a


def frontal_slice(t, k: int) -> np.ndarray:
    """Frontal slice A^(k) as an m x n matrix.  k is 1-based."""
    t = as_tensor3(t)
    p = t.shape[2]
    if not 1 <= k <= p:
        raise IndexError(f"slice index {k} out of range 1..{p}")
    return t[:, :, k - 1].copy()


def permute(t, axes: tuple) -> np.ndarray:
    """Reorder tensor axes.  axes is a 1-based permutation of (1, 2, 3)."""
    t = as_tensor3(t)
    if sorted(axes) != [1, 2, 3]:
        raise ValueError(f"axes {axes!r} is not a permutation of (1, 2, 3)")
    return np.transpose(t, [a - 1 for a in axes]).copy()


def unfold(t) -> np.ndarray:
    """Stack frontal slices vertically into an (m*p) x n matrix."""
    t = as_tensor3(t)
    m, n, p = t.shape
    # slice k occupies rows k*m .. (k+1)*m
    return np.transpose(t, (2, 0, 1)).reshape(m * p, n)


def fold(mat, p: int) -> np.ndarray:
    """Inverse of unfold: reshape an (m*p) x n matrix into an m x n x p tensor."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ShapeError("fold expects a matrix")
    rows, n = mat.shape
    if p < 1 or rows % p != 0:
        raise ShapeError(f"matrix with {rows} rows cannot fold into depth {p}")
    m = rows // p
    return np.transpose(mat.reshape(p, m, n), (1, 2, 0)).copy()


def bcirc(t) -> np.ndarray:
    """Block-circulant matrix of t: block (r, c) is slice ((r - c) mod p) + 1."""
    t = as_tensor3(t)
    m, n, p = t.shape
    out = np.empty((m * p, n * p), dtype=np.float64)
    for r in range(p):
        for c in range(p):
            out[r * m:(r + 1) * m, c * n:(c + 1) * n] = t[:, :, (r - c) % p]
    return out


def bcirc_inv(mat, dims: tuple) -> np.ndarray:
    """Recover a tensor from its block-circulant matrix (first block column)."""
    mat = np.asarray(mat, dtype=np.float64)
    m, n, p = dims
    if mat.shape != (m * p, n * p):
        raise ShapeError(
            f"matrix shape {mat.shape} does not match dims {dims}"
        )
    return fold(mat[:, :n], p)


def hadamard(a, b) -> np.ndarray:
    """Element-wise product of two same-shaped tensors."""
    a, b = as_tensor3(a), as_tensor3(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


# ---------------------------------------------------------------------------
# Debug dump format: dims header, then each frontal slice as m rows of n
# values with 17 significant digits.  Used for golden files and checkpoints.

def dump_matrix(mat) -> str:
    mat = np.asarray(mat, dtype=np.float64)
    lines = [f"{mat.shape[0]} {mat.shape[1]}"]
    for row in mat:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def load_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    try:
        rows, cols = (int(v) for v in lines[0].split())
        data = [[float(v) for v in ln.split()] for ln in lines[1:]]
    except (ValueError, IndexError) as exc:
        raise FormatError(f"bad matrix dump: {exc}") from exc
    mat = np.array(data, dtype=np.float64)
    if mat.shape != (rows, cols):
        raise FormatError(f"matrix dump header {rows}x{cols} != body {mat.shape}")
    return mat


def dump_tensor(t) -> str:
    t = as_tensor3(t)
    m, n, p = t.shape
    lines = [f"{m} {n} {p}"]
    for k in range(p):
        for row in t[:, :, k]:
            lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def load_tensor(text: str) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    try:
        m, n, p = (int(v) for v in lines[0].split())
        vals = [[float(v) for v in ln.split()] for ln in lines[1:]]
    except (ValueError, IndexError) as exc:
        raise FormatError(f"bad tensor dump: {exc}") from exc
    body = np.array(vals, dtype=np.float64)
    if body.shape != (m * p, n):
        raise FormatError(f"tensor dump header {(m, n, p)} != body {body.shape}")
    return fold(body, p)
