"""Dense/sparse vector primitives and the seeded counter-based PRNG.

All arithmetic is 64-bit floating point.  Parameter vectors are plain 1-D
float64 numpy arrays; sparse gradient samples are index/value pairs with
strictly increasing indices.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class SparseGrad(NamedTuple):
    """A sparse gradient observation.

    ``indices`` are 0-based coordinates, strictly increasing, all < ``dim``;
    ``values`` holds the matching nonzero (or explicitly zero) entries.
    """

    indices: np.ndarray
    values: np.ndarray
    dim: int


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator over the Philox 4x64 counter-based bit generator.

    Philox is counter-based with fixed, documented round constants, so the
    stream for a given seed is identical on every platform and independent
    of any parallel scheduling of other runs.
    """
    return np.random.Generator(np.random.Philox(seed))


def as_vector(values, dim: int | None = None) -> np.ndarray:
    """Coerce to a float64 1-D array, optionally checking its length."""
    x = np.ascontiguousarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"expected length {dim}, got {x.shape[0]}")
    return x


def sparse_grad(indices, values, dim: int) -> SparseGrad:
    """Validated sparse-sample constructor (indices sorted, unique, < dim)."""
    idx = np.ascontiguousarray(indices, dtype=np.int64)
    val = np.ascontiguousarray(values, dtype=np.float64)
    if idx.shape != val.shape or idx.ndim != 1:
        raise ValueError("indices and values must be 1-D and the same length")
    if idx.size and (np.any(np.diff(idx) <= 0)):
        raise ValueError("sparse indices must be strictly increasing")
    if idx.size and (idx[0] < 0 or idx[-1] >= dim):
        raise ValueError(f"sparse indices must lie in [0, {dim})")
    return SparseGrad(idx, val, dim)


def to_dense(g: SparseGrad | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Densify a gradient sample. Dense inputs pass through (validated)."""
    if isinstance(g, SparseGrad):
        out = np.zeros(g.dim, dtype=np.float64)
        out[g.indices] = g.values
        return out
    return as_vector(g, dim)


def from_dense(x: np.ndarray) -> SparseGrad:
    """Sparsify a dense vector, dropping exact zeros."""
    x = as_vector(x)
    idx = np.flatnonzero(x)
    return SparseGrad(idx.astype(np.int64), x[idx].copy(), x.shape[0])


def grad_inf_norm(g: SparseGrad | np.ndarray) -> float:
    if isinstance(g, SparseGrad):
        return float(np.max(np.abs(g.values))) if g.values.size else 0.0
    return float(np.max(np.abs(g))) if np.asarray(g).size else 0.0


def axpy(a: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return ``a * x + y`` elementwise."""
    x = as_vector(x)
    y = as_vector(y)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if not np.isfinite(a):
        raise ValueError("scalar coefficient must be finite")
    return a * x + y


def hadamard_scale(num: np.ndarray, denom: np.ndarray, eps: float) -> np.ndarray:
    """Elementwise ``num / (cbrt(denom) + eps)`` with the real cube root.

    ``denom`` must be elementwise >= 0 and ``eps`` >= 0; a zero divisor
    (``denom[d] == 0`` with ``eps == 0``) raises ZeroDivisionError.
    """
    num = as_vector(num)
    denom = as_vector(denom)
    if num.shape[0] != denom.shape[0]:
        raise ValueError(f"length mismatch: {num.shape[0]} vs {denom.shape[0]}")
    if eps < 0.0:
        raise ValueError("eps must be >= 0")
    if np.any(denom < 0.0):
        raise ValueError("denominator entries must be >= 0")
    if eps == 0.0 and np.any(denom == 0.0):
        raise ZeroDivisionError("zero denominator entry with eps == 0")
    return num / (np.cbrt(denom) + eps)


def norms(x: np.ndarray) -> tuple[float, float]:
    """Return ``(l2, linf)`` norms of a finite vector."""
    x = as_vector(x)
    if x.size == 0:
        return 0.0, 0.0
    return float(np.sqrt(np.sum(x * x))), float(np.max(np.abs(x)))


def weighted_inv_sq_norm(g: np.ndarray, a: np.ndarray) -> float:
    """Return ``sum_d g_d^2 / a_d`` for elementwise positive ``a``."""
    g = as_vector(g)
    a = as_vector(a)
    if g.shape[0] != a.shape[0]:
        raise ValueError(f"length mismatch: {g.shape[0]} vs {a.shape[0]}")
    if np.any(a <= 0.0):
        raise ValueError("scaling entries must be > 0")
    return float(np.sum(g * g / a))
