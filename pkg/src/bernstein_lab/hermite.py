"""Hermite polynomials, orthonormal Hermite functions and the tensor
eigenbasis of the d-dimensional quantum harmonic oscillator.

The functions h_n are normalized so that (h_m, h_n)_{L^2(R)} = delta_{mn};
the tensor products h_n = prod_j h_{n_j} are eigenfunctions of
-1/2 Laplacian + |x|^2/2 with eigenvalue E_n = sum_j n_j + d/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Uniform bound |h_n(x)| <= CRAMER_CHARLIER_K * pi**-0.25, all n and x.
CRAMER_CHARLIER_K = 1.086435

# Largest supported 1-D order; well beyond any truncation used here.
MAX_ORDER = 512

_PI_QUARTER = np.pi ** -0.25


def _check_order(n: int) -> int:
    n = int(n)
    if n < 0:
        raise ValueError(f"order must be nonnegative, got {n}")
    if n > MAX_ORDER:
        raise ValueError(f"order {n} out of range (max {MAX_ORDER})")
    return n


def as_multi_index(index: Sequence[int]) -> tuple[int, ...]:
    """Validate a multi-index n = (n_1, ..., n_d), d >= 1, entries >= 0."""
    idx = tuple(int(k) for k in index)
    if len(idx) == 0:
        raise ValueError("multi-index must have at least one entry")
    for k in idx:
        if k < 0:
            raise ValueError(f"multi-index entries must be >= 0, got {idx}")
        _check_order(k)
    return idx


def hermite_polynomial(n: int, x):
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence.

    H_0 = 1, H_1 = 2x, H_{n+1} = 2x H_n - 2n H_{n-1}.  Raises OverflowError
    when the recurrence leaves double range (large n * x^2).
    """
    n = _check_order(n)
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        out = h_prev
    else:
        h_cur = 2.0 * x
        for k in range(1, n):
            h_prev, h_cur = h_cur, 2.0 * x * h_cur - 2.0 * k * h_prev
        out = h_cur
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"H_{n} overflows double precision at |x| ~ {np.max(np.abs(x)):g}")
    return out if out.ndim else float(out)


def hermite_function(n: int, x):
    """Orthonormal Hermite function h_n(x) = (pi^(1/2) 2^n n!)^(-1/2) e^(-x^2/2) H_n(x).

    Evaluated by the normalized recurrence
    h_{n+1} = x sqrt(2/(n+1)) h_n - sqrt(n/(n+1)) h_{n-1},
    which never forms 2^n n! and stays bounded for all supported orders.
    """
    n = _check_order(n)
    x = np.asarray(x, dtype=float)
    h0 = _PI_QUARTER * np.exp(-0.5 * x * x)
    if n == 0:
        return h0 if h0.ndim else float(h0)
    h1 = np.sqrt(2.0) * x * h0
    h_prev, h_cur = h0, h1
    for k in range(1, n):
        h_prev, h_cur = h_cur, x * np.sqrt(2.0 / (k + 1)) * h_cur - np.sqrt(k / (k + 1.0)) * h_prev
    return h_cur if h_cur.ndim else float(h_cur)


def hermite_basis(nmax: int, x) -> np.ndarray:
    """Stack h_0(x), ..., h_{nmax-1}(x) along a new leading axis.

    One recurrence sweep shared by all orders; the workhorse behind the
    spectral kernel series and the Galerkin sums.
    """
    _check_order(nmax - 1)
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((nmax,) + x.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * x * x)
    if nmax > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(1, nmax - 1):
        out[k + 1] = x * np.sqrt(2.0 / (k + 1)) * out[k] - np.sqrt(k / (k + 1.0)) * out[k - 1]
    return out


def tensor_hermite(index: Sequence[int], x) -> float:
    """Tensor eigenfunction h_n(x) = prod_j h_{n_j}(x_j) for x in R^d."""
    idx = as_multi_index(index)
    pt = np.atleast_2d(np.asarray(x, dtype=float))
    if pt.shape[-1] != len(idx):
        raise ValueError(f"point dimension {pt.shape[-1]} != index dimension {len(idx)}")
    val = np.ones(pt.shape[0])
    for j, nj in enumerate(idx):
        val *= hermite_function(nj, pt[:, j])
    return val if np.asarray(x).ndim > 1 else float(val[0])


def energy(index: Sequence[int]) -> float:
    """Oscillator energy E_n = sum_j n_j + d/2."""
    idx = as_multi_index(index)
    return float(sum(idx)) + len(idx) / 2.0


@dataclass(frozen=True)
class SpectralData:
    """One eigenpair handle: multi-index plus its energy."""

    index: tuple[int, ...]
    energy: float

    @classmethod
    def from_index(cls, index: Sequence[int]) -> "SpectralData":
        idx = as_multi_index(index)
        return cls(index=idx, energy=energy(idx))


def enumerate_indices(N: int, d: int) -> list[tuple[int, ...]]:
    """Lexicographic enumeration of {0, ..., N-1}^d used by all truncations."""
    if N < 1 or d < 1:
        raise ValueError("need N >= 1 and d >= 1")
    idx = np.indices((N,) * d).reshape(d, -1).T
    return [tuple(int(k) for k in row) for row in idx]


def eigen_residual(index: Sequence[int], x, h: float = 1e-4) -> float:
    """|(-1/2 Lap + |x|^2/2) h_n(x) - E_n h_n(x)| with a central-difference
    Laplacian; O(h^2) for the exact eigenfunctions.  Test instrumentation.
    """
    idx = as_multi_index(index)
    if h <= 0:
        raise ValueError("h must be > 0")
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.size != len(idx):
        raise ValueError("point dimension mismatch")
    lap = 0.0
    f0 = tensor_hermite(idx, pt)
    for j in range(len(idx)):
        e = np.zeros_like(pt)
        e[j] = h
        lap += (tensor_hermite(idx, pt + e) - 2.0 * f0 + tensor_hermite(idx, pt - e)) / h**2
    ham = -0.5 * lap + 0.5 * float(pt @ pt) * f0
    return abs(ham - energy(idx) * f0)
