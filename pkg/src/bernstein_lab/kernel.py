"""Green's function of the harmonic forward-backward heat system.

The closed form is Mehler's kernel

    g(x, t, y) = (2 pi sinh t)^(-d/2)
                 * exp[-(cosh t (|x|^2 + |y|^2) - 2 (x, y)) / (2 sinh t)],

equal to the Hermite eigenfunction series sum_n e^{-t E_n} h_n(x) h_n(y).
Truncating the series at per-axis order N gives the Galerkin kernel g_N,
whose uniform error carries the exact geometric tail bound below.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hermite import CRAMER_CHARLIER_K, hermite_basis
from .quadrature import QuadratureRule, full_space, gauss_hermite_rule, integrate

# Below this time the kernel prefactor overflows; the Dirac-data limit
# t -> 0 is handled analytically by the model layer, never numerically.
MIN_TIME = 1e-12


class TimeUnderflowError(ValueError):
    """Requested kernel evaluation at t too small for double precision."""


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    return pts[None, :] if pts.ndim == 1 else pts


def _check_time(t: float) -> float:
    t = float(t)
    if t <= 0:
        raise ValueError(f"kernel time must be positive, got {t}")
    if t < MIN_TIME:
        raise TimeUnderflowError(f"t = {t} below the sinh underflow guard {MIN_TIME}")
    return t


def mehler(x, t: float, y):
    """Mehler kernel g(x, t, y); x, y of shape (d,) or (n, d)."""
    t = _check_time(t)
    xp, yp = _as_points(x), _as_points(y)
    if xp.shape[-1] != yp.shape[-1]:
        raise ValueError("x and y must share a dimension")
    d = xp.shape[-1]
    s, c = np.sinh(t), np.cosh(t)
    quad = c * (np.sum(xp * xp, axis=-1) + np.sum(yp * yp, axis=-1)) - 2.0 * np.sum(xp * yp, axis=-1)
    val = (2.0 * np.pi * s) ** (-0.5 * d) * np.exp(-quad / (2.0 * s))
    scalar = np.asarray(x).ndim == 1 and np.asarray(y).ndim == 1
    return float(val[0]) if scalar else val


def mehler_cross(x, t: float, y) -> np.ndarray:
    """Kernel matrix g(x_i, t, y_j) for node batches x (n, d), y (m, d)."""
    t = _check_time(t)
    xp, yp = _as_points(x), _as_points(y)
    d = xp.shape[-1]
    s, c = np.sinh(t), np.cosh(t)
    quad = c * (np.sum(xp * xp, axis=1)[:, None] + np.sum(yp * yp, axis=1)[None, :]) - 2.0 * (xp @ yp.T)
    return (2.0 * np.pi * s) ** (-0.5 * d) * np.exp(-quad / (2.0 * s))


def spectral_series(x, t: float, y, N: int):
    """Galerkin kernel g_N(x, t, y) = sum over n in {0..N-1}^d of
    e^{-t E_n} h_n(x) h_n(y).

    The box index set factorizes, so the tensor sum is evaluated as a
    product of d one-dimensional partial sums.
    """
    t = _check_time(t)
    if N < 1:
        raise ValueError("truncation N must be >= 1")
    xp, yp = _as_points(x), _as_points(y)
    if xp.shape != yp.shape:
        xp, yp = np.broadcast_arrays(xp, yp)
    d = xp.shape[-1]
    decay = np.exp(-t * (np.arange(N) + 0.5))
    val = np.ones(xp.shape[0])
    for j in range(d):
        bx = hermite_basis(N, xp[:, j])
        by = hermite_basis(N, yp[:, j])
        val *= np.einsum("k,kn,kn->n", decay, bx, by)
    scalar = np.asarray(x).ndim == 1 and np.asarray(y).ndim == 1
    return float(val[0]) if scalar else val


def series_tail_bound(t: float, d: int, N: int) -> float:
    """Uniform bound on |g - g_N|, valid for all x, y.

    Every summand is bounded via |h_n(x) h_n(y)| <= k^{2d} pi^{-d/2} and the
    remaining geometric series over indices with max_j n_j >= N is summed
    exactly:

        k^{2d} pi^{-d/2} e^{-td/2} (1-e^{-t})^{-d} [1 - (1 - e^{-tN})^d].
    """
    t = float(t)
    if t <= 0:
        raise ValueError("t must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    q = np.exp(-t)
    full = (1.0 - q) ** (-d)
    covered = (1.0 - q**N) ** d
    return float(CRAMER_CHARLIER_K ** (2 * d) * np.pi ** (-0.5 * d) * np.exp(-0.5 * t * d)
                 * full * (1.0 - covered))


def semigroup_residual(x, y, s: float, t: float, rule: QuadratureRule | None = None) -> float:
    """|integral of g(x,t,z) g(z,s,y) dz  -  g(x,t+s,y)|, by quadrature.

    Chapman-Kolmogorov instrumentation; s, t must both be positive.
    """
    s, t = _check_time(s), _check_time(t)
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    d = xv.size
    if rule is None:
        rule = gauss_hermite_rule(d, 64)
    if rule.d != d:
        raise ValueError("rule dimension mismatch")

    def integrand(z):
        return mehler(np.broadcast_to(xv, z.shape), t, z) * mehler(z, s, np.broadcast_to(yv, z.shape))

    composed, _ = integrate(integrand, full_space(d), rule)
    return abs(composed - mehler(xv, t + s, yv))


@dataclass(frozen=True)
class PotentialHypothesis:
    """Admissibility flags for a user-supplied potential: continuous,
    bounded below (by the given finite constant) and confining."""

    continuous: bool
    bounded_below: float
    confining: bool

    def admissible(self) -> bool:
        return self.continuous and self.confining and np.isfinite(self.bounded_below)


@dataclass(frozen=True)
class GreenFunction:
    """Evaluatable Green's function over the horizon [0, T].

    kind 'mehler_closed_form' evaluates the closed form, 'spectral_series'
    the Hermite series truncated at N, and 'user_eigendata' a finite
    eigen-expansion supplied by the caller (energies must make
    sum_n e^{-t E_n} finite; checked here only through the hypothesis
    flags and the finiteness of the supplied table).
    """

    kind: str
    d: int
    T: float
    N: int = 0
    energies: tuple[float, ...] = ()
    eigenfunctions: tuple[Callable, ...] = ()

    @classmethod
    def mehler_closed_form(cls, d: int, T: float) -> "GreenFunction":
        return cls(kind="mehler_closed_form", d=d, T=float(T))

    @classmethod
    def hermite_series(cls, d: int, T: float, N: int) -> "GreenFunction":
        if N < 1:
            raise ValueError("truncation N must be >= 1")
        return cls(kind="spectral_series", d=d, T=float(T), N=N)

    @classmethod
    def from_eigendata(cls, energies: Sequence[float], eigenfunctions: Sequence[Callable],
                       hypothesis: PotentialHypothesis, d: int, T: float) -> "GreenFunction":
        if not hypothesis.admissible():
            raise ValueError("potential hypothesis not satisfied; eigendata rejected")
        if len(energies) != len(eigenfunctions) or len(energies) == 0:
            raise ValueError("need matching, nonempty energies and eigenfunctions")
        if not all(np.isfinite(e) for e in energies):
            raise ValueError("energies must be finite")
        return cls(kind="user_eigendata", d=d, T=float(T),
                   energies=tuple(float(e) for e in energies),
                   eigenfunctions=tuple(eigenfunctions))

    def __call__(self, x, t: float, y):
        t = _check_time(t)
        if t > self.T:
            raise ValueError(f"t = {t} beyond horizon T = {self.T}")
        if self.kind == "mehler_closed_form":
            return mehler(x, t, y)
        if self.kind == "spectral_series":
            return spectral_series(x, t, y, self.N)
        xp, yp = _as_points(x), _as_points(y)
        val = 0.0
        for e_n, f_n in zip(self.energies, self.eigenfunctions):
            val = val + np.exp(-t * e_n) * np.asarray(f_n(xp)) * np.asarray(f_n(yp))
        scalar = np.asarray(x).ndim == 1 and np.asarray(y).ndim == 1
        return float(np.asarray(val).reshape(-1)[0]) if scalar else val
