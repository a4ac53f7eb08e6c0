"""Initial/final data, the forward and backward solutions u and v, and the
normalization constant N.

The admissible data are unnormalized Gaussians exp(-|x-a|^2/(2 sigma)),
product or isotropic hat functions vanishing outside hypercubes/balls, and
the Dirac mass at the origin.  u solves the forward harmonic heat problem
with u(., 0) = N phi0, v the backward one with v(., T) = N psiT, and N is
fixed by  N^2 * double integral of phi0 g(., T, .) psiT = 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .kernel import mehler, mehler_cross
from .quadrature import gauss_hermite_rule, gauss_legendre_panels

# closed forms switch to the datum itself below this distance from the
# time boundary, where sinh-based expressions lose precision
_BOUNDARY_TIME = 1e-8

_GH_ORDER = 48
_GL_POINTS = 48
_HALF_RANGE = 12.0


class ClosedFormUnavailable(ValueError):
    """No closed form is defined for the requested data/operation."""


class ConsistencyError(RuntimeError):
    """Two evaluation paths that must agree disagreed beyond tolerance."""


# ---------------------------------------------------------------------------
# data families


@dataclass(frozen=True)
class Datum:
    """One admissible initial or final datum on R^d."""

    kind: str  # 'gaussian' | 'hat_product' | 'hat_isotropic' | 'dirac'
    d: int
    sigma: float = 0.0
    a: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("gaussian", "hat_product", "hat_isotropic", "dirac"):
            raise ValueError(f"unknown datum kind {self.kind!r}")
        if self.kind != "dirac":
            if self.sigma <= 0:
                raise ValueError("sigma must be positive")
            if len(self.a) != self.d:
                raise ValueError("center must match the dimension")

    @property
    def is_dirac(self) -> bool:
        return self.kind == "dirac"

    def evaluate(self, x) -> np.ndarray:
        """Pointwise datum value; the Dirac measure has no pointwise values."""
        if self.is_dirac:
            raise ValueError("dirac datum is a measure and cannot be evaluated pointwise")
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if pts.shape[1] != self.d:
            raise ValueError("point dimension mismatch")
        a = np.asarray(self.a)
        if self.kind == "gaussian":
            val = np.exp(-np.sum((pts - a) ** 2, axis=1) / (2.0 * self.sigma))
        elif self.kind == "hat_product":
            val = np.prod(np.maximum(1.0 - np.abs(pts - a) / self.sigma, 0.0), axis=1)
        else:
            val = np.maximum(1.0 - np.linalg.norm(pts - a, axis=1) / self.sigma, 0.0)
        return val if np.asarray(x).ndim > 1 else float(val[0])

    def mass(self) -> float:
        """Total integral of the datum over R^d (the Dirac mass is 1)."""
        if self.kind == "gaussian":
            return float((2.0 * np.pi * self.sigma) ** (0.5 * self.d))
        if self.kind == "hat_product":
            return float(self.sigma**self.d)
        if self.kind == "hat_isotropic":
            d = self.d
            surface = 2.0 * np.pi ** (0.5 * d) / np.math.gamma(0.5 * d) if d > 1 else 2.0
            return float(surface * self.sigma**d / (d * (d + 1)))
        return 1.0


def gaussian_datum(sigma: float, a, d: int | None = None) -> Datum:
    a = tuple(float(v) for v in np.atleast_1d(a))
    return Datum(kind="gaussian", d=d or len(a), sigma=float(sigma), a=a)


def hat_product_datum(sigma: float, a) -> Datum:
    a = tuple(float(v) for v in np.atleast_1d(a))
    return Datum(kind="hat_product", d=len(a), sigma=float(sigma), a=a)


def hat_isotropic_datum(sigma: float, a) -> Datum:
    a = tuple(float(v) for v in np.atleast_1d(a))
    return Datum(kind="hat_isotropic", d=len(a), sigma=float(sigma), a=a)


def dirac_datum(d: int) -> Datum:
    return Datum(kind="dirac", d=d)


# ---------------------------------------------------------------------------
# quadrature node builders for the data (shared with the process layer)


def _axis_nodes(datum: Datum, j: int, splits: Iterable[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    """1-D nodes/weights resolving axis j of a separable datum integral."""
    if datum.is_dirac:
        return np.zeros(1), np.ones(1)
    if datum.kind == "gaussian":
        lo = datum.a[j] - _HALF_RANGE * max(1.0, np.sqrt(datum.sigma))
        hi = datum.a[j] + _HALF_RANGE * max(1.0, np.sqrt(datum.sigma))
        edges = sorted({lo, hi, *(s for s in splits if lo < s < hi)})
    else:
        # hat support with a kink at the center
        lo, hi = datum.a[j] - datum.sigma, datum.a[j] + datum.sigma
        edges = sorted({lo, hi, datum.a[j], *(s for s in splits if lo < s < hi)})
    nodes, weights = [], []
    for a_, b_ in zip(edges[:-1], edges[1:]):
        panels = max(2, int(np.ceil((b_ - a_) / 2.0)))
        n, w = gauss_legendre_panels(a_, b_, panels, _GL_POINTS)
        nodes.append(n)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _is_separable(datum: Datum) -> bool:
    return datum.kind in ("gaussian", "hat_product", "dirac") or datum.d == 1


def _polar_nodes_for_datum(datum: Datum) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(points, weights, datum values) over the support of a planar
    isotropic hat, in polar coordinates around its center."""
    assert datum.kind == "hat_isotropic" and datum.d == 2
    r, wr = gauss_legendre_panels(0.0, datum.sigma, 6, 24)
    m = 48
    theta = 2.0 * np.pi * np.arange(m) / m
    pts = np.stack([
        (datum.a[0] + r[:, None] * np.cos(theta)).ravel(),
        (datum.a[1] + r[:, None] * np.sin(theta)).ravel(),
    ], axis=-1)
    weights = ((r * wr)[:, None] * np.full(m, 2.0 * np.pi / m)).ravel()
    vals = np.repeat(1.0 - r / datum.sigma, m)
    return pts, weights, vals


def datum_nodes(datum: Datum) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(points, weights, values) integrating the datum over R^d exactly
    enough for every pairing used here; Dirac contributes the single atom."""
    if datum.is_dirac:
        return np.zeros((1, datum.d)), np.ones(1), np.ones(1)
    if datum.kind == "hat_isotropic" and datum.d == 2:
        return _polar_nodes_for_datum(datum)
    if datum.kind == "hat_isotropic" and datum.d > 2:
        raise NotImplementedError("isotropic hat quadrature is implemented for d <= 2")
    axes = [_axis_nodes(datum, j) for j in range(datum.d)]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(pts.shape[0])
    for g in np.meshgrid(*[a[1] for a in axes], indexing="ij"):
        weights *= g.ravel()
    return pts, weights, datum.evaluate(pts) if pts.shape[0] > 1 else np.ones(1)


def kernel_bilinear_form(x_pts, x_w, t: float, y_pts, y_w, chunk: int = 2048) -> float:
    """sum_{i,j} w_i f_j g(x_i, t, y_j), streamed in row blocks."""
    total = 0.0
    for start in range(0, x_pts.shape[0], chunk):
        block = mehler_cross(x_pts[start:start + chunk], t, y_pts)
        total += float(x_w[start:start + chunk] @ block @ y_w)
    return total


# ---------------------------------------------------------------------------
# normalization


def _pair_integral_closed(d: int, T: float, phi0: Datum, psiT: Datum) -> float:
    """Analytic value of the double integral of phi0 g(., T, .) psiT."""
    S, C = np.sinh(T), np.cosh(T)
    if phi0.is_dirac and psiT.is_dirac:
        return float((2.0 * np.pi * S) ** (-0.5 * d))
    if phi0.is_dirac or psiT.is_dirac:
        g = psiT if phi0.is_dirac else phi0
        if g.kind != "gaussian":
            raise ClosedFormUnavailable("closed-form normalization needs Gaussian or Dirac data")
        denom = g.sigma * C + S
        a2 = float(np.sum(np.asarray(g.a) ** 2))
        return float((g.sigma / denom) ** (0.5 * d) * np.exp(-a2 * C / (2.0 * denom)))
    if phi0.kind != "gaussian" or psiT.kind != "gaussian":
        raise ClosedFormUnavailable("closed-form normalization needs Gaussian or Dirac data")
    # per-axis 2x2 Gaussian integral; the quadratic form couples x_j with y_j only
    m11 = C / S + 1.0 / phi0.sigma
    m22 = C / S + 1.0 / psiT.sigma
    det = m11 * m22 - 1.0 / S**2
    val = (2.0 * np.pi * S) ** (-0.5 * d) * (2.0 * np.pi / np.sqrt(det)) ** d
    for j in range(d):
        l1 = phi0.a[j] / phi0.sigma
        l2 = psiT.a[j] / psiT.sigma
        quad = (m22 * l1 * l1 + 2.0 * l1 * l2 / S + m11 * l2 * l2) / det
        val *= np.exp(0.5 * quad - phi0.a[j] ** 2 / (2.0 * phi0.sigma)
                      - psiT.a[j] ** 2 / (2.0 * psiT.sigma))
    return float(val)


def _pair_integral_quadrature(d: int, T: float, phi0: Datum, psiT: Datum) -> float:
    """Quadrature value of the same double integral.

    Separable pairs factorize into d two-dimensional integrals through the
    product structure of the Mehler kernel; planar isotropic hats use polar
    nodes and a streamed kernel bilinear form.
    """
    if _is_separable(phi0) and _is_separable(psiT):
        val = 1.0
        for j in range(d):
            if phi0.is_dirac:
                xn, xw = np.zeros(1), np.ones(1)
            else:
                xn, xw = _axis_nodes(phi0, j)
                xw = xw * _axis_datum_values(phi0, j, xn)
            if psiT.is_dirac:
                yn, yw = np.zeros(1), np.ones(1)
            else:
                yn, yw = _axis_nodes(psiT, j)
                yw = yw * _axis_datum_values(psiT, j, yn)
            val *= kernel_bilinear_form(xn[:, None], xw, T, yn[:, None], yw)
        return val
    x_pts, x_w, x_v = datum_nodes(phi0)
    y_pts, y_w, y_v = datum_nodes(psiT)
    return kernel_bilinear_form(x_pts, x_w * x_v, T, y_pts, y_w * y_v)


def _axis_datum_values(datum: Datum, j: int, x: np.ndarray) -> np.ndarray:
    if datum.kind == "gaussian":
        return np.exp(-((x - datum.a[j]) ** 2) / (2.0 * datum.sigma))
    return np.maximum(1.0 - np.abs(x - datum.a[j]) / datum.sigma, 0.0)


def normalization_constant(d: int, T: float, phi0: Datum, psiT: Datum,
                           method: str = "closed_form") -> float:
    """The constant N > 0 with N^2 * (phi0, g(., T, .) psiT) = 1.

    Closed forms: pi^(-d/4) e^(dT/4) for the unit-Gaussian pair,
    e^(dT/4) for Dirac against the unit Gaussian, (2 pi sinh T)^(d/4) for
    the Dirac pair; general Gaussian pairs evaluate the Gaussian integral
    analytically.  Hat data go through quadrature or the spectral identity.
    """
    if T <= 0:
        raise ValueError("horizon T must be positive")
    if method == "closed_form":
        integral = _pair_integral_closed(d, T, phi0, psiT)
    elif method == "quadrature":
        integral = _pair_integral_quadrature(d, T, phi0, psiT)
    elif method == "spectral":
        from .galerkin import spectral_pair_integral

        integral = spectral_pair_integral(d, T, phi0, psiT)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.isfinite(integral) or integral <= 0:
        raise ArithmeticError(f"normalization integral came out non-positive: {integral}")
    return float(integral ** -0.5)


# ---------------------------------------------------------------------------
# process specification


@dataclass(frozen=True)
class ProcessSpec:
    """Dimension, horizon, the (phi0, psiT) pair and the cached N."""

    d: int
    T: float
    phi0: Datum
    psiT: Datum
    normalization: float

    @property
    def case(self) -> str:
        """'stationary', 'pinned_start', 'loop' or 'general'."""
        unit = lambda g: g.kind == "gaussian" and g.sigma == 1.0 and not any(g.a)
        if self.phi0.is_dirac and self.psiT.is_dirac:
            return "loop"
        if self.phi0.is_dirac and unit(self.psiT):
            return "pinned_start"
        if unit(self.phi0) and unit(self.psiT):
            return "stationary"
        return "general"


def make_process_spec(d: int, T: float, phi0: Datum, psiT: Datum, check: bool = True) -> ProcessSpec:
    """Build a ProcessSpec, computing N once and (by default) cross-checking
    it against an independent evaluation path; disagreement beyond 1e-6
    relative raises ConsistencyError.
    """
    if phi0.d != d or psiT.d != d:
        raise ValueError("data dimension mismatch")
    try:
        norm = normalization_constant(d, T, phi0, psiT, method="closed_form")
        check_method = "quadrature"
    except ClosedFormUnavailable:
        norm = normalization_constant(d, T, phi0, psiT, method="quadrature")
        check_method = "spectral"
    if check:
        other = normalization_constant(d, T, phi0, psiT, method=check_method)
        if abs(other / norm - 1.0) > 1e-6:
            raise ConsistencyError(
                f"normalization paths disagree: {norm!r} vs {other!r} ({check_method})")
    return ProcessSpec(d=d, T=float(T), phi0=phi0, psiT=psiT, normalization=norm)


def spec_to_json(spec: ProcessSpec) -> str:
    def datum_doc(g: Datum):
        if g.is_dirac:
            return {"kind": "dirac"}
        return {"kind": g.kind, "sigma": g.sigma, "a": list(g.a)}

    return json.dumps({"d": spec.d, "T": spec.T,
                       "phi0": datum_doc(spec.phi0), "psiT": datum_doc(spec.psiT)})


def spec_from_json(doc: str, check: bool = True) -> ProcessSpec:
    """Parse a spec document; N is always recomputed, never read."""
    data = json.loads(doc)
    d = int(data["d"])

    def parse(obj) -> Datum:
        if obj["kind"] == "dirac":
            return dirac_datum(d)
        return Datum(kind=obj["kind"], d=d, sigma=float(obj["sigma"]),
                     a=tuple(float(v) for v in obj["a"]))

    return make_process_spec(d, float(data["T"]), parse(data["phi0"]), parse(data["psiT"]),
                             check=check)


# ---------------------------------------------------------------------------
# forward and backward solutions


def _gaussian_closed(datum: Datum, norm: float, x: np.ndarray, tau: float) -> np.ndarray:
    """Closed-form solution of the forward problem with Gaussian datum at
    elapsed time tau (tau = t for u, tau = T - t for v)."""
    if tau < _BOUNDARY_TIME:
        return norm * datum.evaluate(x)
    s, c = np.sinh(tau), np.cosh(tau)
    sig = datum.sigma
    a = np.asarray(datum.a)
    denom = sig * c + s
    shifted = sig * x + s * a
    expo = (-c * np.sum(x * x, axis=1) / (2.0 * s)
            + np.sum(shifted * shifted, axis=1) / (2.0 * sig * s * denom))
    pref = (sig / denom) ** (0.5 * datum.d) * np.exp(-np.sum(a * a) / (2.0 * sig))
    return norm * pref * np.exp(expo)


def _dirac_closed(d: int, norm: float, x: np.ndarray, tau: float) -> np.ndarray:
    if tau < _BOUNDARY_TIME:
        raise ValueError("Dirac data give a measure at the time boundary, not a function")
    return norm * mehler(x, tau, np.zeros((1, d)))


def _quadrature_solution(datum: Datum, norm: float, x: np.ndarray, tau: float) -> np.ndarray:
    if datum.is_dirac:
        return _dirac_closed(datum.d, norm, x, tau)
    if tau < _BOUNDARY_TIME:
        return norm * datum.evaluate(x)
    if _is_separable(datum):
        val = np.full(x.shape[0], norm)
        for j in range(datum.d):
            yn, yw = _axis_nodes(datum, j)
            kern = mehler_cross(x[:, j:j + 1], tau, yn[:, None])
            val *= kern @ (yw * _axis_datum_values(datum, j, yn))
        return val
    pts, w, v = datum_nodes(datum)
    return norm * (mehler_cross(x, tau, pts) @ (w * v))


def _spectral_solution(datum: Datum, norm: float, x: np.ndarray, tau: float, N: int) -> np.ndarray:
    from .galerkin import truncated_solution

    return truncated_solution(datum, norm, x, tau, N)


def _solution(datum: Datum, norm: float, x, tau: float, path: str, N: int) -> np.ndarray | float:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[1] != datum.d:
        raise ValueError("point dimension mismatch")
    if tau < 0:
        raise ValueError("time outside [0, T]")
    if path == "closed_form":
        if datum.kind == "gaussian":
            val = _gaussian_closed(datum, norm, pts, tau)
        elif datum.is_dirac:
            val = _dirac_closed(datum.d, norm, pts, tau)
        else:
            raise ClosedFormUnavailable("hat data admit no closed-form solution")
    elif path == "quadrature":
        val = _quadrature_solution(datum, norm, pts, tau)
    elif path == "spectral":
        val = _spectral_solution(datum, norm, pts, tau, N)
    else:
        raise ValueError(f"unknown evaluation path {path!r}")
    val = np.asarray(val, dtype=float).reshape(-1)
    return val if np.asarray(x).ndim > 1 else float(val[0])


def forward_solution(spec: ProcessSpec, x, t: float, path: str = "closed_form", N: int = 40):
    """u(x, t) for t in (0, T]; t = 0 is admitted for non-Dirac data where
    u(., 0) = N phi0 by continuity."""
    if not 0.0 <= t <= spec.T:
        raise ValueError("t outside [0, T]")
    return _solution(spec.phi0, spec.normalization, x, t, path, N)


def backward_solution(spec: ProcessSpec, x, t: float, path: str = "closed_form", N: int = 40):
    """v(x, t) for t in [0, T); mirrors the forward solution under
    t -> T - t with the final datum."""
    if not 0.0 <= t <= spec.T:
        raise ValueError("t outside [0, T]")
    return _solution(spec.psiT, spec.normalization, x, spec.T - t, path, N)


@dataclass(frozen=True)
class SolutionField:
    """One solution of the forward or backward problem on a fixed path."""

    spec: ProcessSpec
    direction: str  # 'forward' | 'backward'
    path: str = "closed_form"
    N: int = 40

    def __call__(self, x, t: float):
        if self.direction == "forward":
            return forward_solution(self.spec, x, t, self.path, self.N)
        if self.direction == "backward":
            return backward_solution(self.spec, x, t, self.path, self.N)
        raise ValueError(f"unknown direction {self.direction!r}")


def pde_residual(field: SolutionField, x, t: float, h: float = 1e-4) -> float:
    """Central-difference residual of the governing equation at (x, t):
    d/dt u - 1/2 Lap u + |x|^2/2 u (time-reversed sign for the backward
    field).  Test instrumentation; O(h^2) for exact solutions.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    pt = np.asarray(x, dtype=float).reshape(-1)
    sign = 1.0 if field.direction == "forward" else -1.0
    dt = (field(pt, t + h) - field(pt, t - h)) / (2.0 * h)
    f0 = field(pt, t)
    lap = 0.0
    for j in range(pt.size):
        e = np.zeros_like(pt)
        e[j] = h
        lap += (field(pt + e, t) - 2.0 * f0 + field(pt - e, t)) / h**2
    return abs(sign * dt - 0.5 * lap + 0.5 * float(pt @ pt) * f0)


def verify_normalization(spec: ProcessSpec, tol: float = 1e-8) -> float:
    """Recompute the normalization integral by quadrature and return
    N^2 * integral; raises ConsistencyError when it misses 1 beyond 1e-6."""
    val = spec.normalization**2 * _pair_integral_quadrature(spec.d, spec.T, spec.phi0, spec.psiT)
    if abs(val - 1.0) > max(tol, 1e-6):
        raise ConsistencyError(f"normalization re-verification returned {val!r}")
    return val


def solution_scale(spec: ProcessSpec, t: float) -> float:
    """Gauss-Hermite scale resolving u(., t) v(., t): the slowest Gaussian
    decay rate of the product over [0, T], derived from the closed forms."""

    def rate(g: Datum, tau: float) -> float:
        if g.is_dirac:
            return 0.5 / np.tanh(max(tau, 1e-3))
        if g.kind == "gaussian":
            tau = max(tau, 1e-3)
            s, c = np.sinh(tau), np.cosh(tau)
            return (g.sigma * s + c) / (2.0 * (g.sigma * c + s))
        return 0.5  # hat data decay at least like the kernel itself

    total = rate(spec.phi0, t) + rate(spec.psiT, spec.T - t)
    return float(1.2 / np.sqrt(total))
