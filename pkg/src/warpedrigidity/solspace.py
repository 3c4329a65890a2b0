"""Solution spaces of ``Hess w = w q``.

Membership residuals, injectivity of the evaluation map ``w -> (w(p), grad w(p))``,
the zero-set check, the mu-bar pairing, and the complete classification of
the one-dimensional problems ``w'' = -tau w`` on the line, circle, half-line
and interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.optimize import bisect

from . import hill
from .errors import DegenerateSolutionError, PreconditionError
from .geomkit import DEFAULT_STEP, MetricChart, ScalarField, covariant_hessian, gradient_vector

RANK_TOL = 1e-8
INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class QuadraticFormField:
    q: Callable[[np.ndarray], np.ndarray]
    metric: MetricChart

    def __call__(self, p) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        m = np.asarray(self.q(p), dtype=float).reshape(self.metric.dim, self.metric.dim)
        return 0.5 * (m + m.T)

    def operator(self, p) -> np.ndarray:
        """``Q = g^{-1} q``."""
        return self.metric.inverse(p) @ self(p)

    def trace(self, p) -> float:
        return float(np.trace(self.operator(p)))

    @classmethod
    def multiple_of_metric(cls, metric: MetricChart, factor) -> QuadraticFormField:
        """``q = factor * g`` with ``factor`` constant or a function of the point."""
        if callable(factor):
            return cls(lambda p: factor(p) * metric.metric(p), metric)
        c = float(factor)
        return cls(lambda p: c * metric.metric(p), metric)


def _kappa_at(kappa, p) -> float:
    if kappa is None:
        raise PreconditionError("mu-bar needs kappa")
    return float(kappa(p)) if callable(kappa) else float(kappa)


def mu_bilinear(metric: MetricChart, kappa, f1: ScalarField, f2: ScalarField, p, h: float = DEFAULT_STEP) -> float:
    """``kappa f1 f2 + g(grad f1, grad f2)`` at ``p``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    d1 = f1.gradient(p, h)
    d2 = f2.gradient(p, h)
    return _kappa_at(kappa, p) * f1(p) * f2(p) + float(d1 @ metric.inverse(p) @ d2)


def mu_gram(metric: MetricChart, kappa, basis: Sequence[ScalarField], p, h: float = DEFAULT_STEP) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    vals = np.array([b(p) for b in basis])
    grads = np.array([b.gradient(p, h) for b in basis])
    return _kappa_at(kappa, p) * np.outer(vals, vals) + grads @ metric.inverse(p) @ grads.T


def numerical_rank(m: np.ndarray, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(np.atleast_2d(m), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


@dataclass(frozen=True)
class SolutionSpace:
    manifold: MetricChart
    q: QuadraticFormField
    basis: tuple[ScalarField, ...]
    boundary_flags: tuple[str, ...] | None = None
    kappa: object = None  # float or callable point -> float; needed for mu-bar

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        if self.boundary_flags is not None and len(self.boundary_flags) != len(self.basis):
            raise ValueError("one boundary flag per basis element")

    @property
    def size(self) -> int:
        return len(self.basis)

    def element(self, coeffs) -> ScalarField:
        from .geomkit import linear_combination

        return linear_combination(coeffs, self.basis, self.manifold.dim)

    def gram(self, p, h: float = DEFAULT_STEP) -> np.ndarray:
        return mu_gram(self.manifold, self.kappa, self.basis, p, h)


def hessian_residual(S: SolutionSpace, w: ScalarField, p, h: float = DEFAULT_STEP, analytic: bool = True) -> float:
    hess = covariant_hessian(S.manifold, w, p, h, analytic)
    return float(np.linalg.norm(hess - w(p) * S.q(p)))


def residual(S: SolutionSpace, w: ScalarField, grid, h: float = DEFAULT_STEP, analytic: bool = True) -> float:
    """Max over ``grid`` of the Frobenius norm of ``Hess w - w q``."""
    return max(hessian_residual(S, w, p, h, analytic) for p in np.atleast_2d(grid))


def evaluation_matrix(S: SolutionSpace, p, h: float = DEFAULT_STEP) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    cols = [np.concatenate([[w(p)], gradient_vector(S.manifold, w, p, h)]) for w in S.basis]
    if not cols:
        return np.zeros((S.manifold.dim + 1, 0))
    return np.stack(cols, axis=1)


def evaluation_rank(S: SolutionSpace, p, h: float = DEFAULT_STEP) -> int:
    return numerical_rank(evaluation_matrix(S, p, h))


@dataclass(frozen=True)
class ZeroSetReport:
    points: np.ndarray
    max_value: float
    min_gradient_norm: float
    max_hessian_norm: float
    totally_geodesic: bool


def zero_set_check(
    S: SolutionSpace, w: ScalarField, level_points, tol: float = 1e-7, h: float = DEFAULT_STEP
) -> ZeroSetReport:
    """Gradient nonzero and Hessian zero along ``{w = 0}``."""
    pts = np.atleast_2d(np.asarray(level_points, dtype=float))
    values = np.array([abs(w(p)) for p in pts])
    if np.any(values >= 1e-8):
        raise PreconditionError(f"level point with |w| = {values.max():.3e} is not on the zero set")
    grads, hesses = [], []
    for p in pts:
        gv = gradient_vector(S.manifold, w, p, h)
        grads.append(np.sqrt(max(S.manifold.inner(p, gv, gv), 0.0)))
        hesses.append(np.linalg.norm(covariant_hessian(S.manifold, w, p, h)))
    if min(grads) < 1e-10:
        raise DegenerateSolutionError("gradient vanishes on the zero set: w is identically zero")
    return ZeroSetReport(pts, float(values.max()), float(min(grads)), float(max(hesses)), max(hesses) < tol)


def find_level_points(w: ScalarField, grid) -> np.ndarray:
    """Zeros of ``w`` by bisection along consecutive grid segments with a sign change."""
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    vals = np.array([w(p) for p in pts])
    found = []
    for a, b, fa, fb in zip(pts[:-1], pts[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            found.append(a)
        elif fa * fb < 0:
            s = bisect(lambda s: w(a + s * (b - a)), 0.0, 1.0, xtol=1e-15)
            found.append(a + s * (b - a))
    return np.array(found).reshape(-1, pts.shape[1])


# --- one-dimensional classification -------------------------------------------------

DOMAINS = ("line", "circle", "half_line", "interval")


@dataclass(frozen=True)
class OneDProblem:
    """``w'' = -tau w`` on a one-dimensional domain.

    ``radius`` is used by the circle; the interval has ``length`` (the
    ``[0, 2 pi a]`` family corresponds to ``length = 2 pi a``).  ``window`` is
    the integration window for numerical bases on non-compact domains.
    """

    domain: str
    tau: object = 0.0  # float or callable t -> float
    radius: float | None = None
    length: float | None = None
    bc: str = "none"
    window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == "circle" and not (self.radius and self.radius > 0):
            raise ValueError("circle needs radius > 0")
        if self.domain == "interval" and not (self.length and self.length > 0):
            raise ValueError("interval needs length > 0")
        if self.bc not in ("none", "dirichlet", "neumann"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")

    @property
    def period(self) -> float | None:
        if self.domain == "circle":
            return 2 * np.pi * self.radius
        if self.domain == "interval":
            return self.length
        return None

    @property
    def has_boundary(self) -> bool:
        return self.domain in ("half_line", "interval")


@dataclass(frozen=True)
class Classification:
    problem: OneDProblem
    dim: int
    basis: tuple[ScalarField, ...]
    dim_D: int | None = None
    dim_N: int | None = None
    basis_D: tuple[ScalarField, ...] = ()
    basis_N: tuple[ScalarField, ...] = ()
    notes: tuple[str, ...] = field(default_factory=tuple)

    def selected(self) -> tuple[ScalarField, ...]:
        """Basis matching the problem's boundary condition."""
        return {"dirichlet": self.basis_D, "neumann": self.basis_N}.get(self.problem.bc, self.basis)


_t = sp.Symbol("t")


def _field(expr, name=None) -> ScalarField:
    return ScalarField.from_expr(expr, [_t], name or str(expr))


def _trig_pair(tau: float) -> tuple[ScalarField, ScalarField]:
    """(Neumann-type, Dirichlet-type) solutions at t = 0."""
    if tau > 0:
        k = sp.sqrt(sp.Float(tau))
        return _field(sp.cos(k * _t)), _field(sp.sin(k * _t))
    if tau == 0:
        return _field(sp.Integer(1) + 0 * _t, "1"), _field(_t)
    k = sp.sqrt(sp.Float(-tau))
    return _field(sp.cosh(k * _t)), _field(sp.sinh(k * _t))


def _is_integer(x: float) -> bool:
    return abs(x - round(x)) < INTEGER_TOL and round(x) != 0


def _classify_constant(p: OneDProblem, tau: float) -> Classification:
    even, odd = _trig_pair(tau)
    if p.domain == "line":
        if tau < 0:
            k = sp.sqrt(sp.Float(-tau))
            basis = (_field(sp.exp(k * _t)), _field(sp.exp(-k * _t)))
        else:
            basis = (odd, even) if tau == 0 else (even, odd)
        return Classification(p, 2, basis)
    if p.domain == "half_line":
        return Classification(p, 2, (odd, even), 1, 1, (odd,), (even,))
    a = p.radius if p.domain == "circle" else p.length / (2 * np.pi)
    if tau > 0 and _is_integer(a * np.sqrt(tau)):
        basis, d_basis, n_basis = (even, odd), (odd,), (even,)
    elif tau == 0:
        basis, d_basis, n_basis = (even,), (), (even,)
    else:
        basis, d_basis, n_basis = (), (), ()
    if p.domain == "circle":
        return Classification(p, len(basis), basis)
    return Classification(
        p, len(basis), basis, len(d_basis), len(n_basis), d_basis, n_basis,
        ("interval solutions are those extending with period equal to the interval length",),
    )


def _classify_numeric(p: OneDProblem) -> Classification:
    tau = p.tau
    if p.domain in ("circle", "interval"):
        T = p.period
        window = p.window or (0.0, 2 * T)
        prob = hill.OdeProblem.from_tau(tau, window, period=T)
        m = hill.monodromy(prob)
        a = m - np.eye(2)
        scale = max(1.0, np.abs(m).max())
        _, s, vt = np.linalg.svd(a)
        kernel = [vt[i] for i in range(2) if s[i] <= hill.COEXIST_TOL * scale]
        basis = tuple(hill.solve_ivp(prob, c[0], c[1], 0.0).as_field() for c in kernel)
        if p.domain == "circle":
            return Classification(p, len(basis), basis)
        d_basis = n_basis = ()
        if np.abs(a[:, 1]).max() <= hill.COEXIST_TOL * scale:
            d_basis = (hill.solve_ivp(prob, 0.0, 1.0, 0.0).as_field(),)
        if np.abs(a[:, 0]).max() <= hill.COEXIST_TOL * scale:
            n_basis = (hill.solve_ivp(prob, 1.0, 0.0, 0.0).as_field(),)
        return Classification(p, len(basis), basis, len(d_basis), len(n_basis), d_basis, n_basis)
    if p.domain == "line":
        window = p.window or (-5.0, 5.0)
        prob = hill.OdeProblem.from_tau(tau, window)
        even = hill.solve_ivp(prob, 1.0, 0.0, 0.0).as_field()
        odd = hill.solve_ivp(prob, 0.0, 1.0, 0.0).as_field()
        return Classification(p, 2, (even, odd))
    window = p.window or (0.0, 10.0)
    prob = hill.OdeProblem.from_tau(tau, window)
    even = hill.solve_ivp(prob, 1.0, 0.0, 0.0).as_field()
    odd = hill.solve_ivp(prob, 0.0, 1.0, 0.0).as_field()
    return Classification(p, 2, (odd, even), 1, 1, (odd,), (even,))


def classify_1d(p: OneDProblem) -> Classification:
    """Dimension and bases of ``W``, plus the Dirichlet/Neumann split when there is boundary."""
    if callable(p.tau):
        return _classify_numeric(p)
    return _classify_constant(p, float(p.tau))
