"""Chart-level numerical tensor calculus.

Everything here works pointwise on a single coordinate box.  Derivatives of
the metric and of scalar fields are taken analytically when the caller
supplies them and by second-order central differences otherwise.

Index conventions::

    gamma[k, i, j]       = Gamma^k_{ij}
    riemann[i, j, k, l]  = R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj}
                           + Gamma^i_{km} Gamma^m_{lj} - Gamma^i_{lm} Gamma^m_{kj}
    ricci[j, l]          = R^i_{jil}

With these conventions the unit sphere has Ric = +g.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import sympy as sp

from .errors import DegenerateMetricError, MarginError

DEFAULT_STEP = 1e-4
MAX_CONDITION = 1e10


def _modules():
    from scipy.special import erf

    return [{"erf": erf}, "numpy"]


def _as_point(p) -> np.ndarray:
    return np.atleast_1d(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class Chart:
    """Axis-aligned coordinate box.

    ``closed`` holds one ``(lower_closed, upper_closed)`` pair per axis and
    ``periodic`` maps an axis index to its period.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: Mapping[int, float] = field(default_factory=dict)
    closed: tuple[tuple[bool, bool], ...] | None = None

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lower)
        hi = tuple(float(x) for x in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "periodic", dict(self.periodic))
        if len(lo) != len(hi) or not lo:
            raise ValueError("chart needs matching, non-empty bounds")
        for a, b in zip(lo, hi):
            if not a < b:
                raise ValueError(f"chart axis has lower >= upper: {a} >= {b}")
        for axis, period in self.periodic.items():
            if not 0 <= axis < len(lo):
                raise ValueError(f"periodic axis {axis} out of range")
            if not period > 0:
                raise ValueError("period must be positive")
        if self.closed is None:
            object.__setattr__(self, "closed", tuple((False, False) for _ in lo))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @classmethod
    def box(cls, *bounds, periodic=None) -> Chart:
        lo, hi = zip(*bounds)
        return cls(lo, hi, periodic or {})

    def contains(self, p) -> bool:
        p = _as_point(p)
        for i, (x, a, b) in enumerate(zip(p, self.lower, self.upper)):
            if i in self.periodic:
                continue
            lo_ok = x >= a if self.closed[i][0] else x > a
            hi_ok = x <= b if self.closed[i][1] else x < b
            if not (lo_ok and hi_ok):
                return False
        return True

    def check_margin(self, p, margin: float) -> None:
        p = _as_point(p)
        if p.shape != (self.dim,):
            raise ValueError(f"point has shape {p.shape}, chart dim is {self.dim}")
        for i, (x, a, b) in enumerate(zip(p, self.lower, self.upper)):
            if i in self.periodic:
                continue
            if x - a < margin or b - x < margin:
                raise MarginError(
                    f"axis {i}: point {x} within {margin:g} of boundary [{a}, {b}]"
                )

    def grid(self, n, inset: float = 0.0) -> np.ndarray:
        """Tensor grid with ``n`` points per axis (int or per-axis sequence).

        Periodic axes are sampled on ``[lower, lower + period)``; other axes
        on the closed box shrunk by ``inset``.
        """
        counts = [n] * self.dim if np.isscalar(n) else list(n)
        axes = []
        for i, m in enumerate(counts):
            if i in self.periodic:
                a = self.lower[i]
                axes.append(a + self.periodic[i] * np.arange(m) / m)
            else:
                axes.append(np.linspace(self.lower[i] + inset, self.upper[i] - inset, m))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, n: int, rng: np.random.Generator, inset: float = 0.0) -> np.ndarray:
        lo = np.array(self.lower) + inset
        hi = np.array(self.upper) - inset
        for i, period in self.periodic.items():
            lo[i] = self.lower[i]
            hi[i] = self.lower[i] + period
        return rng.uniform(lo, hi, size=(n, self.dim))


@dataclass(frozen=True)
class ScalarField:
    """Real function on a chart with optional analytic derivatives."""

    func: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""

    def __call__(self, p) -> float:
        return float(self.func(_as_point(p)))

    @property
    def analytic(self) -> bool:
        return self.grad is not None and self.hess is not None

    def gradient(self, p, h: float = DEFAULT_STEP, analytic: bool = True) -> np.ndarray:
        p = _as_point(p)
        if analytic and self.grad is not None:
            return np.asarray(self.grad(p), dtype=float).reshape(p.shape)
        return central_gradient(self.func, p, h)

    def hessian(self, p, h: float = DEFAULT_STEP, analytic: bool = True) -> np.ndarray:
        """Matrix of coordinate second partials (not the covariant Hessian)."""
        p = _as_point(p)
        if analytic and self.hess is not None:
            m = np.asarray(self.hess(p), dtype=float).reshape(p.size, p.size)
            return 0.5 * (m + m.T)
        if analytic and self.grad is not None:
            return _jacobian_fd(lambda x: np.asarray(self.grad(x), dtype=float), p, h, symmetric=True)
        return _second_partials_fd(self.func, p, h)

    def without_derivatives(self) -> ScalarField:
        return ScalarField(self.func, name=self.name)

    @classmethod
    def from_expr(cls, expr, coords: Sequence[sp.Symbol], name: str = "") -> ScalarField:
        """Build a field, with exact derivatives, from a sympy expression."""
        expr = sp.sympify(expr)
        coords = list(coords)
        mods = _modules()
        f = sp.lambdify(coords, expr, modules=mods)
        grads = [sp.diff(expr, c) for c in coords]
        g = sp.lambdify(coords, grads, modules=mods)
        hs = [[sp.diff(gi, c) for c in coords] for gi in grads]
        hf = sp.lambdify(coords, hs, modules=mods)
        n = len(coords)
        return cls(
            lambda p: f(*p),
            lambda p: np.array(g(*p), dtype=float).reshape(n),
            lambda p: np.array(hf(*p), dtype=float).reshape(n, n),
            name or str(expr),
        )

    @classmethod
    def constant(cls, c: float, dim: int) -> ScalarField:
        return cls(lambda p: c, lambda p: np.zeros(dim), lambda p: np.zeros((dim, dim)), str(c))


def linear_combination(coeffs, fields: Sequence[ScalarField], dim: int) -> ScalarField:
    """Sum of ``c_i * f_i``; analytic derivatives carried when all fields have them."""
    coeffs = [float(c) for c in coeffs]
    pairs = [(c, f) for c, f in zip(coeffs, fields) if c != 0.0]
    if not pairs:
        return ScalarField.constant(0.0, dim)

    def func(p):
        return sum(c * f.func(p) for c, f in pairs)

    if all(f.analytic for _, f in pairs):
        return ScalarField(
            func,
            lambda p: sum(c * np.asarray(f.grad(p), dtype=float) for c, f in pairs),
            lambda p: sum(c * np.asarray(f.hess(p), dtype=float) for c, f in pairs),
        )
    return ScalarField(func)


def central_gradient(f: Callable, p: np.ndarray, h: float) -> np.ndarray:
    n = p.size
    out = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out[i] = (f(p + e) - f(p - e)) / (2 * h)
    return out


def _second_partials_fd(f: Callable, p: np.ndarray, h: float) -> np.ndarray:
    n = p.size
    out = np.empty((n, n))
    f0 = f(p)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        out[i, i] = (f(p + ei) - 2 * f0 + f(p - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            v = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * h**2)
            out[i, j] = out[j, i] = v
    return out


def _jacobian_fd(f: Callable, p: np.ndarray, h: float, symmetric: bool = False) -> np.ndarray:
    """``J[:, k] = d f / d x_k`` by central differences."""
    n = p.size
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((np.asarray(f(p + e)) - np.asarray(f(p - e))) / (2 * h))
    jac = np.stack(cols, axis=-1)
    if symmetric:
        jac = 0.5 * (jac + jac.T)
    return jac


@dataclass(frozen=True)
class MetricChart:
    """Metric tensor field on a chart.

    ``dg``, when given, returns the array ``dg[k, i, j] = d_k g_ij``.
    """

    chart: Chart
    g: Callable[[np.ndarray], np.ndarray]
    name: str = ""
    dg: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def dim(self) -> int:
        return self.chart.dim

    def metric(self, p) -> np.ndarray:
        m = np.asarray(self.g(_as_point(p)), dtype=float).reshape(self.dim, self.dim)
        return 0.5 * (m + m.T)

    def inverse(self, p) -> np.ndarray:
        m = self.metric(p)
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise DegenerateMetricError(f"metric '{self.name}' has condition number {cond:.3e} at {p}")
        return np.linalg.inv(m)

    def metric_derivative(self, p, h: float = DEFAULT_STEP, analytic: bool = True) -> np.ndarray:
        p = _as_point(p)
        if analytic and self.dg is not None:
            return np.asarray(self.dg(p), dtype=float).reshape(self.dim, self.dim, self.dim)
        n = self.dim
        out = np.empty((n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            out[k] = (self.metric(p + e) - self.metric(p - e)) / (2 * h)
        return out

    def min_eigenvalue(self, p) -> float:
        return float(np.linalg.eigvalsh(self.metric(p))[0])

    def raise_index(self, p, covector) -> np.ndarray:
        return self.inverse(p) @ np.asarray(covector, dtype=float)

    def inner(self, p, a, b) -> float:
        return float(np.asarray(a) @ self.metric(p) @ np.asarray(b))

    @classmethod
    def from_expr(cls, matrix, coords: Sequence[sp.Symbol], chart: Chart, name: str = "") -> MetricChart:
        """Metric given as a sympy matrix; its coordinate derivatives are exact."""
        mat = sp.Matrix(matrix)
        coords = list(coords)
        n = len(coords)
        mods = _modules()
        gf = sp.lambdify(coords, mat.tolist(), modules=mods)
        dgs = [mat.diff(c).tolist() for c in coords]
        dgf = sp.lambdify(coords, dgs, modules=mods)
        return cls(
            chart,
            lambda p: np.array(gf(*p), dtype=float).reshape(n, n),
            name,
            lambda p: np.array(dgf(*p), dtype=float).reshape(n, n, n),
        )


@dataclass(frozen=True)
class VectorField:
    func: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.func(_as_point(p)), dtype=float)

    def jacobian(self, p, h: float = DEFAULT_STEP) -> np.ndarray:
        """``J[i, k] = d_k X^i``."""
        p = _as_point(p)
        if self.jac is not None:
            return np.asarray(self.jac(p), dtype=float)
        return _jacobian_fd(self.func, p, h)


@dataclass(frozen=True)
class CurvatureReport:
    point: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    metric: np.ndarray

    def riemann_lowered(self) -> np.ndarray:
        """``R_{ijkl} = g_{im} R^m_{jkl}``."""
        return np.einsum("im,mjkl->ijkl", self.metric, self.riemann)

    def bianchi_defect(self) -> float:
        """Largest violation of the algebraic symmetries of the lowered tensor."""
        r = self.riemann_lowered()
        anti_kl = np.abs(r + r.transpose(0, 1, 3, 2)).max()
        anti_ij = np.abs(r + r.transpose(1, 0, 2, 3)).max()
        cyclic = np.abs(r + r.transpose(0, 2, 3, 1) + r.transpose(0, 3, 1, 2)).max()
        return float(max(anti_kl, anti_ij, cyclic))

    def sectional(self, a, b) -> float:
        r = self.riemann_lowered()
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        num = np.einsum("ijkl,i,j,k,l->", r, a, b, a, b)
        g = self.metric
        den = (a @ g @ a) * (b @ g @ b) - (a @ g @ b) ** 2
        return float(num / den)


def christoffel(m: MetricChart, p, h: float = DEFAULT_STEP, analytic: bool = True) -> np.ndarray:
    """Levi-Civita connection coefficients ``gamma[k, i, j]``."""
    p = _as_point(p)
    m.chart.check_margin(p, 2 * h if not (analytic and m.dg is not None) else 0.0)
    return _christoffel(m, p, h, analytic)


def _christoffel(m: MetricChart, p: np.ndarray, h: float, analytic: bool) -> np.ndarray:
    ginv = m.inverse(p)
    dg = m.metric_derivative(p, h, analytic)
    # lowered[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lowered = dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg
    gamma = 0.5 * np.einsum("kl,lij->kij", ginv, lowered)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def covariant_hessian(
    m: MetricChart, w: ScalarField, p, h: float = DEFAULT_STEP, analytic: bool = True
) -> np.ndarray:
    """``d_i d_j w - Gamma^k_ij d_k w``."""
    p = _as_point(p)
    m.chart.check_margin(p, 2 * h)
    gamma = christoffel(m, p, h, analytic)
    d2 = w.hessian(p, h, analytic)
    d1 = w.gradient(p, h, analytic)
    out = d2 - np.einsum("kij,k->ij", gamma, d1)
    return 0.5 * (out + out.T)


hess_scalar = covariant_hessian


def gradient_vector(m: MetricChart, w: ScalarField, p, h: float = DEFAULT_STEP, analytic: bool = True) -> np.ndarray:
    """Metric gradient ``g^{ij} d_j w``."""
    p = _as_point(p)
    return m.inverse(p) @ w.gradient(p, h, analytic)


def laplacian(m: MetricChart, w: ScalarField, p, h: float = DEFAULT_STEP, analytic: bool = True) -> float:
    p = _as_point(p)
    return float(np.trace(m.inverse(p) @ covariant_hessian(m, w, p, h, analytic)))


def curvature(m: MetricChart, p, h: float = DEFAULT_STEP, analytic: bool = True) -> CurvatureReport:
    """Riemann, Ricci and scalar curvature; derivatives of Gamma by five-point central differences."""
    p = _as_point(p)
    m.chart.check_margin(p, 3 * h)
    n = m.dim
    gamma = christoffel(m, p, h, analytic)
    dgamma = np.empty((n, n, n, n))  # dgamma[m, k, i, j] = d_m Gamma^k_ij
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        g1 = _christoffel(m, p + e, h, analytic) - _christoffel(m, p - e, h, analytic)
        g2 = _christoffel(m, p + 2 * e, h, analytic) - _christoffel(m, p - 2 * e, h, analytic)
        dgamma[a] = (8 * g1 - g2) / (12 * h)
    # R^i_{jkl} = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{km} G^m_{lj} - G^i_{lm} G^m_{kj}
    term1 = np.einsum("kilj->ijkl", dgamma)
    quad = np.einsum("ikm,mlj->ijkl", gamma, gamma)
    riemann = term1 - term1.transpose(0, 1, 3, 2) + quad - quad.transpose(0, 1, 3, 2)
    ricci = np.einsum("ijil->jl", riemann)
    ricci = 0.5 * (ricci + ricci.T)
    scalar = float(np.einsum("jl,jl->", m.inverse(p), ricci))
    return CurvatureReport(p, gamma, riemann, ricci, scalar, m.metric(p))


def lie_derivative_metric(m: MetricChart, K: VectorField, p, h: float = DEFAULT_STEP, analytic: bool = True) -> np.ndarray:
    """``(L_K g)_ij = K^k d_k g_ij + g_kj d_i K^k + g_ik d_j K^k``."""
    p = _as_point(p)
    m.chart.check_margin(p, 2 * h)
    k = K(p)
    jac = K.jacobian(p, h)  # jac[a, i] = d_i K^a
    g = m.metric(p)
    dg = m.metric_derivative(p, h, analytic)
    out = np.einsum("k,kij->ij", k, dg) + jac.T @ g + g @ jac
    return 0.5 * (out + out.T)


def vector_bracket(X: VectorField, Y: VectorField, p, h: float = DEFAULT_STEP) -> np.ndarray:
    """``[X, Y]^i = X^k d_k Y^i - Y^k d_k X^i``."""
    p = _as_point(p)
    return Y.jacobian(p, h) @ X(p) - X.jacobian(p, h) @ Y(p)
