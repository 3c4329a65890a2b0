"""Warped products ``M = B x_u F`` and their Hessian-equation structure.

Coordinates on ``M`` are the base coordinates followed by the fiber
coordinates.  With ``k = dim F`` and ``tau`` the fiber's characteristic
function the closed forms used throughout are

    q         = (1/u) Hess_B u  +  (|grad u|^2 - tau) g_F
    rho       = (rho_F - u lap_B u - (k-1) |grad u|^2) / u^2,   rho_F = (k-1) tau
    kappa     = -rho - tr Q = (tau - |grad u|^2) / u^2
    mu(u)     = kappa u^2 + |grad u|^2 = tau

``rho`` is the Ricci eigenvalue on vertical vectors.  ``rho_F`` is zero for a
one-dimensional fiber, where ``tau`` may vary along ``F``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from .errors import (
    ConstructionError,
    DomainError,
    NotDecomposableError,
    PreconditionError,
)
from .geomkit import (
    DEFAULT_STEP,
    Chart,
    MetricChart,
    ScalarField,
    central_gradient,
    covariant_hessian,
    curvature,
    laplacian,
)
from .solspace import QuadraticFormField
from .spaceforms import SpaceFormModel, SpaceFormSpec, make_space_form

U_MIN = 0.1
LIFT_TOL = 1e-6
GAUGE_TOL = 1e-8
MIXED_TOL = 1e-6
CONDITION_TOL = 1e-8


@dataclass(frozen=True)
class BaseSpace:
    """``(B, g_B, u)`` with ``q_B = Hess_B u / u``.

    ``boundary`` lists faces ``(axis, side)`` with side ``0`` (lower) or ``1``
    (upper) on which ``u`` vanishes.  Grid points with ``u < u_min`` form the
    excluded collar.
    """

    metric: MetricChart
    u: ScalarField
    boundary: tuple[tuple[int, int], ...] = ()
    u_min: float = U_MIN

    @property
    def dim(self) -> int:
        return self.metric.dim

    def q_B(self) -> QuadraticFormField:
        return QuadraticFormField(lambda b: covariant_hessian(self.metric, self.u, b) / self.u(b), self.metric)

    def grad_sq(self, b) -> float:
        du = self.u.gradient(b)
        return float(du @ self.metric.inverse(b) @ du)

    def grid(self, n: int = 64, margin: float = 4 * DEFAULT_STEP) -> np.ndarray:
        pts = self.metric.chart.grid(n, margin)
        return np.array([b for b in pts if self.u(b) >= self.u_min])

    def boundary_report(self, n: int = 8) -> list[tuple[float, float]]:
        """``(u, |grad u|)`` at sample points of each declared boundary face.

        The gradient is taken one-sidedly, from the interior.
        """
        chart = self.metric.chart
        out = []
        h = DEFAULT_STEP
        for axis, side in self.boundary:
            pts = chart.grid(n, 0.0)
            edge = chart.upper[axis] if side else chart.lower[axis]
            pts = np.unique(np.where(np.arange(chart.dim) == axis, edge, pts), axis=0)
            inward = -1.0 if side else 1.0
            for b in pts:
                grad = np.empty(chart.dim)
                for i in range(chart.dim):
                    e = np.zeros(chart.dim)
                    e[i] = h
                    if i == axis:
                        s = inward
                        grad[i] = s * (-3 * self.u(b) + 4 * self.u(b + s * e) - self.u(b + 2 * s * e)) / (2 * h)
                        continue
                    grad[i] = (self.u(b + e) - self.u(b - e)) / (2 * h)
                norm = float(np.sqrt(grad @ self.metric.inverse(b) @ grad))
                out.append((self.u(b), norm))
        return out


def real_line_base(u: ScalarField, window: tuple[float, float] = (-2.0, 2.0), **kw) -> BaseSpace:
    t = sp.Symbol("t", real=True)
    chart = Chart((window[0],), (window[1],))
    return BaseSpace(MetricChart.from_expr(sp.Matrix([[1]]), [t], chart, "R"), u, **kw)


def base_from_expr(u_expr, window: tuple[float, float], boundary=(), closed=None, **kw) -> BaseSpace:
    """One-dimensional base ``(window, dt^2)`` with ``u`` given in the symbol ``t``."""
    t = sp.Symbol("t", real=True)
    u_expr = sp.sympify(u_expr).subs(sp.Symbol("t"), t)
    chart = Chart((window[0],), (window[1],), closed=closed)
    metric = MetricChart.from_expr(sp.Matrix([[1]]), [t], chart, "B")
    return BaseSpace(metric, ScalarField.from_expr(u_expr, [t], f"u={u_expr}"), tuple(boundary), **kw)


@dataclass(frozen=True)
class WarpedProductSpec:
    base: BaseSpace
    fiber: SpaceFormModel
    total_metric: MetricChart

    @property
    def nb(self) -> int:
        return self.base.dim

    @property
    def k(self) -> int:
        return self.fiber.dim

    @property
    def dim(self) -> int:
        return self.nb + self.k

    def split(self, p) -> tuple[np.ndarray, np.ndarray]:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        return p[: self.nb], p[self.nb :]

    def tau(self, p) -> float:
        return self.fiber.tau_at(self.split(p)[1])

    def rho_F(self, p) -> float:
        return (self.k - 1) * self.tau(p) if self.k > 1 else 0.0

    def rho(self, p) -> float:
        """Vertical Ricci eigenvalue from the closed form."""
        b, _ = self.split(p)
        u = self.base.u(b)
        lap = laplacian(self.base.metric, self.base.u, b)
        return (self.rho_F(p) - u * lap - (self.k - 1) * self.base.grad_sq(b)) / u**2

    def kappa(self, p) -> float:
        b, _ = self.split(p)
        return (self.tau(p) - self.base.grad_sq(b)) / self.base.u(b) ** 2

    def kappa_field(self) -> Callable[[np.ndarray], float]:
        return self.kappa

    def grid(self, n_base: int = 64, n_fiber: int = 64) -> np.ndarray:
        """Tensor grid over the collar-free base and the fiber."""
        bs = self.base.grid(n_base)
        ys = self.fiber.grid(n_fiber)
        return np.array([np.concatenate([b, y]) for b in bs for y in ys])


def _total_chart(base: Chart, fiber: Chart) -> Chart:
    nb = base.dim
    periodic = dict(base.periodic)
    periodic.update({nb + i: per for i, per in fiber.periodic.items()})
    return Chart(base.lower + fiber.lower, base.upper + fiber.upper, periodic, base.closed + fiber.closed)


def build_warped(base: BaseSpace, fiber: SpaceFormModel, n_check: int = 64) -> WarpedProductSpec:
    """Assemble ``g_B + u^2 g_F`` with exact metric derivatives where the factors have them."""
    inner = base.metric.chart.grid(n_check, 1e-9)
    bad = [b for b in inner if base.u(b) <= 0]
    if bad:
        raise DomainError(f"warping function is not positive at interior point {bad[0]}")
    nb, k = base.dim, fiber.dim
    gB, gF = base.metric, fiber.metric

    def g(p):
        b, y = p[:nb], p[nb:]
        out = np.zeros((nb + k, nb + k))
        out[:nb, :nb] = gB.metric(b)
        out[nb:, nb:] = base.u(b) ** 2 * gF.metric(y)
        return out

    def dg(p):
        b, y = p[:nb], p[nb:]
        u = base.u(b)
        du = base.u.gradient(b)
        dgb = gB.metric_derivative(b)
        dgf = fiber.metric.metric_derivative(y)
        gf = gF.metric(y)
        out = np.zeros((nb + k, nb + k, nb + k))
        for a in range(nb):
            out[a, :nb, :nb] = dgb[a]
            out[a, nb:, nb:] = 2 * u * du[a] * gf
        for i in range(k):
            out[nb + i, nb:, nb:] = u**2 * dgf[i]
        return out

    chart = _total_chart(gB.chart, gF.chart)
    total = MetricChart(chart, g, f"{gB.name} x_u {gF.name}", dg)
    return WarpedProductSpec(base, fiber, total)


def assemble_q(wp: WarpedProductSpec) -> QuadraticFormField:
    """Horizontal block ``Hess_B u / u``, vertical block ``(|grad u|^2 - tau) g_F``."""
    nb = wp.nb

    def q(p):
        b, y = wp.split(p)
        out = np.zeros((wp.dim, wp.dim))
        out[:nb, :nb] = covariant_hessian(wp.base.metric, wp.base.u, b) / wp.base.u(b)
        out[nb:, nb:] = (wp.base.grad_sq(b) - wp.tau(p)) * wp.fiber.metric.metric(y)
        return out

    return QuadraticFormField(q, wp.total_metric)


def pullback_base(wp: WarpedProductSpec, f: ScalarField) -> ScalarField:
    nb, n = wp.nb, wp.dim

    def grad(p):
        out = np.zeros(n)
        out[:nb] = f.gradient(p[:nb])
        return out

    def hess(p):
        out = np.zeros((n, n))
        out[:nb, :nb] = f.hessian(p[:nb])
        return out

    return ScalarField(lambda p: f(p[:nb]), grad, hess, f.name)


def _product_field(wp: WarpedProductSpec, z: ScalarField | None, v: ScalarField) -> ScalarField:
    """``z(b) + u(b) v(y)`` with derivatives by the product rule."""
    nb, n = wp.nb, wp.dim
    u = wp.base.u

    def func(p):
        b, y = p[:nb], p[nb:]
        return (z(b) if z is not None else 0.0) + u(b) * v(y)

    def grad(p):
        b, y = p[:nb], p[nb:]
        out = np.empty(n)
        out[:nb] = u.gradient(b) * v(y) + (z.gradient(b) if z is not None else 0.0)
        out[nb:] = u(b) * v.gradient(y)
        return out

    def hess(p):
        b, y = p[:nb], p[nb:]
        out = np.empty((n, n))
        out[:nb, :nb] = u.hessian(b) * v(y) + (z.hessian(b) if z is not None else 0.0)
        mixed = np.outer(u.gradient(b), v.gradient(y))
        out[:nb, nb:] = mixed
        out[nb:, :nb] = mixed.T
        out[nb:, nb:] = u(b) * v.hessian(y)
        return out

    return ScalarField(func, grad, hess, f"u*{v.name}")


def lift_solution(
    wp: WarpedProductSpec, v: ScalarField, grid=None, tol: float = LIFT_TOL, q: QuadraticFormField | None = None
) -> ScalarField:
    """``w = pi_1^*(u) pi_2^*(v)``, checked against ``Hess w = w q`` on ``grid``."""
    w = _product_field(wp, None, v)
    q = q or assemble_q(wp)
    pts = wp.grid(16, 16) if grid is None else np.atleast_2d(grid)
    worst = 0.0
    for p in pts:
        worst = max(worst, float(np.linalg.norm(covariant_hessian(wp.total_metric, w, p) - w(p) * q(p))))
    if worst > tol:
        raise ConstructionError("lifted function does not solve Hess w = w q", worst)
    return w


def mixed_hessian(wp: WarpedProductSpec, w: ScalarField, p) -> np.ndarray:
    return covariant_hessian(wp.total_metric, w, p)[: wp.nb, wp.nb :]


@dataclass(frozen=True)
class Decomposition:
    z: ScalarField
    v: ScalarField
    base_point: np.ndarray
    fiber_point: np.ndarray
    max_deviation: float
    max_mixed_hessian: float
    gauge_note: str = "z(b0) = 0; (z, v) is unique only up to (z + c u, v - c)"


def decompose(
    wp: WarpedProductSpec, w: ScalarField, grid=None, tol: float = GAUGE_TOL, mixed_tol: float = MIXED_TOL
) -> Decomposition:
    """Split ``w = z(b) + u(b) v(y)`` with gauge ``z(b0) = 0`` at the first grid point."""
    pts = wp.grid(16, 16) if grid is None else np.atleast_2d(grid)
    scale = max(1.0, max(abs(w(p)) for p in pts))
    mixed = max(float(np.abs(mixed_hessian(wp, w, p)).max()) for p in pts)
    if mixed > mixed_tol * scale:
        raise NotDecomposableError(f"mixed Hessian does not vanish: max {mixed:.3e}")
    b0, y0 = wp.split(pts[0])
    nb = wp.nb
    u = wp.base.u
    u0 = u(b0)

    def join(b, y):
        return np.concatenate([b, y])

    def v_func(y):
        return w(join(b0, y)) / u0

    def z_func(b):
        return w(join(b, y0)) - u(b) * v_func(y0)

    v_grad = v_hess = z_grad = z_hess = None
    if w.analytic:
        def v_grad(y):
            return w.gradient(join(b0, y))[nb:] / u0

        def v_hess(y):
            return w.hessian(join(b0, y))[nb:, nb:] / u0

        def z_grad(b):
            return w.gradient(join(b, y0))[:nb] - u.gradient(b) * v_func(y0)

        def z_hess(b):
            return w.hessian(join(b, y0))[:nb, :nb] - u.hessian(b) * v_func(y0)

    z = ScalarField(z_func, z_grad, z_hess, "z")
    v = ScalarField(v_func, v_grad, v_hess, "v")
    dev = max(abs(w(p) - z(p[:nb]) - u(p[:nb]) * v(p[nb:])) for p in pts)
    if dev > tol * scale:
        raise ConstructionError("decomposition does not reproduce w", dev)
    return Decomposition(z, v, b0, y0, float(dev), mixed)


def mu_bar(wp: WarpedProductSpec, f1: ScalarField, f2: ScalarField, p) -> float:
    """``kappa f1 f2 + g(grad f1, grad f2)`` on ``M``."""
    d1 = f1.gradient(p)
    d2 = f2.gradient(p)
    return wp.kappa(p) * f1(p) * f2(p) + float(d1 @ wp.total_metric.inverse(p) @ d2)


def mu_bar_base(wp: WarpedProductSpec, f1: ScalarField, f2: ScalarField, b, y) -> float:
    """Same pairing for functions on ``B``, with ``kappa`` read at ``(b, y)``."""
    p = np.concatenate([b, y])
    d1 = f1.gradient(b)
    d2 = f2.gradient(b)
    return wp.kappa(p) * f1(b) * f2(b) + float(d1 @ wp.base.metric.inverse(b) @ d2)


@dataclass(frozen=True)
class ExtensionReport:
    z_residual: float
    fiber_residual_2: float
    fiber_residual_5: float
    form_disagreement: float
    tol: float

    @property
    def condition_2(self) -> bool:
        return self.z_residual < self.tol

    @property
    def condition_3(self) -> bool:
        return self.fiber_residual_2 < self.tol and self.fiber_residual_5 < self.tol

    @property
    def ok(self) -> bool:
        return self.condition_2 and self.condition_3


def check_extension_conditions(
    wp: WarpedProductSpec, z: ScalarField, v: ScalarField, grid=None, tol: float = 1e-7
) -> ExtensionReport:
    """Conditions for ``z + u v`` to lie in ``W(M; q)``.

    The fiber condition is evaluated in the form with ``q|_F`` and in the
    mu-bar form ``Hess_F v + v mu(u) g_F = -mu(u, z) g_F``; both are returned.
    """
    pts = wp.grid(16, 16) if grid is None else np.atleast_2d(grid)
    q = assemble_q(wp)
    qB = wp.base.q_B()
    nb = wp.nb
    u = wp.base.u
    z_res = r2 = r5 = dis = 0.0
    for p in pts:
        b, y = wp.split(p)
        z_res = max(z_res, float(np.linalg.norm(covariant_hessian(wp.base.metric, z, b) - z(b) * qB(b))))
        gF = wp.fiber.metric.metric(y)
        hv = covariant_hessian(wp.fiber.metric, v, y)
        qF = q(p)[nb:, nb:]
        ub = u(b)
        cross = float(u.gradient(b) @ wp.base.metric.inverse(b) @ z.gradient(b))
        lhs2 = hv + v(y) * (-qF + wp.base.grad_sq(b) * gF) + (-(z(b) / ub) * qF + cross * gF)
        mu_u = mu_bar_base(wp, u, u, b, y)
        mu_uz = mu_bar_base(wp, u, z, b, y)
        lhs5 = hv + v(y) * mu_u * gF + mu_uz * gF
        r2 = max(r2, float(np.linalg.norm(lhs2)))
        r5 = max(r5, float(np.linalg.norm(lhs5)))
        dis = max(dis, float(np.linalg.norm(lhs2 - lhs5)))
    return ExtensionReport(z_res, r2, r5, dis, tol)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


@dataclass(frozen=True)
class ONeillReport:
    point: np.ndarray
    deviations: dict = field(default_factory=dict)

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())


def oneill_curvature_check(wp: WarpedProductSpec, p, h: float = DEFAULT_STEP) -> ONeillReport:
    """Closed-form warped-product curvature against the finite-difference tensor.

    Keys: ``rho`` (vertical Ricci eigenvalue), ``ricci_horizontal``
    (``Ric_B - (k/u) Hess_B u``), ``ricci_mixed`` (zero), ``grad_u_vertical``
    (``nabla_V grad u = (|grad u|^2/u) V``), ``scalar``, ``q_horizontal``
    (``q|_B = (Ric_B - Ric_M)/k``) and ``q_vertical`` (``(rho + tr Q) g``).
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    b, y = wp.split(p)
    nb, k = wp.nb, wp.k
    rep = curvature(wp.total_metric, p, h)
    u = wp.base.u
    ub = u(b)
    g = rep.metric
    gsq = wp.base.grad_sq(b)
    hess_u = covariant_hessian(wp.base.metric, u, b)
    lap = laplacian(wp.base.metric, u, b)
    ric_B = curvature(wp.base.metric, b, h).ricci if nb > 1 else np.zeros((1, 1))
    scal_B = float(np.einsum("ij,ij->", wp.base.metric.inverse(b), ric_B)) if nb > 1 else 0.0
    rho = wp.rho(p)
    dev = {}
    vert = rep.ricci[nb:, nb:]
    dev["rho"] = max(_rel(vert[i, j], rho * g[nb + i, nb + j]) for i in range(k) for j in range(k))
    horiz = ric_B - (k / ub) * hess_u
    dev["ricci_horizontal"] = float(max(_rel(rep.ricci[i, j], horiz[i, j]) for i in range(nb) for j in range(nb)))
    dev["ricci_mixed"] = float(np.abs(rep.ricci[:nb, nb:]).max())
    hess_M_u = covariant_hessian(wp.total_metric, pullback_base(wp, u), p, h)
    nabla = np.linalg.inv(g) @ hess_M_u  # column j: nabla_{e_j} grad u
    dev["grad_u_vertical"] = max(
        float(np.abs(nabla[:, nb + i] - (gsq / ub) * np.eye(nb + k)[nb + i]).max()) for i in range(k)
    )
    scal_F = k * (k - 1) * wp.tau(p) if k > 1 else 0.0
    scal = scal_B + (scal_F - 2 * k * ub * lap - k * (k - 1) * gsq) / ub**2
    dev["scalar"] = _rel(rep.scalar, scal)
    q = assemble_q(wp)(p)
    qB_from_ricci = (ric_B - rep.ricci[:nb, :nb]) / k
    dev["q_horizontal"] = float(max(_rel(qB_from_ricci[i, j], q[i, j]) for i in range(nb) for j in range(nb)))
    trQ = float(np.trace(np.linalg.inv(g) @ q))
    rho_fd = vert[0, 0] / g[nb, nb]
    dev["q_vertical"] = float(
        max(_rel((rho_fd + trQ) * g[nb + i, nb + j], q[nb + i, nb + j]) for i in range(k) for j in range(k))
    )
    return ONeillReport(p, dev)


@dataclass(frozen=True)
class TraceReport:
    max_deviation: float
    k: int


def trace_relations(wp: WarpedProductSpec, grid, h: float = DEFAULT_STEP) -> TraceReport:
    """Trace identities with ``rho`` measured from the finite-difference Ricci tensor.

    ``k = 1``: ``tr Q_B = lap_B u / u = -rho``.
    ``k > 1``: ``tr Q = -(k rho + tr Q_B) / (k - 1)``.
    """
    q = assemble_q(wp)
    nb, k = wp.nb, wp.k
    worst = 0.0
    for p in np.atleast_2d(grid):
        b, _ = wp.split(p)
        rep = curvature(wp.total_metric, p, h)
        rho = rep.ricci[nb, nb] / rep.metric[nb, nb]
        trQB = float(np.trace(wp.base.q_B().operator(b)))
        lap_ratio = laplacian(wp.base.metric, wp.base.u, b) / wp.base.u(b)
        if k == 1:
            worst = max(worst, _rel(trQB, -rho), _rel(lap_ratio, trQB))
        else:
            trQ = q.trace(p)
            worst = max(worst, _rel(trQ, -(k * rho + trQB) / (k - 1)))
    return TraceReport(worst, k)


@dataclass(frozen=True)
class MuForms:
    mu1: np.ndarray
    mu12: np.ndarray

    @property
    def spread1(self) -> float:
        return float(self.mu1.max() - self.mu1.min())

    @property
    def spread12(self) -> float:
        return float(self.mu12.max() - self.mu12.min())


def mu_forms(wp: WarpedProductSpec, w1: ScalarField, w2: ScalarField, grid) -> MuForms:
    pts = np.atleast_2d(grid)
    return MuForms(
        np.array([mu_bar(wp, w1, w1, p) for p in pts]),
        np.array([mu_bar(wp, w1, w2, p) for p in pts]),
    )


def kappa_B_line(wp: WarpedProductSpec) -> Callable[[np.ndarray], float]:
    """``kappa_B = -u''/u`` for a one-dimensional base, where ``rho_B`` vanishes."""
    if wp.nb != 1:
        raise PreconditionError("kappa_B is implemented for one-dimensional bases")
    u = wp.base.u
    return lambda b: -float(u.hessian(b)[0, 0]) / u(b)


@dataclass(frozen=True)
class GradientIdentityReport:
    grad_mu_w: float
    grad_mu_uz: float
    grad_mu_zz: float
    z_residual: float
    max_kappa_gap: float


def mu_gradient_identities(
    wp: WarpedProductSpec,
    z: ScalarField,
    grid=None,
    w: ScalarField | None = None,
    kappa_B: Callable | None = None,
    h: float = DEFAULT_STEP,
    membership_tol: float = 1e-6,
) -> GradientIdentityReport:
    """Both sides of the mu-bar gradient identities, compared on ``grid``.

    On ``M``: ``grad mu(w) = (w^2/u^2) grad mu(u)`` for ``w`` in ``W(M; q)``
    (defaults to the lift of the first fiber basis element).  On ``B``:
    ``grad mu(u, z) = (z/u) grad mu(u) + (kappa - kappa_B)(u grad z - z grad u)``
    and its ``mu(z, z)`` analogue, at the fiber point of each grid point.
    """
    pts = wp.grid(16, 8) if grid is None else np.atleast_2d(grid)
    kappa_B = kappa_B or kappa_B_line(wp)
    qB = wp.base.q_B()
    z_res = max(
        float(np.linalg.norm(covariant_hessian(wp.base.metric, z, p[: wp.nb]) - z(p[: wp.nb]) * qB(p[: wp.nb])))
        for p in pts
    )
    if z_res > membership_tol:
        raise PreconditionError(f"z is not in W(B; q_B): residual {z_res:.3e}")
    u = wp.base.u
    w = w or _product_field(wp, None, wp.fiber.basis[0])
    upull = pullback_base(wp, u)
    d81 = d82 = d82z = gap = 0.0
    for p in pts:
        b, y = wp.split(p)
        lhs = central_gradient(lambda x: mu_bar(wp, w, w, x), p, h)
        dmu_u = central_gradient(lambda x: mu_bar(wp, upull, upull, x), p, h)
        rhs = (w(p) ** 2 / u(b) ** 2) * dmu_u
        d81 = max(d81, float(np.abs(lhs - rhs).max()) / max(1.0, float(np.abs(rhs).max())))

        def mu_b(f1, f2):
            return lambda x: mu_bar_base(wp, f1, f2, x, y)

        dmu_uz = central_gradient(mu_b(u, z), b, h)
        dmu_zz = central_gradient(mu_b(z, z), b, h)
        dmu_uu = central_gradient(mu_b(u, u), b, h)
        kdiff = wp.kappa(p) - kappa_B(b)
        killing = u(b) * z.gradient(b) - z(b) * u.gradient(b)
        rhs_uz = (z(b) / u(b)) * dmu_uu + kdiff * killing
        rhs_zz = (z(b) ** 2 / u(b) ** 2) * dmu_uu + 2 * (z(b) / u(b)) * kdiff * killing
        d82 = max(d82, float(np.abs(dmu_uz - rhs_uz).max()) / max(1.0, float(np.abs(rhs_uz).max())))
        d82z = max(d82z, float(np.abs(dmu_zz - rhs_zz).max()) / max(1.0, float(np.abs(rhs_zz).max())))
        gap = max(gap, abs(kdiff))
    return GradientIdentityReport(d81, d82, d82z, z_res, gap)


def kappa_gap(wp: WarpedProductSpec, grid, kappa_B: Callable | None = None) -> float:
    """Largest ``|kappa - kappa_B|`` on ``grid``."""
    kappa_B = kappa_B or kappa_B_line(wp)
    return max(abs(wp.kappa(p) - kappa_B(wp.split(p)[0])) for p in np.atleast_2d(grid))


@dataclass(frozen=True)
class Example51:
    wp: WarpedProductSpec
    q: QuadraticFormField
    dim_lower_bound: int
    k_plus_2: bool
    condition_residual: float


def example51_family(
    u: ScalarField,
    fiber: SpaceFormModel,
    window: tuple[float, float] = (-2.0, 2.0),
    n_base: int = 64,
    n_fiber: int = 16,
    tol: float = CONDITION_TOL,
) -> Example51:
    """``(R x F, dx^2 + u^2 g_F, (u''/u) dx^2 + ((u')^2 - tau) g_F)``.

    ``dim W = k + 2`` exactly when ``tau/u^2 + (u'/u)' = 0`` on the grid.
    """
    wp = build_warped(real_line_base(u, window), fiber)
    worst = 0.0
    for p in wp.grid(n_base, n_fiber):
        b, y = wp.split(p)
        ub = u(b)
        du = u.gradient(b)[0]
        ddu = u.hessian(b)[0, 0]
        log_deriv_prime = ddu / ub - (du / ub) ** 2
        worst = max(worst, abs(fiber.tau_at(y) / ub**2 + log_deriv_prime))
    return Example51(wp, assemble_q(wp), fiber.dim + 1, bool(worst < tol), float(worst))


def fiber_model(kind: str, k: int, tau=None, **kw) -> SpaceFormModel:
    return make_space_form(SpaceFormSpec(kind, k, tau, **kw))
