"""Linear second-order ODE engine for ``w'' = theta(t) w``.

Covers initial value problems, Wronskians, the period map (monodromy) of
Hill's equation with its coexistence verdict, the positive-solution
argument against all solutions being periodic, and isocurved surface pairs
``dt^2 + v_i(t)^2 dx^2`` sharing the Gauss curvature ``-v_i''/v_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from .errors import ConstructionError, IntegrationError, PreconditionError
from .geomkit import Chart, MetricChart, ScalarField, curvature

RTOL = 1e-10
ATOL = 1e-10
COEXIST_TOL = 1e-8
CURVATURE_GRID = 512


@dataclass(frozen=True)
class OdeProblem:
    """``w'' = theta(t) w`` on ``t_span``; theta is minus the characteristic function."""

    theta: Callable[[float], float]
    t_span: tuple[float, float]
    period: float | None = None

    def __post_init__(self):
        a, b = self.t_span
        if not a < b:
            raise ValueError("t_span must be increasing")
        if self.period is not None and not self.period > 0:
            raise ValueError("period must be positive")

    @classmethod
    def from_tau(cls, tau, t_span, period=None) -> OdeProblem:
        """Problem ``w'' = -tau w`` with constant or callable ``tau``."""
        if callable(tau):
            return cls(lambda t: -tau(t), t_span, period)
        c = float(tau)
        return cls(lambda t: -c, t_span, period)


@dataclass(frozen=True)
class OdeSolution:
    problem: OdeProblem
    t: np.ndarray
    w: np.ndarray
    dw: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_spline", CubicHermiteSpline(self.t, self.w, self.dw))
        ddw = np.array([self.problem.theta(s) for s in self.t]) * self.w
        object.__setattr__(self, "_dspline", CubicHermiteSpline(self.t, self.dw, ddw))

    def __call__(self, t):
        return self._spline(t)

    def derivative(self, t):
        return self._dspline(t)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        theta = np.vectorize(self.problem.theta, otypes=[float])(t)
        return theta * self(t)

    def residual(self) -> float:
        """Largest ``|w'' - theta w|`` at step midpoints, w'' taken from the dense w'."""
        mid = 0.5 * (self.t[1:] + self.t[:-1])
        ddw = self._dspline.derivative()(mid)
        theta = np.array([self.problem.theta(s) for s in mid])
        return float(np.max(np.abs(ddw - theta * self(mid))))

    def as_field(self, name: str = "") -> ScalarField:
        return ScalarField(
            lambda p: float(self(p[0])),
            lambda p: np.array([float(self.derivative(p[0]))]),
            lambda p: np.array([[float(self.second_derivative(p[0]))]]),
            name,
        )


def _rhs(problem: OdeProblem):
    def f(t, y):
        th = problem.theta(t)
        return [y[1], th * y[0]]

    return f


def _integrate(problem, t0, t1, y0, rtol, atol):
    if t0 == t1:
        return np.array([t0]), np.array([y0], dtype=float).T
    max_step = abs(problem.t_span[1] - problem.t_span[0]) / 512
    sol = integrate.solve_ivp(
        _rhs(problem), (t0, t1), y0, method="RK45", rtol=rtol, atol=atol, max_step=max_step
    )
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}", float(sol.t[-1]))
    return sol.t, sol.y


def solve_ivp(
    problem: OdeProblem, w0: float, dw0: float, t0: float | None = None, rtol: float = RTOL, atol: float = ATOL
) -> OdeSolution:
    """Integrate from ``t0`` (default: left end) to both ends of the span."""
    a, b = problem.t_span
    t0 = a if t0 is None else float(t0)
    if not a <= t0 <= b:
        raise ValueError("t0 outside t_span")
    if not (np.isfinite(w0) and np.isfinite(dw0)):
        raise ValueError("initial data must be finite")
    y0 = [float(w0), float(dw0)]
    tf, yf = _integrate(problem, t0, b, y0, rtol, atol)
    tb, yb = _integrate(problem, t0, a, y0, rtol, atol)
    t = np.concatenate([tb[::-1], tf[1:]])
    y = np.concatenate([yb[:, ::-1], yf[:, 1:]], axis=1)
    return OdeSolution(problem, t, y[0], y[1])


def _value_and_slope(f, t):
    if isinstance(f, OdeSolution):
        return float(f(t)), float(f.derivative(t))
    return f(np.array([t])), float(f.gradient(np.array([t]))[0])


def wronskian(s1, s2, t: float) -> float:
    """``s2' s1 - s2 s1'`` at ``t``; accepts OdeSolutions or 1-D ScalarFields."""
    v1, d1 = _value_and_slope(s1, t)
    v2, d2 = _value_and_slope(s2, t)
    return d2 * v1 - v2 * d1


def wronskian_spread(s1, s2, ts) -> tuple[float, float]:
    """Mean and max-min spread of the Wronskian over ``ts``."""
    vals = np.array([wronskian(s1, s2, t) for t in ts])
    return float(vals.mean()), float(vals.max() - vals.min())


def _check_periodic(problem: OdeProblem, samples: int = 64) -> None:
    T = problem.period
    if T is None:
        raise PreconditionError("problem has no period")
    ts = np.linspace(0.0, T, samples, endpoint=False) + 0.123 * T / samples
    for t in ts:
        a, b = problem.theta(t), problem.theta(t + T)
        if abs(a - b) > 1e-10 * (1.0 + abs(a)):
            raise PreconditionError(f"theta is not {T}-periodic near t={t:.6g}")


def monodromy(problem: OdeProblem, rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """Fundamental matrix after one period; columns start from (1,0) and (0,1)."""
    _check_periodic(problem)
    T = problem.period

    def f(t, y):
        th = problem.theta(t)
        return [y[1], th * y[0], y[3], th * y[2]]

    sol = integrate.solve_ivp(
        f, (0.0, T), [1.0, 0.0, 0.0, 1.0], method="RK45", rtol=rtol, atol=atol, max_step=T / 256
    )
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}", float(sol.t[-1]))
    y = sol.y[:, -1]
    return np.array([[y[0], y[2]], [y[1], y[3]]])


def _kernel_dim(m: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s <= tol * max(1.0, np.abs(m).max())))


@dataclass(frozen=True)
class Coexistence:
    verdict: str  # all_periodic | one_periodic_ray | none
    dim_periodic: int
    dim_antiperiodic: int
    monodromy: np.ndarray

    @property
    def dim(self) -> int:
        return max(self.dim_periodic, self.dim_antiperiodic)


def coexistence(problem: OdeProblem, tol: float = COEXIST_TOL) -> Coexistence:
    m = monodromy(problem)
    eye = np.eye(2)
    dim_p = _kernel_dim(m - eye, tol)
    dim_a = _kernel_dim(m + eye, tol)
    if np.abs(m - eye).max() < tol or np.abs(m + eye).max() < tol:
        verdict = "all_periodic"
    elif dim_p or dim_a:
        verdict = "one_periodic_ray"
    else:
        verdict = "none"
    return Coexistence(verdict, dim_p, dim_a, m)


@dataclass(frozen=True)
class MonotoneRatioWitness:
    t: np.ndarray
    ratio: np.ndarray
    wronskian: float
    min_slope: float
    increasing: bool
    strictly_monotone: bool


def positive_excludes_allperiodic(s1, s2, window: tuple[float, float], n: int = CURVATURE_GRID) -> MonotoneRatioWitness:
    """Certificate that a positive solution and an independent one are not both periodic.

    ``(s2/s1)' = W / s1^2`` with a nonzero constant Wronskian ``W``, so the
    ratio is strictly monotone on any window.
    """
    ts = np.linspace(window[0], window[1], n)
    v1 = np.array([_value_and_slope(s1, t)[0] for t in ts])
    if np.any(v1 <= 0):
        raise PreconditionError("first solution is not positive on the window")
    w_mean, w_spread = wronskian_spread(s1, s2, ts)
    if abs(w_mean) <= 1e-12:
        raise PreconditionError("Wronskian vanishes: solutions are dependent")
    v2 = np.array([_value_and_slope(s2, t)[0] for t in ts])
    ratio = v2 / v1
    slopes = np.array([wronskian(s1, s2, t) for t in ts]) / v1**2
    steps = np.diff(ratio)
    increasing = w_mean > 0
    strict = bool(np.all(steps > 0) if increasing else np.all(steps < 0))
    return MonotoneRatioWitness(ts, ratio, w_mean, float(np.min(np.abs(slopes))), increasing, strict)


def surface_metric(v: ScalarField, window: tuple[float, float], name: str = "") -> MetricChart:
    """``dt^2 + v(t)^2 dx^2`` on ``window x [0, 1)`` with exact metric derivatives."""
    chart = Chart((window[0], 0.0), (window[1], 1.0), {1: 1.0})

    def g(p):
        return np.diag([1.0, v(p[:1]) ** 2])

    def dg(p):
        t = p[:1]
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = 2.0 * v(t) * v.gradient(t)[0]
        return out

    return MetricChart(chart, g, name, dg)


def gauss_curvature_fd(v: ScalarField, t: float, window: tuple[float, float], h: float = 1e-4) -> float:
    m = surface_metric(v, window)
    return 0.5 * curvature(m, np.array([t, 0.5]), h).scalar


@dataclass(frozen=True)
class SurfacePair:
    v1: ScalarField
    v2: ScalarField
    window: tuple[float, float]
    tail_checked: bool = True

    def tau(self, t: float, which: int = 1) -> float:
        v = self.v1 if which == 1 else self.v2
        p = np.array([t])
        return -float(v.hessian(p)[0, 0]) / v(p)

    def metrics(self) -> tuple[MetricChart, MetricChart]:
        return surface_metric(self.v1, self.window, "g1"), surface_metric(self.v2, self.window, "g2")

    def grid(self, n: int = CURVATURE_GRID) -> np.ndarray:
        return np.linspace(self.window[0], self.window[1], n)

    def curvature_gap(self, n: int = CURVATURE_GRID) -> float:
        return max(abs(self.tau(t, 1) - self.tau(t, 2)) for t in self.grid(n))

    def wronskian_stats(self, n: int = CURVATURE_GRID) -> tuple[float, float]:
        return wronskian_spread(self.v1, self.v2, self.grid(n))

    def validate(self, tol: float = 1e-6) -> None:
        ts = self.grid()
        for v in (self.v1, self.v2):
            if min(v(np.array([t])) for t in ts) <= 0:
                raise ConstructionError("surface warping function is not positive on the window")
        gap = self.curvature_gap()
        if gap > tol:
            raise ConstructionError("curvature functions differ", gap)
        w, spread = self.wronskian_stats()
        if spread > 1e-7 * max(1.0, abs(w)):
            raise ConstructionError("Wronskian is not constant", spread)


def build_isocurved_pair(
    v1: ScalarField,
    C2: float,
    window: tuple[float, float] = (-2.0, 2.0),
    tail_bound: float | None = None,
    to_infinity: bool = False,
) -> SurfacePair:
    """Second positive solution ``v2 = v1 * u`` with ``u(t) = int_0^t v1^-2 + C2``.

    Positivity needs ``u(-inf) >= 0``.  With ``to_infinity`` the integral is
    taken to ``-inf``; otherwise it is checked at the left window edge,
    lowered by ``tail_bound`` (an upper bound of the remaining tail integral)
    when one is declared.  Window-only checks are flagged on the result.
    """
    lo, hi = window

    def inv_sq(s):
        with np.errstate(over="ignore"):
            try:
                return 1.0 / v1(np.array([s])) ** 2
            except OverflowError:
                return 0.0
            except ZeroDivisionError:
                return np.inf

    def u(t):
        val, _ = integrate.quad(inv_sq, 0.0, t, epsabs=1e-14, epsrel=1e-13, limit=200)
        return val + C2

    if to_infinity:
        left, _ = integrate.quad(inv_sq, 0.0, -np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
        left += C2
        tail_checked = True
    else:
        left = u(lo) - (tail_bound or 0.0)
        tail_checked = tail_bound is not None
    if not left >= 0:
        # a non-finite value means the integral of v1^-2 diverges at -inf
        raise ConstructionError("positivity condition u(-inf) >= 0 fails", left)

    def func(p):
        return v1(p) * u(p[0])

    def grad(p):
        t = p[0]
        a = v1(p)
        da = v1.gradient(p)[0]
        return np.array([da * u(t) + 1.0 / a])

    def hess(p):
        # v2'' = v1'' u + 2 v1' u' + v1 u'',  u' = 1/v1^2,  u'' = -2 v1'/v1^3
        t = p[0]
        a = v1(p)
        da = v1.gradient(p)[0]
        dda = v1.hessian(p)[0, 0]
        du = 1.0 / a**2
        ddu = -2.0 * da / a**3
        return np.array([[dda * u(t) + 2 * da * du + a * ddu]])

    pair = SurfacePair(v1, ScalarField(func, grad, hess, "v2"), window, tail_checked)
    pair.validate()
    return pair


@dataclass(frozen=True)
class NonIsometryReport:
    verdict: str  # not_isometric | isometric | inconclusive
    window: tuple[float, float]
    min_log_derivative_gap: float
    max_log_derivative_gap: float
    wronskian: float
    wronskian_spread: float
    tau_monotone: bool
    reason: str = ""


def _longest_monotone_run(d: np.ndarray, tol: float) -> tuple[int, int]:
    """Index range ``[lo, hi]`` of the longest strictly monotone stretch of samples."""
    best = (0, 0)
    for sign in (1.0, -1.0):
        start = 0
        for i, ok in enumerate(np.append(sign * d > tol, False)):
            if not ok:
                if i - start > best[1] - best[0]:
                    best = (start, i)
                start = i + 1
    return best


def non_isometry_witness(pair: SurfacePair, window: tuple[float, float] | None = None, n: int = CURVATURE_GRID) -> NonIsometryReport:
    """Obstruction to an isometry between the two surfaces of ``pair``.

    An isometry must fix the fibres ``t = const`` where the curvature is
    strictly monotone and preserve their second fundamental forms
    ``v_i'/v_i``; a nonzero gap together with a nonzero constant Wronskian
    rules it out.
    """
    window = window or pair.window
    ts = np.linspace(window[0], window[1], n)
    taus = np.array([pair.tau(t) for t in ts])
    scale = max(1.0, float(np.abs(taus).max()))
    lo, hi = _longest_monotone_run(np.diff(taus), 1e-12 * scale)
    if (lo, hi) != (0, n - 1) and hi - lo >= 8:
        # the curvature levels still pin fibres inside a strictly monotone stretch
        window = (float(ts[lo]), float(ts[hi]))
        ts = np.linspace(window[0], window[1], n)
        taus = np.array([pair.tau(t) for t in ts])
    d = np.diff(taus)
    monotone = bool(np.all(d > 1e-12 * scale) or np.all(d < -1e-12 * scale))
    w, spread = wronskian_spread(pair.v1, pair.v2, ts)
    gaps = []
    for t in ts:
        p = np.array([t])
        g1 = pair.v1.gradient(p)[0] / pair.v1(p)
        g2 = pair.v2.gradient(p)[0] / pair.v2(p)
        gaps.append(abs(g1 - g2))
    gaps = np.array(gaps)
    if abs(w) <= 1e-10 * max(1.0, spread):
        return NonIsometryReport("isometric", window, float(gaps.min()), float(gaps.max()), w, spread, monotone,
                                 "dependent warping functions: rescaling x is an isometry")
    if not monotone:
        return NonIsometryReport("inconclusive", window, float(gaps.min()), float(gaps.max()), w, spread, monotone,
                                 "curvature is not strictly monotone on the window")
    verdict = "not_isometric" if gaps.min() > 0 else "inconclusive"
    return NonIsometryReport(verdict, window, float(gaps.min()), float(gaps.max()), w, spread, monotone)


def erf_pair(window: tuple[float, float] = (-2.0, 2.0)) -> SurfacePair:
    """Closed-form pair ``v1 = exp(t^2/2)``, ``v2 = v1 (sqrt(pi)/2 erf(t) + 1)``."""
    t = sp.Symbol("t")
    v1 = sp.exp(t**2 / 2)
    v2 = v1 * (sp.sqrt(sp.pi) / 2 * sp.erf(t) + 1)
    return SurfacePair(ScalarField.from_expr(v1, [t], "v1"), ScalarField.from_expr(v2, [t], "v2"), window)
