"""Model space forms and the closed-form bases of ``W(F; -tau g_F)``.

Spheres use nested polar caps, hyperbolic space geodesic polar coordinates
``dr^2 + (sinh(a r)/a)^2 g_S`` with ``a = sqrt(-tau)``.  A one-dimensional
fiber may carry any constant ``tau`` or a function of ``t``; the latter is
solved numerically by :mod:`hill`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from . import hill
from .errors import CapabilityError, ConstancyError
from .geomkit import Chart, MetricChart, ScalarField, gradient_vector
from .solspace import mu_gram, numerical_rank

KINDS = ("sphere", "euclidean", "hyperbolic")
MAX_DIM = 3
SAMPLE_INSET = 0.05
POLAR_INSET = 0.25  # keeps FD stencils away from the coordinate singularities of polar charts
MU_TOL = 1e-7


@dataclass(frozen=True)
class SpaceFormSpec:
    kind: str
    dim: int
    tau: object = None  # float, or callable t -> float when dim == 1
    window: tuple[float, float] = (-3.0, 3.0)
    radius: float = 2.0  # extent of the hyperbolic polar chart

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space form kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        tau = self.tau
        if tau is None:
            tau = {"sphere": 1.0, "euclidean": 0.0, "hyperbolic": -1.0}[self.kind]
            object.__setattr__(self, "tau", tau)
        if callable(tau):
            if self.dim != 1:
                raise ValueError("a function-valued tau needs a one-dimensional fiber")
            return
        tau = float(tau)
        object.__setattr__(self, "tau", tau)
        if self.kind == "sphere" and tau != 1.0:
            raise ValueError("sphere fibers are the unit sphere (tau = 1)")
        if self.kind == "hyperbolic" and not tau < 0:
            raise ValueError("hyperbolic fibers need tau < 0")
        if self.kind == "euclidean" and self.dim > 1 and tau != 0.0:
            raise ValueError("euclidean fibers of dimension > 1 have tau = 0")

    @property
    def constant_tau(self) -> bool:
        return not callable(self.tau)


@dataclass(frozen=True)
class SpaceFormModel:
    spec: SpaceFormSpec
    metric: MetricChart
    basis: tuple[ScalarField, ...]
    inset: float = SAMPLE_INSET

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def tau(self):
        return self.spec.tau

    def tau_at(self, p) -> float:
        if callable(self.tau):
            return float(self.tau(float(np.atleast_1d(p)[0])))
        return float(self.tau)

    def sample_points(self, n: int, seed: int = 0) -> np.ndarray:
        return self.metric.chart.sample(n, np.random.default_rng(seed), self.inset)

    def grid(self, n: int = 16) -> np.ndarray:
        return self.metric.chart.grid(n, self.inset)


def _sym_field(expr, coords, name=None) -> ScalarField:
    return ScalarField.from_expr(expr, coords, name or str(expr))


def _polar_metric(radial, coords, chart, name) -> MetricChart:
    """``dx_0^2 + radial^2 (dx_1^2 + sin^2 x_1 dx_2^2 + ...)``."""
    k = len(coords)
    diag = [sp.Integer(1)]
    factor = radial**2
    for i in range(1, k):
        diag.append(factor)
        factor = factor * sp.sin(coords[i]) ** 2
    return MetricChart.from_expr(sp.diag(*diag), coords, chart, name)


def _sphere_directions(coords) -> list:
    """Unit vector on ``S^{k-1}`` in nested polar angles (``S^0`` gives one coordinate)."""
    if not coords:
        return [sp.Integer(1)]
    out = []
    prefix = sp.Integer(1)
    for i, c in enumerate(coords):
        if i == len(coords) - 1:
            out += [prefix * sp.cos(c), prefix * sp.sin(c)]
        else:
            out.append(prefix * sp.cos(c))
            prefix = prefix * sp.sin(c)
    return out


def _angle_chart(k: int, first: tuple[float, float]) -> Chart:
    """First axis ``first``, polar angles in ``(0, pi)``, last axis periodic ``2 pi``."""
    lower = [first[0]] + [0.0] * (k - 1)
    upper = [first[1]] + [np.pi] * (k - 1)
    periodic = {}
    if k >= 2:
        upper[-1] = 2 * np.pi
        periodic = {k - 1: 2 * np.pi}
    return Chart(tuple(lower), tuple(upper), periodic)


def _make_sphere(spec: SpaceFormSpec) -> SpaceFormModel:
    k = spec.dim
    coords = sp.symbols(f"x0:{k}", real=True)
    if k == 1:
        chart = Chart((0.0,), (2 * np.pi,), {0: 2 * np.pi})
        metric = MetricChart.from_expr(sp.Matrix([[1]]), coords, chart, "S1")
        basis = (_sym_field(sp.cos(coords[0]), coords), _sym_field(sp.sin(coords[0]), coords))
        return SpaceFormModel(spec, metric, basis)
    chart = _angle_chart(k, (0.0, np.pi))
    metric = _polar_metric(sp.sin(coords[0]), coords, chart, f"S{k}")
    r = coords[0]
    fields = [sp.cos(r)] + [sp.sin(r) * d for d in _sphere_directions(coords[1:])]
    return SpaceFormModel(spec, metric, tuple(_sym_field(f, coords) for f in fields), POLAR_INSET)


def _make_euclidean(spec: SpaceFormSpec) -> SpaceFormModel:
    k = spec.dim
    coords = sp.symbols(f"x0:{k}", real=True)
    lo, hi = spec.window
    chart = Chart((lo,) * k, (hi,) * k)
    metric = MetricChart.from_expr(sp.eye(k), coords, chart, f"R{k}")
    fields = [sp.Integer(1)] + list(coords)
    basis = tuple(ScalarField.from_expr(f, coords, str(f)) for f in fields)
    return SpaceFormModel(spec, metric, basis)


def _make_line(spec: SpaceFormSpec) -> SpaceFormModel:
    """Real line with any constant or function ``tau``."""
    t = sp.Symbol("x0", real=True)
    lo, hi = spec.window
    chart = Chart((lo,), (hi,))
    metric = MetricChart.from_expr(sp.Matrix([[1]]), [t], chart, "R1")
    tau = spec.tau
    if callable(tau):
        prob = hill.OdeProblem.from_tau(tau, (lo, hi))
        mid = 0.5 * (lo + hi)
        basis = (
            hill.solve_ivp(prob, 1.0, 0.0, mid).as_field("h1"),
            hill.solve_ivp(prob, 0.0, 1.0, mid).as_field("h2"),
        )
        return SpaceFormModel(spec, metric, basis, inset=0.0)
    if tau > 0:
        a = sp.sqrt(sp.Float(tau))
        fields = [sp.cos(a * t), sp.sin(a * t)]
    elif tau == 0:
        fields = [sp.Integer(1), t]
    else:
        a = sp.sqrt(sp.Float(-tau))
        fields = [sp.cosh(a * t), sp.sinh(a * t)]
    return SpaceFormModel(spec, metric, tuple(_sym_field(f, [t]) for f in fields))


def _make_hyperbolic(spec: SpaceFormSpec) -> SpaceFormModel:
    k = spec.dim
    if k == 1:
        return _make_line(spec)
    coords = sp.symbols(f"x0:{k}", real=True)
    a = sp.sqrt(sp.Float(-spec.tau))
    r = coords[0]
    chart = _angle_chart(k, (0.0, spec.radius))
    metric = _polar_metric(sp.sinh(a * r) / a, coords, chart, f"H{k}")
    fields = [sp.cosh(a * r)] + [sp.sinh(a * r) * d for d in _sphere_directions(coords[1:])]
    return SpaceFormModel(spec, metric, tuple(_sym_field(f, coords) for f in fields), POLAR_INSET)


def make_space_form(spec: SpaceFormSpec) -> SpaceFormModel:
    if spec.dim > MAX_DIM:
        raise CapabilityError(f"space forms are implemented for dimension <= {MAX_DIM}, got {spec.dim}")
    if spec.kind == "sphere":
        return _make_sphere(spec)
    if spec.kind == "hyperbolic":
        return _make_hyperbolic(spec)
    if spec.dim == 1:
        return _make_line(spec)
    return _make_euclidean(spec)


def mu_values(model: SpaceFormModel, v: ScalarField, points) -> np.ndarray:
    vals = []
    for p in np.atleast_2d(points):
        grad = gradient_vector(model.metric, v, p)
        vals.append(model.tau_at(p) * v(p) ** 2 + model.metric.inner(p, grad, grad))
    return np.array(vals)


def mu_of_solution(model: SpaceFormModel, v: ScalarField, points, tol: float = MU_TOL) -> float:
    """``tau v^2 + |grad v|^2``, asserted constant over ``points``."""
    vals = mu_values(model, v, points)
    spread = float(vals.max() - vals.min())
    if spread > tol * max(1.0, float(np.abs(vals).max())):
        raise ConstancyError(f"mu-bar is not constant: spread {spread:.3e}", spread)
    return float(vals.mean())


@dataclass(frozen=True)
class MuGram:
    matrix: np.ndarray
    rank: int
    spread: float

    @property
    def nullity(self) -> int:
        return self.matrix.shape[0] - self.rank


def gram_mu(model: SpaceFormModel, n_points: int = 10, tol: float = MU_TOL, seed: int = 0) -> MuGram:
    """Gram matrix of the mu-bar pairing on the basis, checked constant over ``n_points``."""
    if not model.spec.constant_tau:
        raise ValueError("mu-bar Gram matrix needs a constant tau")
    pts = model.sample_points(n_points, seed)
    grams = np.array([mu_gram(model.metric, model.tau, model.basis, p) for p in pts])
    spread = float(np.abs(grams - grams[0]).max())
    if spread > tol * max(1.0, float(np.abs(grams).max())):
        raise ConstancyError(f"mu-bar Gram matrix varies by {spread:.3e}", spread)
    g = grams.mean(axis=0)
    g = 0.5 * (g + g.T)
    return MuGram(g, numerical_rank(g), spread)


def space_form_metric(kappa: float, dim: int, extent: float = 2.0) -> SpaceFormModel:
    """Model of constant curvature ``kappa``, used for Einstein fibers."""
    if kappa > 0:
        if not np.isclose(kappa, 1.0):
            raise CapabilityError("only the unit sphere is modelled for positive curvature")
        return make_space_form(SpaceFormSpec("sphere", dim))
    if kappa == 0:
        return make_space_form(SpaceFormSpec("euclidean", dim, 0.0))
    return make_space_form(SpaceFormSpec("hyperbolic", dim, kappa, radius=extent))


def tau_callable(tau) -> Callable[[float], float]:
    if callable(tau):
        return tau
    c = float(tau)
    return lambda t: c

