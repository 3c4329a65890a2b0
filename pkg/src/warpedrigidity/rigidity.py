"""Killing fields from pairs of solutions, the mu-bar Lie algebra on ``/\\^2 W``,
and the classifier for pairs of warped products with matching curvature.

Wedges are stored in basis-pair coordinates.  For ``z = e_i /\\ e_j`` the
endomorphism ``L(x) = mu(e_j, x) e_i - mu(e_i, x) e_j`` has the matrix
``outer(e_i, G[j]) - outer(e_j, G[i])`` where ``G`` is the mu-bar Gram matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import hill
from .errors import (
    DegenerateFormError,
    GeometryError,
    KillingError,
)
from .geomkit import (
    DEFAULT_STEP,
    MetricChart,
    ScalarField,
    VectorField,
    covariant_hessian,
    curvature,
    gradient_vector,
    lie_derivative_metric,
    vector_bracket,
)
from .solspace import QuadraticFormField, SolutionSpace, evaluation_matrix, numerical_rank
from .spaceforms import mu_values, space_form_metric
from .warp import BaseSpace, WarpedProductSpec, build_warped, decompose

KILLING_TOL = 1e-6
RICCI_TOL = 1e-6
TAU_SPREAD = 1e-6
SCALAR_TOL = 1e-6


# --- wedges -------------------------------------------------------------------------


@dataclass(frozen=True)
class WedgeElement:
    """Finite sum of ``c * e_i /\\ e_j`` with ``i < j``."""

    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean: dict = {}
        for (i, j), c in dict(self.terms).items():
            if i == j:
                continue
            if i > j:
                i, j, c = j, i, -c
            clean[(i, j)] = clean.get((i, j), 0.0) + float(c)
        object.__setattr__(self, "terms", {k: c for k, c in sorted(clean.items()) if c != 0.0})

    @classmethod
    def elementary(cls, i: int, j: int, c: float = 1.0) -> WedgeElement:
        return cls({(i, j): c})

    @classmethod
    def from_vectors(cls, v, w) -> WedgeElement:
        """``v /\\ w`` for coefficient vectors in the solution basis."""
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        return cls({(i, j): v[i] * w[j] - v[j] * w[i] for i, j in itertools.combinations(range(v.size), 2)})

    def __add__(self, other: WedgeElement) -> WedgeElement:
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return WedgeElement(out)

    def __mul__(self, s: float) -> WedgeElement:
        return WedgeElement({k: s * c for k, c in self.terms.items()})

    __rmul__ = __mul__

    def __sub__(self, other: WedgeElement) -> WedgeElement:
        return self + other * -1.0

    def norm(self) -> float:
        return float(np.sqrt(sum(c * c for c in self.terms.values())))

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.norm() <= tol

    def to_vector(self, n: int) -> np.ndarray:
        pairs = list(itertools.combinations(range(n), 2))
        return np.array([self.terms.get(pq, 0.0) for pq in pairs])


def _gram_of(S) -> np.ndarray:
    if isinstance(S, SolutionSpace):
        chart = S.manifold.chart
        mid = np.array([
            chart.lower[i] if i in chart.periodic else 0.5 * (chart.lower[i] + chart.upper[i])
            for i in range(chart.dim)
        ])
        return S.gram(mid)
    g = getattr(S, "matrix", S)
    g = np.asarray(g, dtype=float)
    return 0.5 * (g + g.T)


def _check_nullity(G: np.ndarray) -> None:
    nullity = G.shape[0] - numerical_rank(G)
    if nullity > 1 and np.abs(G).max() > 0:
        raise DegenerateFormError(f"mu-bar Gram matrix has nullity {nullity} > 1")
    if np.abs(G).max() == 0 and G.shape[0] > 1:
        raise DegenerateFormError("mu-bar Gram matrix vanishes")


@dataclass(frozen=True)
class MuEndomorphism:
    matrix: np.ndarray
    source: WedgeElement

    def antisymmetry_defect(self, G: np.ndarray) -> float:
        return float(np.abs(G @ self.matrix + self.matrix.T @ G).max())


def wedge_endomorphism(S, z: WedgeElement) -> MuEndomorphism:
    """Matrix of ``L(x) = mu(w, x) v - mu(v, x) w`` extended linearly in ``z``.

    ``S`` is the mu-bar Gram matrix, a :class:`MuGram`, or a solution space
    whose Gram matrix is read at the chart centre.
    """
    G = _gram_of(S)
    _check_nullity(G)
    n = G.shape[0]
    L = np.zeros((n, n))
    for (i, j), c in z.terms.items():
        L[i, :] += c * G[j, :]
        L[j, :] -= c * G[i, :]
    return MuEndomorphism(L, z)


def bracket_wedge(S, z1: WedgeElement, z2: WedgeElement) -> WedgeElement:
    """``[v1 /\\ w1, v2 /\\ w2] = -mu(v1,v2) w1/\\w2 + mu(v1,w2) w1/\\v2 + mu(v2,w1) v1/\\w2 - mu(w1,w2) v1/\\v2``."""
    G = _gram_of(S)
    _check_nullity(G)
    out: dict = {}

    def add(a, b, c):
        if a == b or c == 0.0:
            return
        if a > b:
            a, b, c = b, a, -c
        out[(a, b)] = out.get((a, b), 0.0) + c

    for (i, j), c1 in z1.terms.items():
        for (k, l), c2 in z2.terms.items():
            c = c1 * c2
            add(j, l, -c * G[i, k])
            add(j, k, c * G[i, l])
            add(i, l, c * G[k, j])
            add(i, k, -c * G[j, l])
    return WedgeElement(out)


def jacobi_defect(S, z1: WedgeElement, z2: WedgeElement, z3: WedgeElement) -> float:
    """Norm of the cyclic sum of endomorphism commutators."""
    L1, L2, L3 = (wedge_endomorphism(S, z).matrix for z in (z1, z2, z3))

    def com(a, b):
        return a @ b - b @ a

    return float(np.abs(com(L1, com(L2, L3)) + com(L2, com(L3, L1)) + com(L3, com(L1, L2))).max())


def commutator_defect(S, z1: WedgeElement, z2: WedgeElement) -> float:
    """``|[L1, L2] - L(z3)|`` with ``z3 = bracket_wedge(z1, z2)``."""
    L1 = wedge_endomorphism(S, z1).matrix
    L2 = wedge_endomorphism(S, z2).matrix
    L3 = wedge_endomorphism(S, bracket_wedge(S, z1, z2)).matrix
    return float(np.abs(L1 @ L2 - L2 @ L1 - L3).max())


# --- Killing fields -----------------------------------------------------------------


def _pair_field(m: MetricChart, v: ScalarField, w: ScalarField) -> VectorField:
    def func(p):
        return m.inverse(p) @ (v(p) * w.gradient(p) - w(p) * v.gradient(p))

    return VectorField(func)


def iota(S: SolutionSpace, v: ScalarField, w: ScalarField, points=None, tol: float = KILLING_TOL) -> VectorField:
    """``v grad w - w grad v``; Killing residual checked on ``points`` when given."""
    X = _pair_field(S.manifold, v, w)
    if points is not None:
        res = killing_residual(S.manifold, X, points)
        if res > tol:
            raise KillingError("v grad w - w grad v is not Killing: v and w do not share q", res)
    return X


def iota_wedge(S: SolutionSpace, z: WedgeElement) -> VectorField:
    fields = [(c, _pair_field(S.manifold, S.basis[i], S.basis[j])) for (i, j), c in z.terms.items()]
    dim = S.manifold.dim

    def func(p):
        out = np.zeros(dim)
        for c, X in fields:
            out += c * X(p)
        return out

    return VectorField(func)


def killing_residual(m: MetricChart, X: VectorField, points, h: float = DEFAULT_STEP) -> float:
    return max(float(np.abs(lie_derivative_metric(m, X, p, h)).max()) for p in np.atleast_2d(points))


@dataclass(frozen=True)
class HomomorphismReport:
    max_deviation: float
    bracket: WedgeElement
    points: int


def homomorphism_check(S: SolutionSpace, z1: WedgeElement, z2: WedgeElement, points, gram=None) -> HomomorphismReport:
    """``max |[iota z1, iota z2] - iota [z1, z2]|`` over ``points``."""
    G = _gram_of(S if gram is None else gram)
    z3 = bracket_wedge(G, z1, z2)
    X1, X2, X3 = iota_wedge(S, z1), iota_wedge(S, z2), iota_wedge(S, z3)
    pts = np.atleast_2d(points)
    dev = max(float(np.abs(vector_bracket(X1, X2, p) - X3(p)).max()) for p in pts)
    return HomomorphismReport(dev, z3, len(pts))


def random_wedges(n: int, count: int, rng: np.random.Generator) -> list[WedgeElement]:
    pairs = list(itertools.combinations(range(n), 2))
    return [WedgeElement(dict(zip(pairs, rng.normal(size=len(pairs))))) for _ in range(count)]


# --- pairs of warped products -------------------------------------------------------


@dataclass(frozen=True)
class EinsteinPairSpec:
    """``E_i = M x_{w_i} N_i`` with ``N_i`` the ``d``-dimensional space form of curvature ``kappa_i``.

    ``structure``, when given, is the warped splitting ``M = B x_u F`` in which
    ``w_i = u v_i``; without it ``M`` is its own fiber (``u = 1``), which
    requires ``q`` to be a multiple of the metric.
    """

    M: MetricChart
    w1: ScalarField
    w2: ScalarField
    d: int
    kappa1: float
    kappa2: float
    structure: WarpedProductSpec | None = None
    compact: bool = False
    inset: float = 0.05
    n_grid: int = 9
    name: str = ""

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("fiber dimension d must be at least 1")

    def grid(self, n: int | None = None) -> np.ndarray:
        return self.M.chart.grid(n or self.n_grid, self.inset)

    def swapped(self) -> EinsteinPairSpec:
        return EinsteinPairSpec(
            self.M, self.w2, self.w1, self.d, self.kappa2, self.kappa1,
            self.structure, self.compact, self.inset, self.n_grid, self.name,
        )


@dataclass(frozen=True)
class RicciRestrictionReport:
    max_q_deviation: float
    max_formula_deviation: float
    ok: bool


def _rel(a, b) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).max() / max(1.0, float(np.abs(b).max())))


def total_space(spec: EinsteinPairSpec, side: int) -> WarpedProductSpec:
    w, kappa = (spec.w1, spec.kappa1) if side == 1 else (spec.w2, spec.kappa2)
    return build_warped(BaseSpace(spec.M, w, u_min=0.0), space_form_metric(kappa, spec.d))


def ricci_restriction_check(
    spec: EinsteinPairSpec, grid=None, tol: float = RICCI_TOL, fd_points: int = 3
) -> tuple[QuadraticFormField, RicciRestrictionReport]:
    """Shared ``q = Hess w_i / w_i`` and the formula ``Ric^E_i|_M = Ric - (d/w_i) Hess w_i``.

    The formula is checked against finite-difference curvature of ``E_i`` on
    the first ``fd_points`` grid points.
    """
    pts = spec.grid() if grid is None else np.atleast_2d(grid)
    m = spec.M
    qdev = 0.0
    for p in pts:
        q1 = covariant_hessian(m, spec.w1, p) / spec.w1(p)
        q2 = covariant_hessian(m, spec.w2, p) / spec.w2(p)
        qdev = max(qdev, _rel(q1, q2))
    fdev = 0.0
    n = m.dim
    for side, w in ((1, spec.w1), (2, spec.w2)):
        E = total_space(spec, side)
        y0 = E.fiber.grid(3)[len(E.fiber.grid(3)) // 2]
        for p in pts[:fd_points]:
            ric_M = curvature(m, p).ricci if n > 1 else np.zeros((1, 1))
            formula = ric_M - (spec.d / w(p)) * covariant_hessian(m, w, p)
            fd = curvature(E.total_metric, np.concatenate([p, y0])).ricci[:n, :n]
            fdev = max(fdev, _rel(fd, formula))
    q = QuadraticFormField(lambda p: covariant_hessian(m, spec.w1, p) / spec.w1(p), m)
    return q, RicciRestrictionReport(qdev, fdev, qdev < tol and fdev < 1e-4)


@dataclass(frozen=True)
class FiberData:
    """The fiber ``F`` of ``M`` with ``v_i = w_i / u`` and its ``tau``."""

    metric: MetricChart
    v1: ScalarField
    v2: ScalarField
    k: int
    tau: object  # callable on fiber points
    points: np.ndarray
    z_max: float = 0.0


def fiber_data(spec: EinsteinPairSpec, q: QuadraticFormField, grid=None) -> FiberData:
    if spec.structure is not None:
        wp = spec.structure
        pts = wp.grid(8, 8)
        d1 = decompose(wp, spec.w1, pts)
        d2 = decompose(wp, spec.w2, pts)
        z_max = max(abs(d.z(p[: wp.nb])) for d in (d1, d2) for p in pts)
        return FiberData(wp.fiber.metric, d1.v, d2.v, wp.k, wp.fiber.tau_at, wp.fiber.grid(8), z_max)
    pts = spec.grid() if grid is None else np.atleast_2d(grid)
    k = spec.M.dim

    def tau(y):
        return -float(np.trace(q.operator(y))) / k

    worst = max(_rel(q(p), -tau(p) * spec.M.metric(p)) for p in pts)
    if worst > RICCI_TOL:
        raise GeometryError(f"q is not a multiple of g (deviation {worst:.3e}); a warped structure is required")
    return FiberData(spec.M, spec.w1, spec.w2, k, tau, pts)


@dataclass(frozen=True)
class ScalarEqualityReport:
    lhs: np.ndarray
    rhs: np.ndarray
    max_gap: float
    vacuous: bool

    @property
    def ok(self) -> bool:
        return self.vacuous or self.max_gap < SCALAR_TOL


def _grad_sq(m: MetricChart, v: ScalarField, y) -> float:
    g = gradient_vector(m, v, y)
    return m.inner(y, g, g)


def scalar_equality_check(spec: EinsteinPairSpec, decomposition: FiberData) -> ScalarEqualityReport:
    """``(d-1)/v1^2 (kappa1 - |grad v1|^2) = (d-1)/v2^2 (kappa2 - |grad v2|^2)`` on the fiber grid."""
    fd = decomposition
    d = spec.d
    lhs = np.array([(d - 1) / fd.v1(y) ** 2 * (spec.kappa1 - _grad_sq(fd.metric, fd.v1, y)) for y in fd.points])
    rhs = np.array([(d - 1) / fd.v2(y) ** 2 * (spec.kappa2 - _grad_sq(fd.metric, fd.v2, y)) for y in fd.points])
    gap = float(np.abs(lhs - rhs).max() / max(1.0, float(np.abs(rhs).max())))
    return ScalarEqualityReport(lhs, rhs, gap, d == 1)


def fiber_space(spec: EinsteinPairSpec, fd: FiberData, side: int) -> WarpedProductSpec:
    """``F_i = F x_{v_i} N_i``."""
    v, kappa = (fd.v1, spec.kappa1) if side == 1 else (fd.v2, spec.kappa2)
    return build_warped(BaseSpace(fd.metric, v, u_min=0.0), space_form_metric(kappa, spec.d))


@dataclass(frozen=True)
class FiberRicci:
    closed_form: float
    finite_difference: float

    @property
    def deviation(self) -> float:
        return abs(self.closed_form - self.finite_difference) / max(1.0, abs(self.closed_form))


def fiber_ricci(spec: EinsteinPairSpec, fd: FiberData, side: int, vertical: bool, y) -> FiberRicci:
    """Ricci eigenvalue of ``F_i`` on a horizontal (``F``) or vertical (``N_i``) coordinate direction.

    Horizontal: ``rho_F + tau d`` with ``rho_F = (k-1) tau``.
    Vertical: ``k tau + (d-1)/v_i^2 (kappa_i - |grad v_i|^2)``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    v, kappa = (fd.v1, spec.kappa1) if side == 1 else (fd.v2, spec.kappa2)
    tau = float(fd.tau(y))
    k, d = fd.k, spec.d
    if vertical:
        closed = k * tau + (d - 1) / v(y) ** 2 * (kappa - _grad_sq(fd.metric, v, y))
    else:
        closed = (k - 1) * tau + tau * d
    Fi = fiber_space(spec, fd, side)
    n0 = Fi.fiber.grid(3)[len(Fi.fiber.grid(3)) // 2]
    p = np.concatenate([y, n0])
    rep = curvature(Fi.total_metric, p)
    a = k if vertical else 0
    value = rep.ricci[a, a] / rep.metric[a, a]
    return FiberRicci(float(closed), float(value))


def sectional_spread(m: MetricChart, points) -> tuple[float, float]:
    """Mean and spread of coordinate-plane sectional curvatures over ``points``."""
    vals = []
    n = m.dim
    for p in np.atleast_2d(points):
        rep = curvature(m, p)
        eye = np.eye(n)
        for a, b in itertools.combinations(range(n), 2):
            vals.append(rep.sectional(eye[a], eye[b]))
    vals = np.array(vals)
    return float(vals.mean()), float(vals.max() - vals.min())


@dataclass(frozen=True)
class TheoremCResult:
    verdict: str  # Isometric | ExceptionalSurfacePair | HypothesisFailed
    stage: str
    case: str = ""
    flags: tuple[str, ...] = ()
    details: dict = field(default_factory=dict)
    witness: hill.NonIsometryReport | None = None


def _failed(stage: str, reason: str, flags=(), **details) -> TheoremCResult:
    details["reason"] = reason
    return TheoremCResult("HypothesisFailed", stage, flags=tuple(flags), details=details)


def _total_space_certificate(spec: EinsteinPairSpec, n: int = 4) -> dict:
    out = {}
    for side in (1, 2):
        E = total_space(spec, side)
        pts = E.grid(n, 3)
        mean, spread = sectional_spread(E.total_metric, pts)
        out[f"E{side}_curvature"] = mean
        out[f"E{side}_spread"] = spread
    return out


def classify_theoremC(spec: EinsteinPairSpec) -> TheoremCResult:
    """Pipeline: Ricci restriction, independence, splitting, scalar curvature, tau, cases."""
    pts = spec.grid()
    if min(min(spec.w1(p), spec.w2(p)) for p in pts) <= 0:
        return _failed("invariants", "warping functions must be positive on M")
    rank = max(numerical_rank(np.column_stack([
        np.concatenate([[w(p)], w.gradient(p)]) for w in (spec.w1, spec.w2)
    ])) for p in pts)
    if rank < 2:
        return _failed("dependence", "w1 and w2 are linearly dependent", ("dependent",), rank=rank)
    q, ric = ricci_restriction_check(spec, pts)
    if not ric.ok:
        return _failed("ricci_restriction", "Ricci tensors restricted to TM differ",
                       q_deviation=ric.max_q_deviation, formula_deviation=ric.max_formula_deviation)
    try:
        fd = fiber_data(spec, q, pts)
    except GeometryError as exc:
        return _failed("decomposition", str(exc))
    scal = scalar_equality_check(spec, fd)
    if not scal.ok:
        return _failed("scalar_curvature", "scalar curvatures differ", gap=scal.max_gap)
    taus = np.array([fd.tau(y) for y in fd.points])
    tau_spread = float(taus.max() - taus.min())
    tau_const = tau_spread < TAU_SPREAD
    details = {"k": fd.k, "d": spec.d, "tau_mean": float(taus.mean()), "tau_spread": tau_spread,
               "q_deviation": ric.max_q_deviation, "scalar_gap": scal.max_gap}
    flags = ("scalar_vacuous",) if scal.vacuous else ()
    if fd.k >= 2:
        if not tau_const:
            return _failed("tau", "tau must be constant for k >= 2", tau_spread=tau_spread)
        tau = float(taus.mean())
        mus = [float(np.mean(mu_values(_model_view(fd, tau), v, fd.points))) for v in (fd.v1, fd.v2)]
        gaps = [(spec.d - 1) * (kap - mu) for kap, mu in zip((spec.kappa1, spec.kappa2), mus)]
        details.update(mu1=mus[0], mu2=mus[1])
        if max(abs(g) for g in gaps) > 1e-6:
            return _failed("scalar_curvature", "(d-1)(kappa_i - mu_i) must vanish", gaps=gaps)
        einstein = (fd.k + spec.d - 1) * tau
        devs = [
            abs(fiber_ricci(spec, fd, side, vert, fd.points[len(fd.points) // 2]).finite_difference - einstein)
            for side in (1, 2) for vert in (False, True)
        ]
        details.update(einstein_constant=einstein, einstein_deviation=max(devs))
        details.update(_total_space_certificate(spec))
        return TheoremCResult("Isometric", "case_A", "A", flags, details)
    if tau_const:
        tau = float(taus.mean())
        details.update(_total_space_certificate(spec))
        return TheoremCResult("Isometric", "case_B1", "B.1", flags, details)
    if spec.d >= 2:
        return _failed("case_B2", "nonconstant tau with d >= 2 passed the scalar check: numerical red flag",
                       ("red_flag",), **details)
    if spec.compact:
        return _failed("case_B2", "nonconstant tau on a compact M: numerical red flag", ("red_flag",), **details)
    chart = fd.metric.chart
    window = (chart.lower[0] + spec.inset, chart.upper[0] - spec.inset)
    pair = hill.SurfacePair(fd.v1, fd.v2, window)
    witness = hill.non_isometry_witness(pair)
    details.update(curvature_gap=pair.curvature_gap())
    return TheoremCResult("ExceptionalSurfacePair", "case_B2", "B.2", flags, details, witness)


@dataclass(frozen=True)
class _ModelView:
    metric: MetricChart
    tau_value: float

    def tau_at(self, p) -> float:
        return self.tau_value


def _model_view(fd: FiberData, tau: float) -> _ModelView:
    return _ModelView(fd.metric, tau)


def verdicts_swap_symmetric(spec: EinsteinPairSpec) -> bool:
    return classify_theoremC(spec).verdict == classify_theoremC(spec.swapped()).verdict


def all_pairs(n: int) -> Iterable[tuple[int, int]]:
    return itertools.combinations(range(n), 2)


def evaluation_rank_pair(m: MetricChart, w1: ScalarField, w2: ScalarField, p) -> int:
    S = SolutionSpace(m, QuadraticFormField(lambda x: np.zeros((m.dim, m.dim)), m), (w1, w2))
    return numerical_rank(evaluation_matrix(S, p))
