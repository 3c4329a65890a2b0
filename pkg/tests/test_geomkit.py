import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from warpedrigidity.errors import DegenerateMetricError, MarginError
from warpedrigidity.geomkit import (
    Chart,
    MetricChart,
    ScalarField,
    VectorField,
    christoffel,
    covariant_hessian,
    curvature,
    laplacian,
    lie_derivative_metric,
    vector_bracket,
)

x, y = sp.symbols("x y", real=True)
r, th, ph = sp.symbols("r theta phi", real=True)


def sym_christoffel(g, coords):
    """Christoffel symbols straight from the textbook formula, evaluated by sympy."""
    n = len(coords)
    ginv = g.inv()
    return [[[sp.simplify(sum(ginv[k, l] * (sp.diff(g[j, l], coords[i]) + sp.diff(g[i, l], coords[j])
                                             - sp.diff(g[i, j], coords[l])) for l in range(n)) / 2)
              for j in range(n)] for i in range(n)] for k in range(n)]


def flat(n=2):
    coords = sp.symbols(f"x0:{n}", real=True)
    return MetricChart.from_expr(sp.eye(n), coords, Chart((-3.0,) * n, (3.0,) * n), "flat")


def polar():
    g = sp.diag(1, r**2)
    return g, MetricChart.from_expr(g, [r, th], Chart((0.5, 0.0), (4.0, 2 * np.pi), {1: 2 * np.pi}), "polar")


def sphere():
    g = sp.diag(1, sp.sin(th) ** 2)
    return g, MetricChart.from_expr(g, [th, ph], Chart((0.0, 0.0), (np.pi, 2 * np.pi), {1: 2 * np.pi}), "S2")


class TestChart:
    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            Chart((1.0,), (0.0,))
        with pytest.raises(ValueError):
            Chart((0.0,), (1.0,), {0: -1.0})

    def test_margin_error_near_boundary(self):
        with pytest.raises(MarginError):
            Chart((0.0,), (1.0,)).check_margin(np.array([1e-6]), 1e-4)

    def test_periodic_axis_has_no_margin(self):
        Chart((0.0,), (1.0,), {0: 1.0}).check_margin(np.array([0.0]), 1e-4)

    def test_grid_shape_and_periodic_sampling(self):
        pts = Chart((0.0, 0.0), (1.0, 2.0), {1: 2.0}).grid(4)
        assert pts.shape == (16, 2)
        assert pts[:, 1].max() < 2.0


class TestChristoffel:
    def test_flat_vanishes(self):
        assert np.abs(christoffel(flat(), np.array([0.3, -1.0]))).max() == 0.0

    @pytest.mark.parametrize("analytic", [True, False])
    def test_polar_matches_symbolic(self, analytic):
        g, m = polar()
        oracle = sym_christoffel(g, [r, th])
        p = np.array([2.0, 1.0])
        gam = christoffel(m, p, analytic=analytic)
        for k in range(2):
            for i in range(2):
                for j in range(2):
                    want = float(oracle[k][i][j].subs({r: 2.0, th: 1.0}))
                    assert gam[k, i, j] == pytest.approx(want, abs=1e-7)
        assert gam[0, 1, 1] == pytest.approx(-2.0)
        assert gam[1, 0, 1] == pytest.approx(0.5)

    def test_sphere_entry(self):
        _, m = sphere()
        gam = christoffel(m, np.array([np.pi / 3, 0.2]))
        assert gam[0, 1, 1] == pytest.approx(-np.sin(np.pi / 3) * np.cos(np.pi / 3))

    def test_degenerate_metric_rejected(self):
        m = MetricChart(Chart((-1.0,) * 2, (1.0,) * 2), lambda p: np.diag([1.0, 1e-13]))
        with pytest.raises(DegenerateMetricError):
            christoffel(m, np.zeros(2))


class TestHessian:
    def test_flat_square(self):
        w = ScalarField.from_expr(x**2, [x, y])
        m = MetricChart.from_expr(sp.eye(2), [x, y], Chart((-2.0, -2.0), (2.0, 2.0)))
        assert np.allclose(covariant_hessian(m, w, np.array([0.4, 0.1])), np.diag([2.0, 0.0]))

    def test_sphere_obata_function(self):
        _, m = sphere()
        w = ScalarField.from_expr(sp.cos(th), [th, ph])
        for p in ([0.7, 1.0], [2.0, 4.0]):
            p = np.array(p)
            assert np.allclose(covariant_hessian(m, w, p), -w(p) * m.metric(p), atol=1e-12)

    def test_line_cosh(self):
        t = sp.Symbol("t")
        m = MetricChart.from_expr(sp.Matrix([[1]]), [t], Chart((-2.0,), (2.0,)))
        w = ScalarField.from_expr(sp.cosh(t), [t])
        assert covariant_hessian(m, w, np.array([0.8]))[0, 0] == pytest.approx(np.cosh(0.8))

    def test_fd_convergence_order_two(self):
        _, m = polar()
        w = ScalarField.from_expr(r**3 * sp.cos(th), [r, th])
        p = np.array([1.7, 0.4])
        exact = covariant_hessian(m, w, p)
        bare = w.without_derivatives()
        e1 = np.abs(covariant_hessian(m, bare, p, h=1e-2, analytic=False) - exact).max()
        e2 = np.abs(covariant_hessian(m, bare, p, h=5e-3, analytic=False) - exact).max()
        assert e1 / e2 >= 3.0

    @given(st.floats(-5, 5), st.floats(0.6, 3.5), st.floats(0.0, 6.0))
    def test_constant_field_has_zero_hessian(self, c, a, b):
        _, m = polar()
        h = covariant_hessian(m, ScalarField.constant(c, 2), np.array([a, b]))
        assert np.abs(h).max() < 1e-9

    def test_laplacian_polar(self):
        _, m = polar()
        w = ScalarField.from_expr(r**2, [r, th])
        assert laplacian(m, w, np.array([1.3, 0.0])) == pytest.approx(4.0)


class TestCurvature:
    def test_flat(self):
        rep = curvature(flat(3), np.array([0.1, 0.2, 0.3]))
        assert rep.scalar == 0.0 and np.abs(rep.ricci).max() == 0.0

    def test_round_sphere_scalar(self):
        _, m = sphere()
        rep = curvature(m, np.array([1.1, 0.5]))
        assert rep.scalar == pytest.approx(2.0, abs=1e-8)
        assert rep.sectional([1, 0], [0, 1]) == pytest.approx(1.0, abs=1e-8)
        assert np.allclose(rep.ricci, rep.metric, atol=1e-8)

    def test_half_plane_scalar(self):
        m = MetricChart.from_expr(sp.diag(1 / y**2, 1 / y**2), [x, y], Chart((-2.0, 0.2), (2.0, 3.0)))
        assert curvature(m, np.array([0.0, 1.0])).scalar == pytest.approx(-2.0, abs=1e-7)

    @given(st.floats(0.3, 2.8), st.floats(0.0, 6.2))
    def test_ricci_symmetric_and_bianchi(self, a, b):
        _, m = sphere()
        rep = curvature(m, np.array([a, b]))
        assert np.abs(rep.ricci - rep.ricci.T).max() <= 1e-8 * max(1.0, np.abs(rep.ricci).max())
        assert rep.bianchi_defect() < 1e-6

    def test_margin(self):
        _, m = sphere()
        with pytest.raises(MarginError):
            curvature(m, np.array([1e-4, 0.0]))


class TestLieDerivative:
    m = MetricChart.from_expr(sp.eye(2), [x, y], Chart((-2.0, -2.0), (2.0, 2.0)))

    @pytest.mark.parametrize(
        "field, expected",
        [
            (lambda p: np.array([1.0, 0.0]), np.zeros((2, 2))),
            (lambda p: np.array([-p[1], p[0]]), np.zeros((2, 2))),
            (lambda p: np.array([p[0], 0.0]), np.diag([2.0, 0.0])),
        ],
    )
    def test_flat_examples(self, field, expected):
        out = lie_derivative_metric(self.m, VectorField(field), np.array([0.3, -0.7]))
        assert np.abs(out - expected).max() < 1e-7

    def test_rotation_killing_on_grid(self):
        K = VectorField(lambda p: np.array([-p[1], p[0]]))
        for p in self.m.chart.grid(5, 0.1):
            assert np.abs(lie_derivative_metric(self.m, K, p)).max() < 1e-7


class TestBracket:
    def test_coordinate_fields_commute(self):
        X = VectorField(lambda p: np.array([1.0, 0.0]))
        Y = VectorField(lambda p: np.array([0.0, 1.0]))
        assert np.allclose(vector_bracket(X, Y, np.array([0.2, 0.3])), 0.0)

    def test_rotation_with_translation(self):
        # symbolic oracle: [X, Y]^i = X^k d_k Y^i - Y^k d_k X^i with X = (-y, x), Y = d_x
        X = sp.Matrix([-y, x])
        Y = sp.Matrix([1, 0])
        oracle = (Y.jacobian([x, y]) * X - X.jacobian([x, y]) * Y).subs({x: 0.4, y: -1.1})
        got = vector_bracket(VectorField(lambda p: np.array([-p[1], p[0]])), VectorField(lambda p: np.array([1.0, 0.0])),
                             np.array([0.4, -1.1]))
        assert np.allclose(got, np.array(oracle, dtype=float).ravel())
        assert np.allclose(got, [0.0, -1.0])

    @given(st.floats(-1, 1), st.floats(-1, 1))
    def test_self_bracket_vanishes(self, a, b):
        X = VectorField(lambda p: np.array([np.sin(p[0]) * p[1], p[0] ** 2]))
        assert np.abs(vector_bracket(X, X, np.array([a, b]))).max() < 1e-12
