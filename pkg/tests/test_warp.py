import numpy as np
import pytest
import sympy as sp

from conftest import T, line_field
from warpedrigidity import warp
from warpedrigidity.errors import ConstructionError, DomainError, NotDecomposableError
from warpedrigidity.geomkit import ScalarField, covariant_hessian, curvature

X = sp.Symbol("x0", real=True)


def plane_field(expr):
    return ScalarField.from_expr(expr, [T, X], str(expr))


def hyperbolic_plane():
    """``dt^2 + e^{2t} dx^2``, curvature -1."""
    return warp.build_warped(warp.real_line_base(line_field(sp.exp(T))), warp.fiber_model("euclidean", 1, 0.0))


def cosh_circle():
    return warp.build_warped(warp.real_line_base(line_field(sp.cosh(T))), warp.fiber_model("sphere", 1))


def sym_mu(u, tau, f):
    """``kappa f^2 + |grad f|^2`` for ``dt^2 + u^2 dx^2``, symbolically."""
    kappa = (tau - sp.diff(u, T) ** 2) / u**2
    return sp.simplify(kappa * f**2 + sp.diff(f, T) ** 2 + sp.diff(f, X) ** 2 / u**2)


class TestBuild:
    def test_dimensions(self):
        wp = cosh_circle()
        assert (wp.nb, wp.k, wp.dim) == (1, 1, 2)
        g = wp.total_metric.metric(np.array([0.5, 1.0]))
        assert np.allclose(g, np.diag([1.0, np.cosh(0.5) ** 2]))

    def test_nonpositive_warping_function(self):
        with pytest.raises(DomainError):
            warp.build_warped(warp.real_line_base(line_field(T)), warp.fiber_model("sphere", 1))

    def test_q_blocks(self):
        wp = hyperbolic_plane()
        p = np.array([0.3, -0.7])
        # space form of curvature -1: Hess w = w g, so q = g
        assert np.allclose(warp.assemble_q(wp)(p), wp.total_metric.metric(p), atol=1e-9)

    def test_kappa_closed_form(self):
        wp = cosh_circle()
        t = 0.8
        assert wp.kappa(np.array([t, 0.0])) == pytest.approx((1 - np.sinh(t) ** 2) / np.cosh(t) ** 2)


class TestLiftAndDecompose:
    def test_lift_of_fiber_basis(self):
        wp = cosh_circle()
        grid = wp.grid(6, 4)
        for v in wp.fiber.basis:
            w = warp.lift_solution(wp, v, grid)
            p = grid[3]
            assert w(p) == pytest.approx(np.cosh(p[0]) * v(p[1:]))

    def test_lift_rejects_non_solution(self):
        wp = hyperbolic_plane()
        v = ScalarField.from_expr(X**3, [X], "x^3")
        with pytest.raises(ConstructionError):
            warp.lift_solution(wp, v, wp.grid(5, 3))

    def test_zero_fiber_function(self):
        wp = hyperbolic_plane()
        zero = ScalarField.from_expr(sp.Integer(0), [X], "0")
        w = warp.lift_solution(wp, zero, wp.grid(4, 3))
        assert w(np.array([0.1, 0.2])) == 0.0

    def test_round_trip(self):
        wp = hyperbolic_plane()
        grid = wp.grid(6, 4)
        v = wp.fiber.basis[1]
        dec = warp.decompose(wp, warp.lift_solution(wp, v, grid), grid)
        assert max(abs(dec.z(p[:1])) for p in grid) < 1e-10
        assert max(abs(dec.v(p[1:]) - v(p[1:])) for p in grid) < 1e-10

    def test_gauge_and_base_part(self):
        wp = hyperbolic_plane()
        grid = wp.grid(6, 4)
        w = plane_field(sp.exp(-T) + sp.exp(T) * X**2)
        dec = warp.decompose(wp, w, grid)
        assert dec.z(dec.base_point) == pytest.approx(0.0, abs=1e-12)
        assert dec.max_deviation < 1e-9
        for p in grid[:5]:
            b = p[:1]
            assert covariant_hessian(wp.base.metric, dec.z, b)[0, 0] == pytest.approx(dec.z(b), abs=1e-8)

    def test_mixed_hessian_blocks_decomposition(self):
        wp = hyperbolic_plane()
        with pytest.raises(NotDecomposableError):
            warp.decompose(wp, plane_field(T * X), wp.grid(5, 3))

    def test_extension_conditions(self):
        wp = hyperbolic_plane()
        good = warp.check_extension_conditions(
            wp, line_field(sp.exp(-T)), ScalarField.from_expr(X**2, [X], "x^2"), wp.grid(5, 3)
        )
        assert good.ok and good.form_disagreement < 1e-9
        bad = warp.check_extension_conditions(
            wp, line_field(sp.exp(-T)), ScalarField.from_expr(X**3, [X], "x^3"), wp.grid(5, 3)
        )
        assert good.condition_2 and not bad.condition_3


class TestCurvature:
    @pytest.mark.parametrize(
        "u, fiber, K",
        [
            (sp.exp(T), ("euclidean", 1, 0.0), -1.0),
            (sp.cosh(T), ("hyperbolic", 1, -1.0), -1.0),
            (sp.Integer(1), ("euclidean", 1, 0.0), 0.0),
        ],
    )
    def test_gauss_curvature(self, u, fiber, K):
        wp = warp.build_warped(warp.real_line_base(line_field(u)), warp.fiber_model(*fiber))
        for p in wp.grid(4, 3):
            assert curvature(wp.total_metric, p).scalar == pytest.approx(2 * K, abs=1e-6)
            assert warp.oneill_curvature_check(wp, p).max_deviation < 1e-5

    def test_round_sphere_as_warped_product(self):
        base = warp.base_from_expr(sp.sin(T), (0.0, np.pi), boundary=((0, 0), (0, 1)))
        wp = warp.build_warped(base, warp.fiber_model("sphere", 1))
        for p in wp.grid(5, 3):
            assert warp.oneill_curvature_check(wp, p).max_deviation < 1e-5
        assert max(abs(g - 1.0) for _, g in base.boundary_report()) < 1e-6

    def test_trace_relations(self):
        for wp in (hyperbolic_plane(), cosh_circle()):
            assert warp.trace_relations(wp, wp.grid(5, 3)).max_deviation < 1e-6

    def test_two_dimensional_fiber(self):
        wp = warp.build_warped(warp.real_line_base(line_field(sp.cosh(T))), warp.fiber_model("sphere", 2))
        grid = wp.grid(3, 3)
        assert max(warp.oneill_curvature_check(wp, p).max_deviation for p in grid) < 1e-4
        assert warp.trace_relations(wp, grid).max_deviation < 1e-6


class TestMuForms:
    @pytest.mark.parametrize(
        "u, fiber, tau, v",
        [
            (sp.exp(T), ("euclidean", 1, 0.0), 0, sp.Integer(1)),
            (sp.exp(T), ("euclidean", 1, 0.0), 0, X),
            (sp.cosh(T), ("sphere", 1), 1, sp.cos(X)),
            (sp.cosh(T), ("hyperbolic", 1, -1.0), -1, sp.cosh(X)),
        ],
    )
    def test_constant_against_symbolic(self, u, fiber, tau, v):
        expected = sym_mu(u, tau, u * v)
        assert expected.is_constant()
        wp = warp.build_warped(warp.real_line_base(line_field(u)), warp.fiber_model(*fiber))
        w = plane_field(u * v)
        mu = warp.mu_forms(wp, w, w, wp.grid(6, 4))
        assert mu.spread1 < 1e-8
        assert mu.mu1[0] == pytest.approx(float(expected), abs=1e-8)

    def test_gradient_identities(self):
        wp = cosh_circle()
        rep = warp.mu_gradient_identities(wp, line_field(sp.sinh(T)), wp.grid(5, 3))
        assert rep.grad_mu_w < 1e-6
        assert max(rep.grad_mu_uz, rep.grad_mu_zz) < 1e-6
        assert rep.max_kappa_gap > 1e-3


class TestWarpedFamily:
    @pytest.mark.parametrize(
        "u, fiber, expected",
        [
            (sp.exp(T), ("euclidean", 1, 0.0), True),
            (sp.cosh(T), ("sphere", 1), False),
            (sp.cosh(T), ("hyperbolic", 1, -1.0), True),
        ],
    )
    def test_k_plus_2(self, u, fiber, expected):
        ex = warp.example51_family(line_field(u), warp.fiber_model(*fiber), n_base=8, n_fiber=4)
        assert ex.k_plus_2 is expected
        assert ex.dim_lower_bound == 2

    def test_condition_residual_is_sech_squared(self):
        ex = warp.example51_family(line_field(sp.cosh(T)), warp.fiber_model("sphere", 1), n_base=8, n_fiber=4)
        ts = ex.wp.base.grid(8)[:, 0]
        assert ex.condition_residual == pytest.approx(2 * max(1 / np.cosh(ts) ** 2), rel=1e-9)
