import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from warpedrigidity.errors import CapabilityError, ConstancyError
from warpedrigidity.geomkit import linear_combination
from warpedrigidity.solspace import QuadraticFormField, SolutionSpace, evaluation_rank, residual
from warpedrigidity.spaceforms import (
    SpaceFormSpec,
    gram_mu,
    make_space_form,
    mu_of_solution,
    space_form_metric,
)

CASES = [(kind, k) for kind in ("sphere", "euclidean", "hyperbolic") for k in (1, 2, 3)]


def solution_space(model):
    q = QuadraticFormField.multiple_of_metric(model.metric, -model.tau)
    return SolutionSpace(model.metric, q, model.basis, kappa=model.tau)


class TestSpec:
    def test_defaults(self):
        assert SpaceFormSpec("sphere", 2).tau == 1.0
        assert SpaceFormSpec("euclidean", 2).tau == 0.0
        assert SpaceFormSpec("hyperbolic", 2).tau == -1.0

    @pytest.mark.parametrize("kind, dim, tau", [("sphere", 2, 2.0), ("hyperbolic", 2, 0.5), ("euclidean", 2, 1.0)])
    def test_inconsistent_tau(self, kind, dim, tau):
        with pytest.raises(ValueError):
            SpaceFormSpec(kind, dim, tau)

    def test_function_tau_only_in_dim_one(self):
        with pytest.raises(ValueError):
            SpaceFormSpec("euclidean", 2, lambda t: t)

    def test_dimension_cap(self):
        with pytest.raises(CapabilityError):
            make_space_form(SpaceFormSpec("sphere", 4))


@pytest.mark.parametrize("kind, k", CASES)
def test_basis_solves_obata_equation(kind, k):
    model = make_space_form(SpaceFormSpec(kind, k))
    S = solution_space(model)
    pts = model.sample_points(12, seed=3)
    for v in model.basis:
        assert residual(S, v, pts) < 1e-7
        assert residual(S, v, pts, analytic=False) < 1e-4
    assert len(model.basis) == k + 1
    assert {evaluation_rank(S, p) for p in pts[:4]} == {k + 1}


@pytest.mark.parametrize(
    "kind, expected",
    [
        ("sphere", np.eye(3)),
        ("euclidean", np.diag([0.0, 1.0, 1.0])),
        ("hyperbolic", np.diag([-1.0, 1.0, 1.0])),
    ],
)
def test_gram_closed_form(kind, expected):
    g = gram_mu(make_space_form(SpaceFormSpec(kind, 2)))
    assert np.allclose(g.matrix, expected, atol=1e-9)


def test_scaled_hyperbolic_gram():
    # cosh(a r), sinh(a r) n with a^2 = -tau: mu = tau cosh^2 + a^2 sinh^2 = tau, and a^2 on the rest
    g = gram_mu(make_space_form(SpaceFormSpec("hyperbolic", 2, -2.0)))
    assert np.allclose(g.matrix, np.diag([-2.0, 2.0, 2.0]), atol=1e-9)


def test_line_with_function_tau_has_numeric_basis():
    model = make_space_form(SpaceFormSpec("euclidean", 1, lambda t: -(t**2) - 1, window=(-2.0, 2.0)))
    q = QuadraticFormField(lambda p: np.array([[p[0] ** 2 + 1]]), model.metric)
    S = SolutionSpace(model.metric, q, model.basis)
    pts = model.metric.chart.grid(9, 0.1)
    for v in model.basis:
        assert residual(S, v, pts) < 1e-4


def test_mu_of_solution_constant_and_error():
    model = make_space_form(SpaceFormSpec("sphere", 2))
    pts = model.sample_points(10)
    assert mu_of_solution(model, model.basis[0], pts) == pytest.approx(1.0)
    bad = model.basis[0].without_derivatives()
    sq = type(bad)(lambda p: bad(p) ** 2 + 1.0)
    with pytest.raises(ConstancyError):
        mu_of_solution(model, sq, pts)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_mu_bar_is_quadratic_form_of_gram(coeffs):
    model = make_space_form(SpaceFormSpec("hyperbolic", 2))
    G = gram_mu(model).matrix
    v = linear_combination(coeffs, model.basis, 2)
    c = np.array(coeffs)
    pts = model.sample_points(4, seed=7)
    assert mu_of_solution(model, v, pts, tol=1e-6) == pytest.approx(c @ G @ c, abs=1e-7 * (1 + c @ c))


def test_space_form_metric_kinds():
    assert space_form_metric(-1.0, 2).spec.kind == "hyperbolic"
    assert space_form_metric(0.0, 1).spec.kind == "euclidean"
    with pytest.raises(CapabilityError):
        space_form_metric(2.0, 2)
