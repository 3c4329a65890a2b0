import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import T, line_field, line_metric
from warpedrigidity import rigidity, scenario, solspace
from warpedrigidity.errors import DegenerateFormError, KillingError
from warpedrigidity.rigidity import WedgeElement
from warpedrigidity.spaceforms import SpaceFormSpec, gram_mu, make_space_form

E = WedgeElement.elementary


def action(G, z):
    """``x -> sum c (mu(w, x) v - mu(v, x) w)`` built column by column."""
    n = G.shape[0]
    L = np.zeros((n, n))
    for col in range(n):
        x = np.eye(n)[col]
        for (i, j), c in z.terms.items():
            L[:, col] += c * ((G[j] @ x) * np.eye(n)[i] - (G[i] @ x) * np.eye(n)[j])
    return L


def sym_gram(n, seed):
    """Random symmetric Gram matrix with a single negative direction."""
    rng = np.random.default_rng(seed)
    Q = np.linalg.qr(rng.normal(size=(n, n)))[0]
    return Q @ np.diag([-1.0] + list(rng.uniform(0.5, 2.0, n - 1))) @ Q.T


gram_seeds = st.integers(0, 10_000)


class TestWedgeElement:
    def test_normalisation(self):
        assert E(2, 0).terms == {(0, 2): -1.0}
        assert E(1, 1).is_zero()

    def test_from_vectors(self):
        z = WedgeElement.from_vectors([1.0, 0.0, 0.0], [0.0, 2.0, 1.0])
        assert z.terms == {(0, 1): 2.0, (0, 2): 1.0}
        assert WedgeElement.from_vectors([1.0, 2.0], [2.0, 4.0]).is_zero(1e-12)

    def test_linear_structure(self):
        z = E(0, 1) * 2.0 + E(1, 2) - E(0, 1)
        assert np.allclose(z.to_vector(3), [1.0, 0.0, 1.0])
        assert z.norm() == pytest.approx(np.sqrt(2.0))
        assert (z - z).is_zero()


class TestBracket:
    def test_identity_gram(self):
        G = np.eye(3)
        # with the convention used here [e0^e1, e1^e2] = +e0^e2
        assert rigidity.bracket_wedge(G, E(0, 1), E(1, 2)).terms == {(0, 2): 1.0}
        assert rigidity.bracket_wedge(G, E(0, 1), E(0, 1)).is_zero()

    def test_lorentzian_gram(self):
        G = np.diag([-1.0, 1.0, 1.0])
        z = rigidity.bracket_wedge(G, E(0, 1), E(0, 2))
        assert z.terms == {(1, 2): 1.0}

    def test_endomorphism_against_action(self):
        G = sym_gram(4, 3)
        for z in rigidity.random_wedges(4, 5, np.random.default_rng(0)):
            assert np.allclose(rigidity.wedge_endomorphism(G, z).matrix, action(G, z), atol=1e-12)

    def test_rejects_degenerate_gram(self):
        G = np.diag([1.0, 0.0, 0.0])
        with pytest.raises(DegenerateFormError):
            rigidity.bracket_wedge(G, E(0, 1), E(1, 2))
        with pytest.raises(DegenerateFormError):
            rigidity.wedge_endomorphism(np.zeros((3, 3)), E(0, 1))

    def test_euclidean_nullity_one_is_allowed(self):
        G = gram_mu(make_space_form(SpaceFormSpec("euclidean", 2))).matrix
        assert rigidity.commutator_defect(G, E(0, 1), E(1, 2)) < 1e-12

    @given(gram_seeds)
    def test_antisymmetric_and_injective(self, seed):
        G = sym_gram(4, seed)
        for z in rigidity.random_wedges(4, 3, np.random.default_rng(seed)):
            L = rigidity.wedge_endomorphism(G, z)
            assert L.antisymmetry_defect(G) < 1e-10
            assert np.abs(L.matrix).max() > 1e-6 * z.norm()

    @given(gram_seeds)
    def test_commutator_and_jacobi(self, seed):
        G = sym_gram(4, seed)
        z1, z2, z3 = rigidity.random_wedges(4, 3, np.random.default_rng(seed + 1))
        assert rigidity.commutator_defect(G, z1, z2) < 1e-9
        assert rigidity.jacobi_defect(G, z1, z2, z3) < 1e-9
        b12 = rigidity.bracket_wedge(G, z1, z2)
        b21 = rigidity.bracket_wedge(G, z2, z1)
        assert (b12 + b21).is_zero(1e-12)


def sphere_space():
    model = make_space_form(SpaceFormSpec("sphere", 2))
    q = solspace.QuadraticFormField(lambda p: -model.metric.metric(p), model.metric)
    return model, solspace.SolutionSpace(model.metric, q, model.basis, kappa=1.0)


class TestKillingFields:
    def test_iota_is_killing(self):
        model, S = sphere_space()
        pts = model.sample_points(5, 1)
        for i, j in rigidity.all_pairs(3):
            X = rigidity.iota(S, model.basis[i], model.basis[j], pts)
            assert rigidity.killing_residual(model.metric, X, pts) < 1e-6

    def test_iota_rejects_foreign_pair(self):
        m = line_metric()
        q = solspace.QuadraticFormField(lambda p: np.eye(1), m)
        S = solspace.SolutionSpace(m, q, (line_field(sp.exp(T)),))
        with pytest.raises(KillingError):
            # Killing on a line means constant length, e^t grad t^2 - t^2 grad e^t is not
            rigidity.iota(S, line_field(sp.exp(T)), line_field(T**2), np.array([[0.0], [0.5], [1.0]]))

    def test_homomorphism(self):
        model, S = sphere_space()
        pts = model.sample_points(6, 2)
        G = gram_mu(model).matrix
        rep = rigidity.homomorphism_check(S, E(0, 1), E(1, 2), pts, G)
        assert rep.max_deviation < 1e-5
        assert rep.bracket.terms == rigidity.bracket_wedge(G, E(0, 1), E(1, 2)).terms

    def test_gram_from_solution_space(self):
        _, S = sphere_space()
        assert np.allclose(rigidity._gram_of(S), np.eye(3), atol=1e-9)


def line_pair(w1, w2, d=1, kappa1=0.0, kappa2=0.0, **kw):
    return rigidity.EinsteinPairSpec(line_metric(), line_field(w1), line_field(w2), d, kappa1, kappa2, **kw)


@pytest.fixture(scope="module")
def shipped():
    paths = scenario.shipped_scenarios()
    return lambda name: scenario.theoremc_spec(scenario.load_scenario(paths[name])["parameters"])


class TestPairClassifier:
    def test_hyperbolic_planes(self):
        spec = line_pair(sp.exp(T), sp.exp(-T))
        res = rigidity.classify_theoremC(spec)
        assert (res.verdict, res.case) == ("Isometric", "B.1")
        assert res.details["tau_mean"] == pytest.approx(-1.0, abs=1e-8)
        assert res.details["E1_curvature"] == pytest.approx(-1.0, abs=1e-4)
        assert "scalar_vacuous" in res.flags

    def test_erf_pair(self):
        res = rigidity.classify_theoremC(line_pair(sp.exp(T**2 / 2), sp.exp(T**2 / 2) * (sp.sqrt(sp.pi) / 2 * sp.erf(T) + 1)))
        assert res.verdict == "ExceptionalSurfacePair"
        assert res.witness.verdict == "not_isometric"
        assert res.details["curvature_gap"] < 1e-6

    def test_dependent(self):
        res = rigidity.classify_theoremC(line_pair(sp.exp(T), 3 * sp.exp(T)))
        assert (res.verdict, res.stage, res.flags) == ("HypothesisFailed", "dependence", ("dependent",))

    def test_different_q(self):
        res = rigidity.classify_theoremC(line_pair(sp.exp(T), sp.cosh(2 * T)))
        assert (res.verdict, res.stage) == ("HypothesisFailed", "ricci_restriction")

    def test_nonpositive(self):
        res = rigidity.classify_theoremC(line_pair(sp.exp(T), sp.sinh(T)))
        assert res.stage == "invariants"

    def test_surface_pair_needs_d_one(self):
        w2 = sp.exp(T**2 / 2) * (sp.sqrt(sp.pi) / 2 * sp.erf(T) + 1)
        res = rigidity.classify_theoremC(line_pair(sp.exp(T**2 / 2), w2, d=2))
        assert res.verdict == "HypothesisFailed"
        assert res.stage == "scalar_curvature"

    def test_compact_base(self, shipped):
        res = rigidity.classify_theoremC(shipped("theoremc_circle"))
        assert res.verdict == "HypothesisFailed"

    def test_case_A(self, shipped):
        spec = shipped("theoremc_hyperbolic_caseA")
        res = rigidity.classify_theoremC(spec)
        assert (res.verdict, res.case) == ("Isometric", "A")
        assert res.details["mu1"] == pytest.approx(-1.0, abs=1e-6)
        assert res.details["mu2"] == pytest.approx(0.0, abs=1e-6)
        assert res.details["einstein_constant"] == pytest.approx(-3.0, abs=1e-6)
        assert res.details["einstein_deviation"] < 1e-4

    @pytest.mark.parametrize(
        "w1, w2",
        [(sp.exp(T), sp.exp(-T)), (sp.exp(T), 3 * sp.exp(T)), (sp.exp(T), sp.cosh(2 * T))],
    )
    def test_swap_symmetry(self, w1, w2):
        assert rigidity.verdicts_swap_symmetric(line_pair(w1, w2))

    def test_rejects_zero_fiber_dimension(self):
        with pytest.raises(ValueError):
            line_pair(sp.exp(T), sp.exp(-T), d=0)


class TestFiberPieces:
    def test_ricci_restriction_formula(self):
        q, rep = rigidity.ricci_restriction_check(line_pair(sp.exp(T), sp.exp(-T)))
        assert rep.ok
        assert q(np.array([0.3]))[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_scalar_equality_d2(self):
        spec = line_pair(sp.cosh(T), sp.sinh(T) + 2 * sp.cosh(T), d=2, kappa1=-1.0, kappa2=-3.0)
        q, _ = rigidity.ricci_restriction_check(spec)
        fd = rigidity.fiber_data(spec, q)
        rep = rigidity.scalar_equality_check(spec, fd)
        # kappa_i = mu(w_i), so kappa_i - |v_i'|^2 = tau v_i^2 with tau = -1
        assert not rep.vacuous and rep.ok
        assert np.allclose(rep.lhs, -1.0, atol=1e-8)

    @pytest.mark.parametrize("vertical", [False, True])
    def test_fiber_ricci(self, vertical):
        spec = line_pair(sp.cosh(T), sp.sinh(T) + 2 * sp.cosh(T), d=2, kappa1=-1.0, kappa2=-3.0)
        q, _ = rigidity.ricci_restriction_check(spec)
        fd = rigidity.fiber_data(spec, q)
        for side in (1, 2):
            fr = rigidity.fiber_ricci(spec, fd, side, vertical, [0.4])
            assert fr.deviation < 1e-5
            # both fibers are H^3
            assert fr.closed_form == pytest.approx(-2.0, abs=1e-8)

    def test_evaluation_rank_pair(self):
        m = line_metric()
        assert rigidity.evaluation_rank_pair(m, line_field(sp.exp(T)), line_field(sp.exp(-T)), [0.0]) == 2
        assert rigidity.evaluation_rank_pair(m, line_field(sp.exp(T)), line_field(2 * sp.exp(T)), [0.0]) == 1
