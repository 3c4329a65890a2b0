"""Acceptance criteria, run by ``wr verify`` and the test suite."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from . import hill, scenario
from .geomkit import ScalarField

TOTAL_BUDGET = 60.0


@dataclass
class CriterionResult:
    id: int
    title: str
    module: str
    passed: bool
    elapsed: float
    checks: list = field(default_factory=list)

    def line(self) -> str:
        failed = [c for c in self.checks if not c.passed]
        status = "PASS" if self.passed else "FAIL"
        tail = f"{len(self.checks) - len(failed)}/{len(self.checks)} checks"
        if failed:
            c = failed[0]
            tail += f"; first failure {c.name}: value={c.value} tol={c.tol}"
        return f"[{status}] C{self.id:<2} {self.module:<9} {self.title} ({tail}, {self.elapsed:.2f}s)"


class Session:
    """Caches scenario results so criteria sharing a scenario run it once."""

    def __init__(self, global_tol: float | None = None):
        self.global_tol = global_tol
        self._cache: dict[str, scenario.ScenarioResult] = {}
        self._paths = scenario.shipped_scenarios()

    def run(self, name: str) -> scenario.ScenarioResult:
        if name not in self._cache:
            self._cache[name] = scenario.execute(scenario.load_scenario(self._paths[name]), self.global_tol)
        return self._cache[name]

    def checks(self, name: str, keep: Callable[[str], bool] = lambda n: True) -> list:
        res = self.run(name)
        return [_prefixed(name, c) for c in res.checks if keep(c.name) or c.name == "runtime"]


def _prefixed(prefix, c):
    return scenario.Check(f"{prefix}.{c.name}", c.value, c.tol, c.passed, c.detail)


def _runtime(name: str, elapsed: float, limit: float):
    return scenario.Check(f"{name}.runtime", elapsed, limit, elapsed < limit)


def _c1(s: Session):
    t0 = time.perf_counter()
    checks = s.checks("table_1d")
    return checks + [_runtime("table_1d", time.perf_counter() - t0, 1.0)]


def _c2(s: Session):
    t0 = time.perf_counter()
    checks = s.checks("obata_space_forms")
    return checks + [_runtime("obata_space_forms", time.perf_counter() - t0, 5.0)]


def _c3(s: Session):
    out = []
    for name in ("crosscheck_hyperbolic_plane", "crosscheck_round_sphere", "crosscheck_cosh_family"):
        out += s.checks(name)
    return out


_C4_KEYS = {"k_plus_2", "lift_residual", "gauge_z", "recovered_v"}
_C5_KEYS = {"mu_spread", "grad_mu_w", "grad_mu_pair", "kappa_gap"}
_EXAMPLE51 = ("example51_exp_flat", "example51_cosh_sphere", "example51_cosh_hyperbolic")


def _c4(s: Session):
    return [c for name in _EXAMPLE51 for c in s.checks(name, lambda n: n in _C4_KEYS)]


def _c5(s: Session):
    return [c for name in _EXAMPLE51 for c in s.checks(name, lambda n: n in _C5_KEYS)]


def _line_field(expr) -> ScalarField:
    t = sp.Symbol("t", real=True)
    return ScalarField.from_expr(expr, [t], str(expr))


def _c6(s: Session):
    ck = scenario.Checker(global_tol=s.global_tol)
    mathieu = hill.OdeProblem.from_tau(lambda t: 1.0 + 0.3 * np.cos(t), (0.0, 4 * np.pi), period=2 * np.pi)
    for label, prob in (
        ("harmonic", hill.OdeProblem.from_tau(1.0, (0.0, 2 * np.pi))),
        ("mathieu", mathieu),
    ):
        s1 = hill.solve_ivp(prob, 1.0, 0.0)
        s2 = hill.solve_ivp(prob, 0.0, 1.0)
        _, spread = hill.wronskian_spread(s1, s2, np.linspace(*prob.t_span, 257))
        ck.below(f"wronskian_spread_{label}", spread, 1e-7)
    periodic = {
        "tau1_T2pi": (1.0, 2 * np.pi),
        "tau1_Tpi": (1.0, np.pi),
        "tau0_T1": (0.0, 1.0),
        "taum1_T1": (-1.0, 1.0),
    }
    for label, (tau, T) in periodic.items():
        m = hill.monodromy(hill.OdeProblem.from_tau(tau, (0.0, T), period=T))
        ck.below(f"det_{label}", abs(np.linalg.det(m) - 1.0), 1e-8)
    ck.below("det_mathieu", abs(np.linalg.det(hill.monodromy(mathieu)) - 1.0), 1e-8)
    expected = {"tau1_T2pi": ("all_periodic", 2), "tau0_T1": ("one_periodic_ray", 1), "taum1_T1": ("none", 0)}
    for label, (verdict, dim) in expected.items():
        tau, T = periodic[label]
        c = hill.coexistence(hill.OdeProblem.from_tau(tau, (0.0, T), period=T))
        ck.equal(f"coexistence_{label}", [c.verdict, c.dim], [verdict, dim])
    t = sp.Symbol("t", real=True)
    erf = hill.erf_pair()
    pairs = {
        "cosh_sinh": (_line_field(sp.cosh(t)), _line_field(sp.sinh(t))),
        "exp_pair": (_line_field(sp.exp(t)), _line_field(sp.exp(-t))),
        "erf_pair": (erf.v1, erf.v2),
    }
    for label, (a, b) in pairs.items():
        wit = hill.positive_excludes_allperiodic(a, b, (-2.0, 2.0))
        ck.equal(f"monotone_{label}", wit.strictly_monotone, True)
        ck.above(f"min_slope_{label}", wit.min_slope, 0.0)
    return ck.checks


def _c7(s: Session):
    t0 = time.perf_counter()
    checks = s.checks("erf_pair")
    return checks + [_runtime("erf_pair", time.perf_counter() - t0, 5.0)]


def _c8(s: Session):
    return [c for kind in ("sphere", "euclidean", "hyperbolic") for c in s.checks(f"liealg_{kind}")]


def _c9(s: Session):
    return [c for name in ("theoremc_exp", "theoremc_erf", "theoremc_dependent") for c in s.checks(name)]


_DETERMINISM = ("table_1d", "theoremc_exp", "liealg_sphere")


def _c10(s: Session, prior: list[CriterionResult], elapsed: float):
    out = [scenario.Check("all_criteria", sum(r.passed for r in prior), len(prior), all(r.passed for r in prior))]
    out.append(_runtime("verify", elapsed, TOTAL_BUDGET))
    for name in _DETERMINISM:
        first = [scenario.csv_text(t) for t in s.run(name).tables]
        again = [scenario.csv_text(t) for t in scenario.execute(scenario.load_scenario(s._paths[name])).tables]
        out.append(scenario.Check(f"{name}.byte_identical_csv", first == again, True, first == again))
    return out


CRITERIA = [
    (1, "1-D dimension tables", "solspace", _c1),
    (2, "Obata bases on space forms", "spaceforms", _c2),
    (3, "warped-product curvature cross-checks", "warp", _c3),
    (4, "lift and decomposition round trip, k+2 condition", "warp", _c4),
    (5, "mu-bar constancy and gradient identities", "warp", _c5),
    (6, "Hill engine", "hill", _c6),
    (7, "isocurved erf pair", "hill", _c7),
    (8, "Lie algebra on the wedge square", "rigidity", _c8),
    (9, "classifier for pairs of warped products", "rigidity", _c9),
    (10, "full verify budget and deterministic CSV", "cli", None),
]


def _selected(cid: int, module: str, title: str, filt: str | None) -> bool:
    if not filt:
        return True
    f = filt.lower()
    return f in (str(cid), f"c{cid}", module) or f in title.lower()


def verify_all(filt: str | None = None, global_tol: float | None = None, session: Session | None = None) -> list[CriterionResult]:
    session = session or Session(global_tol)
    results = []
    start = time.perf_counter()
    for cid, title, module, fn in CRITERIA:
        if not _selected(cid, module, title, filt):
            continue
        t0 = time.perf_counter()
        if fn is None:
            checks = _c10(session, list(results), time.perf_counter() - start)
        else:
            checks = fn(session)
        results.append(CriterionResult(cid, title, module, all(c.passed for c in checks), time.perf_counter() - t0, checks))
    return results
