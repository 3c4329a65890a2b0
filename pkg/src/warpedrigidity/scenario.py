"""Scenario files: schema validation, per-kind runners, report and CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import sympy as sp

from . import expressions, hill, rigidity, solspace, warp
from .errors import ExpressionError, GeometryError
from .geomkit import Chart, MetricChart, covariant_hessian, linear_combination
from .spaceforms import SpaceFormSpec, gram_mu, make_space_form

KINDS = ("oneD_table", "space_form", "warped_build", "curvature_crosscheck", "isocurved_pair", "liealg", "theoremC")


@dataclass
class Check:
    name: str
    value: object
    tol: object
    passed: bool
    detail: str = ""


@dataclass
class Table:
    name: str
    header: list
    rows: list


@dataclass
class ScenarioResult:
    name: str
    kind: str
    checks: list = field(default_factory=list)
    tables: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


class Checker:
    """Collects checks; numeric tolerances can be overridden by name or globally."""

    def __init__(self, overrides: dict | None = None, global_tol: float | None = None):
        self.overrides = overrides or {}
        self.global_tol = global_tol
        self.checks: list[Check] = []

    def below(self, name: str, value: float, tol: float, detail: str = "") -> bool:
        tol = self.global_tol if self.global_tol is not None else self.overrides.get(name, tol)
        value = float(value)
        ok = bool(np.isfinite(value) and value < tol)
        self.checks.append(Check(name, value, tol, ok, detail))
        return ok

    def above(self, name: str, value: float, bound: float, detail: str = "") -> bool:
        value = float(value)
        ok = bool(np.isfinite(value) and value > bound)
        self.checks.append(Check(name, value, f"> {bound:g}", ok, detail))
        return ok

    def equal(self, name: str, value, expected, detail: str = "") -> bool:
        ok = value == expected
        self.checks.append(Check(name, _jsonable(value), _jsonable(expected), bool(ok), detail))
        return bool(ok)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# --- schema -------------------------------------------------------------------------


def _schema(name: str) -> dict:
    return json.loads(resources.files("warpedrigidity").joinpath("schema").joinpath(name).read_text())


def schema_path() -> Path:
    return Path(str(resources.files("warpedrigidity").joinpath("schema").joinpath("scenario.schema.json")))


def validate_scenario(data: dict) -> None:
    jsonschema.validate(data, _schema("scenario.schema.json"))


def validate_report(data: dict) -> None:
    jsonschema.validate(data, _schema("report.schema.json"))


def shipped_scenarios() -> dict[str, Path]:
    root = resources.files("warpedrigidity").joinpath("scenarios")
    return {Path(str(p)).stem: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")}


def load_scenario(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    validate_scenario(data)
    return data


# --- builders -----------------------------------------------------------------------


def _tau_value(x):
    return expressions.function_of_t(x)


def _fiber(spec: dict):
    kw = {}
    if "window" in spec:
        kw["window"] = tuple(spec["window"])
    if "radius" in spec:
        kw["radius"] = spec["radius"]
    tau = _tau_value(spec["tau"]) if "tau" in spec else None
    return make_space_form(SpaceFormSpec(spec["kind"], spec["dim"], tau, **kw))


def _base(spec: dict) -> warp.BaseSpace:
    boundary = tuple(tuple(b) for b in spec.get("boundary", ()))
    closed = None
    if boundary:
        closed = ((any(s == 0 for _, s in boundary), any(s == 1 for _, s in boundary)),)
    return warp.base_from_expr(
        expressions.parse(spec["u"]), tuple(spec["window"]), boundary, closed, u_min=spec.get("u_min", warp.U_MIN)
    )


def _manifold(spec: dict):
    """``(metric, coordinate names, basis or None)`` for the common base of a warped pair."""
    chart = spec["chart"]
    t = sp.Symbol("t", real=True)
    if chart == "line":
        lo, hi = spec.get("window", [-2.0, 2.0])
        return MetricChart.from_expr(sp.Matrix([[1]]), [t], Chart((lo,), (hi,)), "R"), ("t",), None
    if chart == "circle":
        r = spec.get("radius", 1.0)
        per = 2 * math.pi * r
        m = MetricChart.from_expr(sp.Matrix([[1]]), [t], Chart((0.0,), (per,), {0: per}), "S1")
        return m, ("t",), None
    model = _fiber(spec["model"])
    names = tuple(f"x{i}" for i in range(model.dim))
    return model.metric, names, model


def _function(value, names, model, dim):
    if isinstance(value, list):
        if model is None:
            raise ExpressionError("coefficient vectors need a space-form manifold")
        return linear_combination(value, model.basis, dim)
    return expressions.field(value, names)


# --- runners ------------------------------------------------------------------------


def _run_oneD_table(params, ck: Checker) -> tuple[list, dict]:
    rows = []
    for i, row in enumerate(params["rows"]):
        prob = solspace.OneDProblem(
            row["domain"], _tau_value(row["tau"]), row.get("radius"), row.get("length"), row.get("bc", "none"),
            tuple(row["window"]) if "window" in row else None,
        )
        c = solspace.classify_1d(prob)
        a = prob.radius if prob.domain == "circle" else (prob.length / (2 * math.pi) if prob.domain == "interval" else None)
        rows.append([prob.domain, row["tau"], "" if a is None else a, c.dim,
                     "" if c.dim_D is None else c.dim_D, "" if c.dim_N is None else c.dim_N])
        exp = row.get("expect")
        if exp is not None:
            got = {"dim": c.dim, "dim_D": c.dim_D, "dim_N": c.dim_N}
            want = {k: exp.get(k) for k in got}
            ck.equal(f"row{i}_{prob.domain}", [got[k] for k in got if want[k] is not None],
                     [want[k] for k in got if want[k] is not None], f"tau={row['tau']}")
    return [Table("table_1d", ["domain", "tau", "a", "dim", "dim_D", "dim_N"], rows)], {}


def _run_space_form(params, ck: Checker):
    rows = []
    n, seed = params.get("points", 50), params.get("seed", 0)
    for kind in params["kinds"]:
        for k in params["dims"]:
            model = make_space_form(SpaceFormSpec(kind, k))
            q = solspace.QuadraticFormField(lambda p, m=model: -m.tau * m.metric.metric(p), model.metric)
            S = solspace.SolutionSpace(model.metric, q, model.basis)
            pts = model.sample_points(n, seed)
            worst_a = worst_f = 0.0
            for j, v in enumerate(model.basis):
                ra = solspace.residual(S, v, pts)
                rf = solspace.residual(S, v, pts, analytic=False)
                rows.append([kind, k, j, ra, rf])
                worst_a, worst_f = max(worst_a, ra), max(worst_f, rf)
            ck.below(f"{kind}{k}_analytic", worst_a, params.get("analytic_tol", 1e-7))
            ck.below(f"{kind}{k}_fd", worst_f, params.get("fd_tol", 1e-4))
            ranks = {solspace.evaluation_rank(S, p) for p in pts[:5]}
            ck.equal(f"{kind}{k}_rank", sorted(ranks), [k + 1])
    return [Table("residuals", ["kind", "dim", "index", "analytic", "fd"], rows)], {}


def _run_warped_build(params, ck: Checker):
    fiber = _fiber(params["fiber"])
    u = expressions.field(params["u"])
    window = tuple(params.get("window", [-2.0, 2.0]))
    nb, nf = params.get("n_base", 8), params.get("n_fiber", 4)
    ex = warp.example51_family(u, fiber, window, nb, nf)
    wp = ex.wp
    grid = wp.grid(nb, nf)
    info = {"k_plus_2": ex.k_plus_2, "condition_residual": ex.condition_residual, "dim_lower_bound": ex.dim_lower_bound}
    if "expect_k_plus_2" in params:
        ck.equal("k_plus_2", ex.k_plus_2, params["expect_k_plus_2"])
    rows = []
    q = ex.q
    worst = {"residual": 0.0, "z": 0.0, "v": 0.0, "mu": 0.0}
    for j, v in enumerate(fiber.basis):
        w = warp.lift_solution(wp, v, grid, tol=np.inf, q=q)
        res = max(float(np.linalg.norm(covariant_hessian(wp.total_metric, w, p) - w(p) * q(p))) for p in grid)
        dec = warp.decompose(wp, w, grid)
        z_max = max(abs(dec.z(p[: wp.nb])) for p in grid)
        v_dev = max(abs(dec.v(p[wp.nb :]) - v(p[wp.nb :])) for p in grid)
        mu = warp.mu_forms(wp, w, w, grid)
        rows.append([j, res, z_max, v_dev, float(mu.mu1.mean()), mu.spread1])
        for key, val in zip(worst, (res, z_max, v_dev, mu.spread1)):
            worst[key] = max(worst[key], val)
    ck.below("lift_residual", worst["residual"], params.get("lift_tol", 1e-6))
    ck.below("gauge_z", worst["z"], 1e-8)
    ck.below("recovered_v", worst["v"], 1e-8)
    if fiber.spec.constant_tau:
        ck.below("mu_spread", worst["mu"], 1e-6)
    tables = [Table("lifts", ["index", "residual", "z_max", "v_deviation", "mu_mean", "mu_spread"], rows)]
    gi = params.get("gradient_identities")
    if gi:
        z = expressions.field(gi["z"])
        sub = wp.grid(gi.get("n_base", 6), gi.get("n_fiber", 3))
        rep = warp.mu_gradient_identities(wp, z, sub)
        ck.below("grad_mu_w", rep.grad_mu_w, 1e-6)
        ck.below("grad_mu_pair", max(rep.grad_mu_uz, rep.grad_mu_zz), 1e-6)
        if "kappa_gap_min" in gi:
            ck.above("kappa_gap", rep.max_kappa_gap, gi["kappa_gap_min"])
        info["kappa_gap"] = rep.max_kappa_gap
    return tables, info


def _run_curvature_crosscheck(params, ck: Checker):
    base = _base(params["base"])
    wp = warp.build_warped(base, _fiber(params["fiber"]))
    grid = wp.grid(params.get("n_base", 6), params.get("n_fiber", 3))
    keys = None
    rows = []
    worst = 0.0
    for p in grid:
        rep = warp.oneill_curvature_check(wp, p)
        keys = keys or sorted(rep.deviations)
        rows.append(list(p) + [rep.deviations[k] for k in keys])
        worst = max(worst, rep.max_deviation)
    ck.below("oneill", worst, params.get("oneill_tol", 1e-4))
    tr = warp.trace_relations(wp, grid)
    ck.below("trace_relations", tr.max_deviation, params.get("trace_tol", 1e-6))
    if base.boundary:
        norms = [g for _, g in base.boundary_report()]
        ck.below("boundary_grad_norm", max(abs(g - 1.0) for g in norms), 1e-6)
    header = [f"x{i}" for i in range(wp.dim)] + list(keys or [])
    return [Table("oneill", header, rows)], {"trace_deviation": tr.max_deviation}


def _run_isocurved_pair(params, ck: Checker):
    v1 = expressions.field(params["v1"])
    window = tuple(params.get("window", [-2.0, 2.0]))
    pair = hill.build_isocurved_pair(v1, params["C2"], window, to_infinity=params.get("to_infinity", True))
    ts = np.linspace(window[0], window[1], params.get("n", 201))
    rows = []
    for t in ts:
        p = np.array([t])
        rows.append([t, pair.tau(t), pair.v1(p), pair.v2(p), hill.wronskian(pair.v1, pair.v2, t)])
    ck.below("curvature_gap", pair.curvature_gap(), 1e-6)
    if "tau_expected" in params:
        tau = expressions.function_of_t(params["tau_expected"])
        tau = tau if callable(tau) else (lambda t, c=tau: c)
        gap = max(abs(max(pair.tau(t, 1), pair.tau(t, 2), key=lambda x: abs(x - tau(t))) - tau(t)) for t in ts)
        ck.below("tau_ode", gap, 1e-6)
        inset = 0.05 * (window[1] - window[0])
        fd_ts = np.linspace(window[0] + inset, window[1] - inset, params.get("n_fd", 21))
        fd_gap = max(abs(hill.gauss_curvature_fd(v, t, window) - tau(t)) for t in fd_ts for v in (pair.v1, pair.v2))
        ck.below("tau_fd", fd_gap, 1e-4)
    w, spread = pair.wronskian_stats()
    ck.below("wronskian_spread", spread, 1e-7)
    if "wronskian" in params:
        ck.below("wronskian_value", abs(w - params["wronskian"]), 1e-7)
    ww = tuple(params["witness_window"]) if "witness_window" in params else None
    witness = hill.non_isometry_witness(pair, ww)
    if params.get("expect_witness"):
        ck.equal("witness", witness.verdict, params["expect_witness"])
    info = {"witness": witness.verdict, "witness_window": list(witness.window),
            "min_log_derivative_gap": witness.min_log_derivative_gap, "wronskian": w}
    return [Table("curvature", ["t", "tau", "v1", "v2", "wronskian"], rows)], info


def _run_liealg(params, ck: Checker):
    sf = params["space_form"]
    model = make_space_form(SpaceFormSpec(sf["kind"], sf["dim"]))
    G = gram_mu(model).matrix
    n = G.shape[0]
    rng = np.random.default_rng(params.get("seed", 0))
    count = params.get("pairs", 100)
    zs = rigidity.random_wedges(n, 2 * count, rng)
    anti = max(rigidity.wedge_endomorphism(G, z).antisymmetry_defect(G) for z in zs)
    comm = max(rigidity.commutator_defect(G, zs[2 * i], zs[2 * i + 1]) for i in range(count))
    jac = max(rigidity.jacobi_defect(G, zs[i], zs[i + 1], zs[i + 2]) for i in range(0, 2 * count - 2, 2))
    inj = min(np.abs(rigidity.wedge_endomorphism(G, z).matrix).max() / max(z.norm(), 1e-300) for z in zs[:20])
    ck.below("antisymmetry", anti, 1e-12)
    ck.below("commutator", comm, 1e-10)
    ck.below("jacobi", jac, 1e-10)
    ck.above("injectivity", inj, 1e-9)
    q = solspace.QuadraticFormField(lambda p: -model.tau * model.metric.metric(p), model.metric)
    S = solspace.SolutionSpace(model.metric, q, model.basis, kappa=model.tau)
    pts = model.sample_points(params.get("points", 20), params.get("seed", 0))
    elems = [rigidity.WedgeElement.elementary(a, b) for a, b in rigidity.all_pairs(n)]
    pairs = [(elems[i], elems[j]) for i in range(len(elems)) for j in range(i + 1, len(elems))][: params.get("hom_pairs", 3)]
    hom = max((rigidity.homomorphism_check(S, a, b, pts, G).max_deviation for a, b in pairs), default=0.0)
    ck.below("homomorphism", hom, 1e-5)
    killing = max(rigidity.killing_residual(model.metric, rigidity.iota_wedge(S, z), pts[:5]) for z in elems)
    ck.below("killing", killing, 1e-6)
    rows = []
    for i, z1 in enumerate(elems):
        for j, z2 in enumerate(elems):
            (a, b), (c, d) = next(iter(z1.terms)), next(iter(z2.terms))
            for (e, f), coef in rigidity.bracket_wedge(G, z1, z2).terms.items():
                rows.append([a, b, c, d, e, f, round(coef, 12) + 0.0])
    gram_rows = [[i] + [round(x, 12) + 0.0 for x in G[i]] for i in range(n)]
    return [
        Table("structure_constants", ["a", "b", "c", "d", "i", "j", "coefficient"], rows),
        Table("gram", ["row"] + [f"e{i}" for i in range(n)], gram_rows),
    ], {"convention": "[v1^w1, v2^w2] = -mu(v1,v2) w1^w2 + mu(v1,w2) w1^v2 + mu(v2,w1) v1^w2 - mu(w1,w2) v1^v2"}


def theoremc_spec(params) -> rigidity.EinsteinPairSpec:
    metric, names, model = _manifold(params["M"])
    dim = metric.dim
    w1 = _function(params["w1"], names, model, dim)
    w2 = _function(params["w2"], names, model, dim)
    inset = params.get("inset", 0.25 if model is not None and dim > 1 else 0.05)
    return rigidity.EinsteinPairSpec(
        metric, w1, w2, params["d"], float(params["kappa1"]), float(params["kappa2"]),
        compact=params["M"]["chart"] == "circle" or params.get("compact", False),
        inset=inset, n_grid=params.get("n_grid", 9 if dim == 1 else 4), name=params.get("label", ""),
    )


def _run_theoremC(params, ck: Checker):
    spec = theoremc_spec(params)
    res = rigidity.classify_theoremC(spec)
    swapped = rigidity.classify_theoremC(spec.swapped())
    if "expect" in params:
        ck.equal("verdict", res.verdict, params["expect"])
    ck.equal("swap_symmetric", swapped.verdict, res.verdict)
    for flag in params.get("expect_flags", []):
        ck.equal(f"flag_{flag}", flag in res.flags, True)
    if spec.compact:
        ck.equal("compact_not_exceptional", res.verdict != "ExceptionalSurfacePair", True)
    if "expect_curvature" in params and res.verdict == "Isometric":
        for side in (1, 2):
            ck.below(f"E{side}_spread", res.details[f"E{side}_spread"], 1e-4)
            ck.below(f"E{side}_curvature", abs(res.details[f"E{side}_curvature"] - params["expect_curvature"]), 1e-4)
    if res.witness is not None and "expect_witness" in params:
        ck.equal("witness", res.witness.verdict, params["expect_witness"])
    rows = [["verdict", res.verdict], ["stage", res.stage], ["case", res.case], ["flags", ";".join(res.flags)]]
    for k in sorted(res.details):
        v = res.details[k]
        if isinstance(v, (int, float, str, np.floating)):
            rows.append([k, v])
    info = {"verdict": res.verdict, "stage": res.stage, "flags": list(res.flags)}
    if res.witness is not None:
        info["witness"] = res.witness.verdict
    return [Table("theoremc", ["key", "value"], rows)], info


RUNNERS = {
    "oneD_table": _run_oneD_table,
    "space_form": _run_space_form,
    "warped_build": _run_warped_build,
    "curvature_crosscheck": _run_curvature_crosscheck,
    "isocurved_pair": _run_isocurved_pair,
    "liealg": _run_liealg,
    "theoremC": _run_theoremC,
}


def execute(data: dict, global_tol: float | None = None) -> ScenarioResult:
    """Run a validated scenario in memory."""
    ck = Checker(data.get("tolerances"), global_tol)
    result = ScenarioResult(data["name"], data["kind"])
    try:
        tables, info = RUNNERS[data["kind"]](data["parameters"], ck)
        result.tables, result.info = tables, info
    except ExpressionError:
        raise
    except GeometryError as exc:
        ck.checks.append(Check("runtime", type(exc).__name__, "no error", False, str(exc)))
    result.checks = ck.checks
    return result


# --- output -------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def csv_text(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def report_dict(result: ScenarioResult, artifacts: list[str]) -> dict:
    return _clean({
        "name": result.name,
        "kind": result.kind,
        "passed": result.passed,
        "checks": [{"name": c.name, "value": c.value, "tol": c.tol, "passed": c.passed, "detail": c.detail}
                   for c in result.checks],
        "artifacts": artifacts,
        "info": result.info,
    })


def write_outputs(result: ScenarioResult, out_dir) -> Path:
    out = Path(out_dir) / result.name
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for table in result.tables:
        fname = f"{table.name}.csv"
        with open(out / fname, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(table))
        names.append(fname)
    report = report_dict(result, names)
    validate_report(report)
    with open(out / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out
