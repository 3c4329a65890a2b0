"""Command line entry point ``wr``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 when the input
is malformed (bad JSON, schema violation, expression outside the grammar).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import jsonschema
import numpy as np

from . import acceptance, expressions, hill, rigidity, scenario, solspace
from .errors import ExpressionError, GeometryError
from .spaceforms import SpaceFormSpec, gram_mu, make_space_form

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _out_dir(arg: str | None) -> str:
    return arg or os.environ.get("WR_OUT") or "wr_out"


def _input_error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _load(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _report(result: scenario.ScenarioResult, out: str) -> int:
    where = scenario.write_outputs(result, out)
    for c in result.checks:
        print(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: value={c.value} tol={c.tol}")
    status = "passed" if result.passed else "FAILED"
    print(f"{result.name}: {status}; artifacts in {where}")
    for c in result.failed():
        print(f"failed check: {c.name} {c.detail}".rstrip(), file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_FAIL


def _run_data(data: dict, out: str, tol: float | None) -> int:
    try:
        scenario.validate_scenario(data)
        result = scenario.execute(data, tol)
    except jsonschema.ValidationError as exc:
        return _input_error(f"schema violation at {'/'.join(map(str, exc.absolute_path)) or '<root>'}: {exc.message}")
    except ExpressionError as exc:
        return _input_error(str(exc))
    return _report(result, out)


def cmd_run(args) -> int:
    try:
        data = _load(args.scenario)
    except (OSError, json.JSONDecodeError) as exc:
        return _input_error(f"cannot read {args.scenario}: {exc}")
    return _run_data(data, _out_dir(args.out), args.tol)


def cmd_theoremc(args) -> int:
    try:
        data = _load(args.spec)
    except (OSError, json.JSONDecodeError) as exc:
        return _input_error(f"cannot read {args.spec}: {exc}")
    if "kind" not in data:
        data = {"name": os.path.splitext(os.path.basename(args.spec))[0], "kind": "theoremC", "parameters": data}
    if data["kind"] != "theoremC":
        return _input_error("expected a theoremC scenario")
    return _run_data(data, _out_dir(args.out), None)


def cmd_verify(args) -> int:
    start = time.perf_counter()
    session = acceptance.Session(args.tol)
    results = acceptance.verify_all(args.filter, args.tol, session)
    if not results:
        return _input_error(f"no criterion matches filter {args.filter!r}")
    for r in results:
        print(r.line())
    if args.out or os.environ.get("WR_OUT"):
        for res in session._cache.values():
            scenario.write_outputs(res, _out_dir(args.out))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed in {time.perf_counter() - start:.2f}s")
    return EXIT_OK if passed == len(results) else EXIT_FAIL


def _emit(table: scenario.Table) -> None:
    sys.stdout.write(scenario.csv_text(table))


def cmd_table1d(args) -> int:
    try:
        tau = expressions.function_of_t(args.tau)
    except ExpressionError as exc:
        return _input_error(str(exc))
    radii = args.radius or [None]
    rows = []
    for a in radii:
        length = args.length if args.length is not None else (2 * math.pi * a if args.domain == "interval" and a else None)
        radius = a if args.domain == "circle" else None
        try:
            prob = solspace.OneDProblem(args.domain, tau, radius, length, args.bc)
        except ValueError as exc:
            return _input_error(str(exc))
        c = solspace.classify_1d(prob)
        a_val = radius if radius else (length / (2 * math.pi) if length else "")
        rows.append([args.domain, args.tau, a_val, c.dim,
                     "" if c.dim_D is None else c.dim_D, "" if c.dim_N is None else c.dim_N])
    _emit(scenario.Table("table_1d", ["domain", "tau", "a", "dim", "dim_D", "dim_N"], rows))
    return EXIT_OK


def cmd_ode(args) -> int:
    try:
        tau = expressions.function_of_t(args.tau)
    except ExpressionError as exc:
        return _input_error(str(exc))
    if args.period:
        prob = hill.OdeProblem.from_tau(tau, (0.0, args.period), period=args.period)
        c = hill.coexistence(prob)
        print(json.dumps({
            "verdict": c.verdict, "dim_periodic": c.dim_periodic, "dim_antiperiodic": c.dim_antiperiodic,
            "monodromy": c.monodromy.tolist(), "det": float(np.linalg.det(c.monodromy)),
        }, indent=2))
        return EXIT_OK
    prob = hill.OdeProblem.from_tau(tau, tuple(args.span))
    sol = hill.solve_ivp(prob, args.w0, args.dw0, args.t0)
    ts = np.linspace(args.span[0], args.span[1], args.n)
    _emit(scenario.Table("ode", ["t", "w", "dw"], [[t, float(sol(t)), float(sol.derivative(t))] for t in ts]))
    return EXIT_OK


def cmd_surfaces(args) -> int:
    try:
        v1 = expressions.field(args.v1)
    except ExpressionError as exc:
        return _input_error(str(exc))
    try:
        pair = hill.build_isocurved_pair(v1, args.C2, tuple(args.window), to_infinity=not args.window_only)
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rows = []
    for t in np.linspace(args.window[0], args.window[1], args.n):
        p = np.array([t])
        rows.append([t, pair.tau(t), pair.v1(p), pair.v2(p), hill.wronskian(pair.v1, pair.v2, t)])
    _emit(scenario.Table("curvature", ["t", "tau", "v1", "v2", "wronskian"], rows))
    ww = tuple(args.witness_window) if args.witness_window else None
    wit = hill.non_isometry_witness(pair, ww)
    print(f"witness: {wit.verdict} on [{wit.window[0]:.6g}, {wit.window[1]:.6g}]", file=sys.stderr)
    return EXIT_OK


def cmd_liealg(args) -> int:
    try:
        model = make_space_form(SpaceFormSpec(args.kind, args.dim))
    except (ValueError, GeometryError) as exc:
        return _input_error(str(exc))
    G = gram_mu(model).matrix
    elems = [rigidity.WedgeElement.elementary(a, b) for a, b in rigidity.all_pairs(G.shape[0])]
    rows = []
    for z1 in elems:
        for z2 in elems:
            (a, b), (c, d) = next(iter(z1.terms)), next(iter(z2.terms))
            for (e, f), coef in rigidity.bracket_wedge(G, z1, z2).terms.items():
                rows.append([a, b, c, d, e, f, round(coef, 12) + 0.0])
    _emit(scenario.Table("structure_constants", ["a", "b", "c", "d", "i", "j", "coefficient"], rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wr", description="Solution spaces of Hess w = w q on warped products.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario")
    r.add_argument("--out", help="output directory (default: $WR_OUT or ./wr_out)")
    r.add_argument("--tol", type=float, help="override every numeric tolerance")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("--filter", help="criterion id, module name or title fragment")
    v.add_argument("--tol", type=float, help="override every numeric tolerance")
    v.add_argument("--out", help="also write scenario artifacts here")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("table1d", help="dimension table for w'' = -tau w")
    t.add_argument("--domain", required=True, choices=solspace.DOMAINS)
    t.add_argument("--tau", required=True, help="number or expression in t")
    t.add_argument("--radius", type=float, nargs="+", help="circle radius a (interval length 2 pi a)")
    t.add_argument("--length", type=float, help="interval length")
    t.add_argument("--bc", default="none", choices=("none", "dirichlet", "neumann"))
    t.set_defaults(func=cmd_table1d)

    o = sub.add_parser("ode", help="integrate w'' = -tau w, or report coexistence with --period")
    o.add_argument("--tau", required=True)
    o.add_argument("--span", type=float, nargs=2, default=[0.0, 2 * math.pi])
    o.add_argument("--w0", type=float, default=1.0)
    o.add_argument("--dw0", type=float, default=0.0)
    o.add_argument("--t0", type=float)
    o.add_argument("--n", type=int, default=101)
    o.add_argument("--period", type=float)
    o.set_defaults(func=cmd_ode)

    s = sub.add_parser("surfaces", help="isocurved surface pair from v1 and C2")
    s.add_argument("--v1", required=True)
    s.add_argument("--C2", type=float, required=True)
    s.add_argument("--window", type=float, nargs=2, default=[-2.0, 2.0])
    s.add_argument("--n", type=int, default=201)
    s.add_argument("--witness-window", type=float, nargs=2)
    s.add_argument("--window-only", action="store_true", help="check positivity on the window only")
    s.set_defaults(func=cmd_surfaces)

    lg = sub.add_parser("liealg", help="structure constants of the wedge-square bracket")
    lg.add_argument("--kind", required=True, choices=("sphere", "euclidean", "hyperbolic"))
    lg.add_argument("--dim", type=int, default=2)
    lg.set_defaults(func=cmd_liealg)

    c = sub.add_parser("theoremc", help="classify a pair of warped products")
    c.add_argument("spec")
    c.add_argument("--out")
    c.set_defaults(func=cmd_theoremc)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
