"""Command line: run scenario suites, enumerate graph families."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema

from . import graphs as gr
from .functionals import PolyFunctional, random_functional
from .interacting import (
    b1_kgraph,
    b2_kgraph,
    b_term,
    kgraph_sum,
    low_order_tables,
    ppa_check,
    report,
    star_hint,
    star_tint,
    star_tr,
)
from .model import FreeTheory, Interaction, PreconditionError
from .moller import (
    MollerConfig,
    classical_inverse_pullback,
    classical_moller,
    classical_pullback,
    corolla_sum,
    g2_terms,
    g9_sum,
    local_interaction,
    omega_and_RH,
    quantum_moller,
    quantum_moller_inverse,
    tree_sum,
    upsilon,
)
from .numerics import Bounds, ConfigurationError, DomainError, rational, rational_str
from .operators import KERNELS, exp_product, kernel, peierls, time_ordering

SUITES = ("enumeration-census", "exponential-products", "moller", "interacting", "ppa", "kgraphs",
          "low-order-tables")
CSV_COLUMNS = ["graph_key", "family", "e", "v", "d", "aut_order", "hbar_power", "lambda_power",
               "coeff_re", "coeff_im"]

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["model", "interaction", "bounds"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "model": {
            "type": "object",
            "required": ["n", "delta_R"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "order": {"oneOf": [{"const": "total"}, {"type": "array"}]},
                "delta_R": {"type": "array"},
                "H": {"type": ["array", "null"]},
                "strict": {"type": "boolean"},
            },
        },
        "interaction": {
            "type": "object",
            "required": ["monomials"],
            "properties": {"monomials": {"type": "array"}},
        },
        "bounds": {
            "type": "object",
            "required": ["hbar_max", "lambda_max"],
            "additionalProperties": False,
            "properties": {
                "hbar_max": {"type": "integer", "minimum": 0},
                "lambda_max": {"type": "integer", "minimum": 0},
                "hbar_min": {"type": "integer", "maximum": 0},
            },
        },
        "lambda_value": {"type": ["string", "integer"]},
        "suites": {"type": "array", "items": {"enum": list(SUITES)}},
        "seed": {"type": "integer"},
        "max_degree": {"type": "integer", "minimum": 1, "maximum": 6},
    },
}


class ScenarioError(ValueError):
    """Invalid scenario; maps to exit status 2."""


class Scenario:
    def __init__(self, obj: dict):
        try:
            jsonschema.validate(obj, SCENARIO_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ScenarioError(f"schema violation at {where}: {exc.message}") from None
        self.raw = obj
        self.name = obj.get("name", "scenario")
        b = obj["bounds"]
        if b.get("hbar_min", 0) < 0:
            raise ScenarioError("scenarios run in power-series mode (hbar_min = 0)")
        self.bounds = Bounds(b["hbar_max"], b["lambda_max"])
        try:
            self.theory = FreeTheory.from_json(obj["model"])
            self.interaction = Interaction(PolyFunctional.from_json(obj["interaction"], self.theory.n_points,
                                                                    self.bounds))
        except (ConfigurationError, KeyError, ValueError, TypeError) as exc:
            raise ScenarioError(f"invalid model or interaction: {exc}") from None
        lv = obj.get("lambda_value")
        self.lambda_value = None if lv is None else rational(str(lv))
        if self.lambda_value is not None and not (self.theory.strict and self.interaction.diagonal_hessian):
            raise ScenarioError("nilpotent regime required: lambda_value needs a strict model and a diagonal Hessian")
        self.suites = list(obj.get("suites", SUITES))
        self.seed = int(obj.get("seed", 0))
        self.max_degree = int(obj.get("max_degree", 2))

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
        return cls(obj)

    def config(self, interaction: Interaction | None = None) -> MollerConfig:
        mode = ("numeric_lambda", self.lambda_value) if self.lambda_value is not None else "formal_lambda"
        V = self.interaction if interaction is None else interaction
        return MollerConfig(self.theory, V, mode, self.bounds)

    def rng(self, suite: str) -> random.Random:
        return random.Random(f"{self.seed}:{suite}")


def bundled_scenario(name: str = "m2-default.json") -> dict:
    return json.loads(resources.files("starforge").joinpath("data", name).read_text())


# -- reports -------------------------------------------------------------------


def _count_report(name: str, got, want) -> dict:
    ok = got == want
    return {"name": name, "status": "pass" if ok else "fail", "bounds": None, "lhs_terms": got,
            "rhs_terms": want, "first_discrepancy": None if ok else {"observed": got, "expected": want}}


def _rows(terms, family: str) -> list:
    return [_csv_values(g, family, c, h, l) for g, c, h, l in terms]


def _csv_values(g, family, c, h, l) -> list:
    return [g.key, family, g.e, g.v, g.d, g.aut_order(), h, l, rational_str(c.re), rational_str(c.im)]


def _funcs(sc: Scenario, c: MollerConfig, suite: str, k: int = 2, degree: int | None = None) -> list:
    rng = sc.rng(suite)
    d = sc.max_degree if degree is None else degree
    return [random_functional(rng, c.n_points, c.bounds, d, min_degree=1) for _ in range(k)]


# -- suites --------------------------------------------------------------------


def suite_census(sc: Scenario) -> tuple[list, dict]:
    out = [
        _count_report("|Aut| of three parallel edges", gr.aut_order(gr.graph(2, [(1, 0)] * 3)), 6),
        _count_report("|Aut| of the G2(1) example", gr.aut_order(gr.graph(
            1, [(0, 1)] * 3 + [(0, 2)] * 2 + [(0, 3)] * 2, 3)), 48),
        _count_report("G1(2) with at most two edges", len(gr.enumerate_family("G1", 2, max_edges=2)), 3),
        _count_report("G5(2) at e - v = 2", sum(1 for g in gr.enumerate_family("G5", 2, max_excess=2, max_unlabelled=4)
                                               if g.e - g.v == 2), 4),
    ]
    return out, {}


def suite_exponential(sc: Scenario) -> tuple[list, dict]:
    c = sc.config()
    T = c.theory
    F, G, H = _funcs(sc, c, "exponential-products", 3)
    out = []
    for which in KERNELS:
        K = kernel(T, which)
        out.append(report(f"associativity of the {which} product",
                          exp_product(K, exp_product(K, F, G), H), exp_product(K, F, exp_product(K, G, H))))
    out.append(report("time ordering is a homomorphism onto the time-ordered product",
                      time_ordering(T, F * G), exp_product(kernel(T, "timeT"), time_ordering(T, F),
                                                           time_ordering(T, G))))
    return out, {}


def suite_moller(sc: Scenario) -> tuple[list, dict]:
    c = sc.config()
    F, = _funcs(sc, c, "moller", 1)
    out = [
        report("corolla sum = pullback by r^-1", corolla_sum(c, F), classical_inverse_pullback(c, F)),
        report("tree sum = pullback by r", tree_sum(c, F), classical_pullback(c, F)),
    ]
    Rinv = quantum_moller_inverse(c, F)
    if c.numeric:
        out.append(report("resummed tree sum = tree sum", g9_sum(c, F), tree_sum(c, F)))
    else:
        out.append(report("R^-1 by graphs = R^-1 by Bogoliubov", Rinv, quantum_moller_inverse(c, F, "bogoliubov")))
        out.append(report("R by graphs = R by series inversion", quantum_moller(c, F),
                          quantum_moller(c, F, "inversion")))
    out.append(report("R^-1 R = id", quantum_moller_inverse(c, quantum_moller(c, F)), F))
    out.append(report("hbar^0 slice of R^-1 = pullback by r^-1", Rinv.slice(hbar=0),
                      classical_inverse_pullback(c, F).slice(hbar=0)))
    out.append(report("Upsilon by graphs = Upsilon by composition", upsilon(c, F, "graphs"), upsilon(c, F)))
    if local_interaction(c):
        W, RH = omega_and_RH(c, F)
        out.append(report("R_H = r o Omega", RH, W.compose(classical_moller(c))))
    return out, {"moller_terms.csv": _rows(g2_terms(c, F), "G2(1)")}


def suite_interacting(sc: Scenario) -> tuple[list, dict]:
    c = sc.config()
    F, G = _funcs(sc, c, "interacting")
    g3 = star_tint(c, F, G, "via_G3")
    out = [report("star_T,int via G5 = via G3", star_tint(c, F, G, "via_G5"), g3)]
    if not c.numeric:
        out.append(report("star_T,int via Moller = via G3", star_tint(c, F, G, "via_moller"), g3))
        out.append(report("Upsilon intertwines the naive and interacting products",
                          upsilon(c, star_tr(c, F, G)), star_tint(c, upsilon(c, F), upsilon(c, G), "via_G3")))
    out.append(report("star_H,int via G7 = via T_H transport", star_hint(c, F, G, "via_G7"),
                      star_hint(c, F, G, "via_transport")))
    r = classical_moller(c)
    out.append(report("Peierls bracket intertwined by r", peierls(c.theory, "free", F.compose(r), G.compose(r)),
                      peierls(c.theory, ("interacting", c.interaction, c.mode), F, G).compose(r)))
    return out, {}


def _quadratic_part(sc: Scenario) -> Interaction:
    V = sc.interaction.V
    terms = {m: s for m, s in V.terms.items() if len(m) == 2}
    if not terms:
        terms = {(x, x): rational("1/2") for x in range(V.n_points)}
    return Interaction(PolyFunctional.from_terms(terms, V.n_points, sc.bounds))


def suite_ppa(sc: Scenario) -> tuple[list, dict]:
    c = sc.config(_quadratic_part(sc))
    F, G = _funcs(sc, c, "ppa")
    return ppa_check(c, F, G), {}


def _diagonal_part(sc: Scenario) -> Interaction:
    V = sc.interaction.V
    terms = {m: s for m, s in V.terms.items() if len(set(m)) <= 1}
    return Interaction(PolyFunctional.from_terms(terms, V.n_points, sc.bounds))


def suite_kgraphs(sc: Scenario) -> tuple[list, dict]:
    # loop and 2-cycle terms of the rewrite only vanish for a local (diagonal) Hessian
    c = sc.config(_diagonal_part(sc))
    F, G = _funcs(sc, c, "kgraphs")
    out = []
    for order, combo in ((1, b1_kgraph()), (2, b2_kgraph())):
        if order > c.bounds.hbar_max and not c.numeric:
            continue
        B = b_term(c, F, G, order)
        out.append(report(f"K-graph B{order} = G5 table", kgraph_sum(c, combo, F, G), B))
        out.append(report(f"translated K-graph B{order} = G5 table", kgraph_sum(c, combo, F, G, translate=True), B))
    return out, {}


B_COUNTS = {1: 1, 2: 4, 3: 28}


def suite_tables(sc: Scenario) -> tuple[list, dict]:
    rows, out = [], []
    for order in (1, 2, 3):
        table = low_order_tables(order)
        rows += [r.csv_row() for r in table]
        out.append(_count_report(f"B{order} table size", len(table), B_COUNTS[order]))
    return out, {"low_order_tables.csv": rows}


RUNNERS = {
    "enumeration-census": suite_census,
    "exponential-products": suite_exponential,
    "moller": suite_moller,
    "interacting": suite_interacting,
    "ppa": suite_ppa,
    "kgraphs": suite_kgraphs,
    "low-order-tables": suite_tables,
}


def _run_suite(args):
    raw, suite = args
    sc = Scenario(raw)
    try:
        checks, tables = RUNNERS[suite](sc)
    except (PreconditionError, DomainError, ConfigurationError) as exc:
        checks = [{"name": suite, "status": "fail", "bounds": None, "lhs_terms": None, "rhs_terms": None,
                   "first_discrepancy": {"error": str(exc)}}]
        tables = {}
    return suite, checks, tables


def run_scenario(sc: Scenario, suites=None, jobs: int = 1) -> tuple[dict, dict]:
    """Run suites; return (report, {csv name: rows}).  Order is fixed by ``SUITES``."""
    chosen = [s for s in SUITES if s in (sc.suites if suites is None else suites)]
    work = [(sc.raw, s) for s in chosen]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(min(jobs, len(work))) as pool:
            results = list(pool.map(_run_suite, work))
    else:
        results = [_run_suite(w) for w in work]
    report_obj = {"scenario": sc.name, "bounds": sc.bounds.to_json(),
                  "lambda_value": None if sc.lambda_value is None else rational_str(sc.lambda_value),
                  "seed": sc.seed, "suites": []}
    tables: dict = {}
    for suite, checks, tbl in results:
        status = "pass" if all(ch["status"] == "pass" for ch in checks) else "fail"
        report_obj["suites"].append({"suite": suite, "status": status, "checks": checks})
        tables.update(tbl)
    report_obj["status"] = "pass" if all(s["status"] == "pass" for s in report_obj["suites"]) else "fail"
    return report_obj, tables


def _csv_text(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def latex_tables(orders=(1, 2, 3)) -> str:
    lines = []
    for order in orders:
        lines.append(f"% B_{order}: {len(low_order_tables(order))} graphs")
        for row in low_order_tables(order):
            c = row.coeff
            lines.append(f"({rational_str(c.re)} + {rational_str(c.im)} i) \\cdot \\Gamma_{{{row.graph.key}}} \\\\")
    return "\n".join(lines) + "\n"


def _first_failure(rep: dict):
    for s in rep["suites"]:
        for ch in s["checks"]:
            if ch["status"] != "pass":
                return s["suite"], ch
    return None


# -- entry points ----------------------------------------------------------------


def cmd_run(ns) -> int:
    sc = Scenario.load(ns.scenario) if ns.scenario else Scenario(bundled_scenario())
    suites = None
    if ns.suites:
        suites = [s.strip() for s in ns.suites.split(",") if s.strip()]
        bad = [s for s in suites if s not in SUITES]
        if bad:
            raise ScenarioError(f"unknown suites: {', '.join(bad)}")
    jobs = ns.jobs if ns.jobs is not None else int(os.environ.get("STARFORGE_JOBS", "1") or 1)
    rep, tables = run_scenario(sc, suites, jobs)
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    for name, rows in sorted(tables.items()):
        (out / name).write_text(_csv_text(rows))
    if ns.emit_latex:
        (out / "b_tables.tex").write_text(latex_tables())
    for s in rep["suites"]:
        print(f"{s['suite']}: {s['status']}")
    bad = _first_failure(rep)
    if bad:
        suite, ch = bad
        print(f"first failure in {suite}: {ch['name']}: {json.dumps(ch['first_discrepancy'])}", file=sys.stderr)
        return 1
    return 0


def cmd_enumerate(ns) -> int:
    try:
        fam, n = gr.parse_family(ns.family)
    except (KeyError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None
    max_excess = ns.max_excess if ns.max_excess is not None else ns.excess
    if ns.max_edges is None and ns.max_unlabelled is None and max_excess is None:
        raise ScenarioError("enumeration needs --max-edges, --max-unlabelled, --max-excess or --excess")
    try:
        gs = gr.enumerate_family(fam, n, max_edges=ns.max_edges, max_unlabelled=ns.max_unlabelled,
                                 max_excess=max_excess, max_path=ns.max_path)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    if ns.excess is not None:
        gs = [g for g in gs if g.e - g.v == ns.excess]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for g in sorted(gs):
        w.writerow([g.key, f"{fam}({n})", g.e, g.v, g.d, g.aut_order(), g.e - g.v, "", "", ""])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="starforge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run scenario suites and write reports")
    r.add_argument("--scenario", help="scenario JSON (default: bundled m2-default.json)")
    r.add_argument("--out", default="starforge-out", help="output directory")
    r.add_argument("--suites", help="comma-separated suite override")
    r.add_argument("--jobs", type=int, help="worker processes (fallback: STARFORGE_JOBS)")
    r.add_argument("--emit-latex", action="store_true", help="also write b_tables.tex")
    r.set_defaults(func=cmd_run)
    e = sub.add_parser("enumerate", help="print a graph family census as CSV")
    e.add_argument("family", help="e.g. G1(2), G5(2), trees")
    e.add_argument("--max-edges", type=int)
    e.add_argument("--max-unlabelled", type=int)
    e.add_argument("--max-excess", type=int)
    e.add_argument("--max-path", type=int)
    e.add_argument("--excess", type=int, help="keep only graphs with e - v equal to this")
    e.set_defaults(func=cmd_enumerate)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
