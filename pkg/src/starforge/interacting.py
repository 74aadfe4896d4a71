"""Interacting star products, K-graphs, low-order tables and perturbative agreement."""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import graphs as gr
from .functionals import PolyFunctional, add_into, mul_raw
from .model import (
    PreconditionError,
    interacting_advanced_derivative_symbolic,
    interacting_advanced_symbolic,
    interacting_dirac_symbolic,
    propagator,
    scale,
)
from .moller import (
    MollerConfig,
    _require_local,
    classical_moller,
    classical_moller_inverse,
    free_dictionary,
    interacting_dictionary,
    quantum_moller,
    quantum_moller_inverse,
)
from .numerics import I, ONE, ZERO, Bounds, ConfigurationError, GaussianRational, rational
from .operators import exp_product, gauge_map, graph_sum, kernel, time_ordering, time_ordering_H

GR = GaussianRational

ROUTES_T = ("via_moller", "via_G3", "via_G5")
ROUTES_H = ("via_G7", "via_G8", "via_transport")


def _deg(F: PolyFunctional) -> int:
    return max(F.degree(), 0)


def _mi(k: int) -> GR:
    return (-I) ** k


# -- the interacting star product in the T identification --------------------


def g3_terms(c: MollerConfig, F, G, *, prune: bool | None = None) -> list:
    """(-i hbar)^(e-v) (-lambda)^v/|Aut| over G3(2).

    ``prune`` caps directed paths at N-1 edges; this is exact in the nilpotent
    regime and is on by default there.
    """
    prune = c.nilpotent if prune is None else prune
    if prune and not c.nilpotent:
        raise PreconditionError("path pruning needs the nilpotent regime")
    if c.numeric and not prune:
        raise PreconditionError("numeric coupling in the G3 sum needs path pruning")
    lim = dict(
        label_valency=(_deg(F), _deg(G)),
        vertex_valency=max(c.interaction.degree, 1),
        max_excess=c.bounds.hbar_max,
        max_unlabelled=c.bounds.lambda_max if not c.numeric else min(_deg(F), _deg(G)) * max(c.interaction.degree, 1) ** max(c.n_points - 2, 0),
    )
    if prune:
        lim["max_path"] = c.n_points - 1
    out = []
    for g in gr.enumerate_family("G3", 2, **lim):
        s, l = c.weight(-ONE, g.v)
        out.append((g, _mi(g.e - g.v) * s / g.aut_order(), g.e - g.v, l))
    return out


def g5_terms(c: MollerConfig, F, G, *, prune: bool | None = None, excess: int | None = None) -> list:
    """(-1)^v (-i hbar)^(e-v)/|Aut| over G5(2); lambda sits in the dictionary."""
    prune = c.nilpotent if prune is None else prune
    h = c.bounds.hbar_max if excess is None else excess
    lim = dict(
        label_valency=(_deg(F), _deg(G)),
        vertex_valency=max(c.interaction.degree, 3),
        max_excess=h,
        max_unlabelled=2 * h if c.numeric else min(2 * h, c.bounds.lambda_max),
    )
    if prune:
        lim["max_path"] = c.n_points - 1
    out = []
    for g in gr.enumerate_family("G5", 2, **lim):
        if excess is not None and g.e - g.v != excess:
            continue
        out.append((g, (-ONE) ** g.v * _mi(g.e - g.v) / g.aut_order(), g.e - g.v, 0))
    return out


def star_tint(c: MollerConfig, F: PolyFunctional, G: PolyFunctional, route: str = "via_G3", **kw) -> PolyFunctional:
    """F *_{T,int} G by the Moller transport or one of the two graph expansions."""
    c.check(F)
    c.check(G)
    if route == "via_moller":
        inv = "graphs" if c.numeric else "inversion"
        RF = quantum_moller(c, F, route=inv)
        RG = quantum_moller(c, G, route=inv)
        return quantum_moller_inverse(c, exp_product(kernel(c.theory, "starT"), RF, RG))
    if route == "via_G3":
        return graph_sum(g3_terms(c, F, G, **kw), free_dictionary(c), [F, G], c.bounds)
    if route == "via_G5":
        return graph_sum(g5_terms(c, F, G, **kw), interacting_dictionary(c), [F, G], c.bounds)
    raise ConfigurationError(f"unknown route {route!r}")


def star_tr(c: MollerConfig, F: PolyFunctional, G: PolyFunctional) -> PolyFunctional:
    """Naive transport of *_T along the classical Moller map: r^-1(rF *_T rG)."""
    r = classical_moller(c)
    prod = exp_product(kernel(c.theory, "starT"), F.compose(r), G.compose(r))
    return prod.compose(classical_moller_inverse(c))


# -- the H identification ----------------------------------------------------


def th_graph_sum(c: MollerConfig, F: PolyFunctional) -> PolyFunctional:
    """T_H as the sum over bouquets of undirected loops, weights hbar^e/|Aut|."""
    terms = [(g, ONE / g.aut_order(), g.e, 0)
             for g in gr.enumerate_family("G6", 1, max_edges=min(c.bounds.hbar_max, _deg(F) // 2))]
    return graph_sum(terms, free_dictionary(c), [F], c.bounds)


def gh_terms(c: MollerConfig, F, G, family: str) -> list:
    h = c.bounds.hbar_max
    lim = dict(
        label_valency=(_deg(F), _deg(G)),
        vertex_valency=max(c.interaction.degree, 3),
        max_excess=h,
        max_unlabelled=2 * h if c.numeric else min(2 * h, c.bounds.lambda_max),
        max_edges=3 * h,
    )
    if c.nilpotent:
        lim["max_path"] = c.n_points - 1
    return [(g, _mi(g.v + g.d) / g.aut_order(), g.e - g.v, 0) for g in gr.enumerate_family(family, 2, **lim)]


def star_hint(c: MollerConfig, F: PolyFunctional, G: PolyFunctional, route: str = "via_G7",
              t_route: str = "via_G3") -> PolyFunctional:
    """F *_{H,int} G over G7(2), over G8(2) for local interactions, or by T_H transport."""
    c.check(F)
    c.check(G)
    if route in ("via_G7", "via_G8"):
        if route == "via_G8":
            _require_local(c)
        fam = "G7" if route == "via_G7" else "G8"
        return graph_sum(gh_terms(c, F, G, fam), interacting_dictionary(c), [F, G], c.bounds)
    if route == "via_transport":
        T = c.theory
        Fi = time_ordering_H(T, F, inverse=True)
        Gi = time_ordering_H(T, G, inverse=True)
        return time_ordering_H(T, star_tint(c, Fi, Gi, t_route))
    raise ConfigurationError(f"unknown route {route!r}")


# -- low-order tables --------------------------------------------------------


@dataclass(frozen=True)
class TermRow:
    graph: gr.Graph
    family: str
    coeff: GR
    hbar_power: int
    lambda_power: int = 0

    def csv_row(self) -> list:
        from .numerics import rational_str

        g = self.graph
        return [g.key, self.family, g.e, g.v, g.d, g.aut_order(), self.hbar_power, self.lambda_power,
                rational_str(self.coeff.re), rational_str(self.coeff.im)]


def low_order_tables(order: int) -> list:
    """B_order: G5(2) graphs with e - v = order and coefficient (-1)^v (-i)^order/|Aut|."""
    if order < 1:
        raise ConfigurationError("orders start at 1")
    gs = gr.enumerate_family("G5", 2, max_excess=order, max_unlabelled=2 * order)
    return [TermRow(g, "G5(2)", (-ONE) ** g.v * _mi(order) / g.aut_order(), order, g.v)
            for g in gs if g.e - g.v == order]


def b_term(c: MollerConfig, F, G, order: int) -> PolyFunctional:
    """The hbar^order coefficient of *_{T,int}, evaluated from its table."""
    terms = [(row.graph, row.coeff, 0, 0) for row in low_order_tables(order)]
    return graph_sum(terms, interacting_dictionary(c), [F, G], c.bounds)


# -- K-graphs ----------------------------------------------------------------


@dataclass(frozen=True)
class KGraph:
    """Vertices 0, 1 are the arguments; K-vertex j is vertex 2 + j.

    Each K-vertex has a left and a right outgoing edge; the left edge carries
    the first index of Delta^A_S, the right edge the second.  Edges ending at
    a K-vertex differentiate that vertex's propagator.
    """

    left: tuple
    right: tuple

    def __post_init__(self):
        k = len(self.left)
        if len(self.right) != k:
            raise ConfigurationError("every K-vertex needs one left and one right edge")
        for j, (a, b) in enumerate(zip(self.left, self.right)):
            for t in (a, b):
                if not 0 <= t < 2 + k:
                    raise ConfigurationError(f"edge target {t} out of range")
                if t == 2 + j:
                    raise ConfigurationError("K-vertices cannot point at themselves")

    @property
    def n_k(self) -> int:
        return len(self.left)

    def in_edges(self) -> list:
        """Per vertex, the list of (K-vertex, side) edges ending there."""
        out = [[] for _ in range(2 + self.n_k)]
        for j in range(self.n_k):
            out[self.left[j]].append((j, "L"))
            out[self.right[j]].append((j, "R"))
        return out


def kgraph_eval(c: MollerConfig, kg: KGraph, F: PolyFunctional, G: PolyFunctional) -> PolyFunctional:
    """Direct evaluation: derivatives of Delta^A_S at K-vertices, of F and G at the arguments."""
    c.check(F)
    c.check(G)
    N = c.n_points
    ins = kg.in_edges()
    ders = {}
    for j in range(kg.n_k):
        r = len(ins[2 + j])
        if r == 0:
            ders[j] = {(): interacting_advanced_symbolic(c.theory, c.interaction, c.bounds, c.lam)}
        elif r not in ders:
            ders[("order", r)] = interacting_advanced_derivative_symbolic(c.theory, c.interaction, r, c.bounds, c.lam)
    argtabs = []
    for x, A in enumerate((F, G)):
        r = len(ins[x])
        argtabs.append({(): A.raw} if r == 0 else {k: p.raw for k, p in A.derivative_tensor(r).items()})
    acc: dict = {}
    k = kg.n_k
    for z in itertools.product(range(N), repeat=2 * k):
        zl, zr = z[:k], z[k:]
        val = {(0,) * N + (0, 0): ONE}
        ok = True
        for x in range(2):
            idx = tuple(sorted((zl[j] if side == "L" else zr[j]) for j, side in ins[x]))
            t = argtabs[x].get(idx)
            if t is None:
                ok = False
                break
            val = mul_raw(val, t, c.bounds)
        if not ok:
            continue
        for j in range(k):
            idx = tuple(sorted((zl[i] if side == "L" else zr[i]) for i, side in ins[2 + j]))
            table = ders[j] if idx == () else ders[("order", len(idx))]
            M = table.get(idx)
            if M is None:
                ok = False
                break
            p = M[zl[j], zr[j]]
            if p.is_zero():
                ok = False
                break
            val = mul_raw(val, p.raw, c.bounds)
            if not val:
                ok = False
                break
        if ok:
            add_into(acc, val)
    return PolyFunctional(N, c.bounds, acc, _trusted=True)


def _ordered_partitions(items: list):
    """All ordered set partitions (sequences of nonempty disjoint blocks)."""
    if not items:
        yield []
        return
    n = len(items)
    for labels in itertools.product(range(n), repeat=n):
        used = sorted(set(labels))
        if used != list(range(len(used))):
            continue
        yield [[items[i] for i in range(n) if labels[i] == b] for b in range(len(used))]


def kgraph_translate(kg: KGraph) -> dict:
    """Rewrite a K-graph as a signed sum of graphs with Delta^A_S edges and S-vertices.

    Derivatives of Delta^A_S are expanded over ordered set partitions B_1..B_p
    of the incoming edges, with sign (-1)^p: the propagator becomes the chain
    R-target -> s_p -> ... -> s_1 -> L-target, and the edges of block B_i end
    at s_i.  Returns canonical graph -> coefficient.
    """
    ins = kg.in_edges()
    k = kg.n_k
    per_vertex = [list(_ordered_partitions(ins[2 + j])) for j in range(k)]
    out: dict = defaultdict(lambda: ZERO)
    for choice in itertools.product(*per_vertex):
        sign = ONE
        nxt = 2
        s_ids = []     # s_ids[j] = unlabelled indices of K-vertex j's chain, s_1 first
        home = {}      # (K-vertex, side) -> vertex where that edge ends
        for j, blocks in enumerate(choice):
            ids = list(range(nxt, nxt + len(blocks)))
            nxt += len(blocks)
            s_ids.append(ids)
            if len(blocks) % 2:
                sign = -sign
            for b, block in enumerate(blocks):
                for e in block:
                    home[e] = ids[b]

        def target(j, side):
            t = kg.left[j] if side == "L" else kg.right[j]
            return t if t < 2 else home[(j, side)]

        edges = []
        for j in range(k):
            chain = [target(j, "R")] + list(reversed(s_ids[j])) + [target(j, "L")]
            edges += [(chain[i], chain[i + 1]) for i in range(len(chain) - 1)]
        g = gr.canonicalize(2, nxt - 2, edges)
        out[g] = out[g] + sign
    return {g: c for g, c in out.items() if not c.is_zero()}


def kgraph_sum(c: MollerConfig, combo, F, G, *, translate: bool = False) -> PolyFunctional:
    """sum coeff * K-graph(F, G); ``translate`` evaluates through the rewrite rules."""
    acc = PolyFunctional.zero(c.n_points, c.bounds)
    if not translate:
        for kg, coeff in combo:
            acc = acc + kgraph_eval(c, kg, F, G) * coeff
        return acc
    merged: dict = defaultdict(lambda: ZERO)
    for kg, coeff in combo:
        for g, s in kgraph_translate(kg).items():
            merged[g] = merged[g] + s * coeff
    terms = [(g, s, 0, 0) for g, s in merged.items() if not s.is_zero()]
    return graph_sum(terms, interacting_dictionary(c), [F, G], c.bounds)


K_SINGLE = KGraph((0,), (1,))
K_B2 = (
    KGraph((0, 0), (1, 1)),
    KGraph((0, 2), (1, 1)),
    KGraph((0, 0), (1, 2)),
    KGraph((0, 2), (1, 2)),
)


def b1_kgraph() -> list:
    return [(K_SINGLE, -I)]


def b2_kgraph() -> list:
    """The four-term K-graph expression of B_2, each with coefficient -1/2."""
    h = GR(rational("-1/2"))
    return [(kg, h) for kg in K_B2]


# -- perturbative agreement --------------------------------------------------


def _first_discrepancy(lhs: PolyFunctional, rhs: PolyFunctional):
    diff = (lhs - rhs).raw
    if not diff:
        return None
    k = min(diff)
    return {"monomial": list(k[:-2]), "hbar": k[-2], "lambda": k[-1], "difference": diff[k].to_json()}


def report(name: str, lhs: PolyFunctional, rhs: PolyFunctional) -> dict:
    bad = _first_discrepancy(lhs, rhs)
    return {
        "name": name,
        "status": "pass" if bad is None else "fail",
        "bounds": lhs.bounds.to_json(),
        "lhs_terms": len(lhs.raw),
        "rhs_terms": len(rhs.raw),
        "first_discrepancy": bad,
    }


def ppa_delta(c: MollerConfig) -> np.ndarray:
    """delta = i Delta^R V'' Delta^A with free propagators (V quadratic)."""
    if not c.interaction.is_quadratic():
        raise PreconditionError("perturbative agreement needs a quadratic interaction")
    N = c.n_points
    Hs = c.interaction.V.derivative_tensor(2)
    V2 = np.empty((N, N), dtype=object)
    for x in range(N):
        for y in range(N):
            p = Hs.get(tuple(sorted((x, y))))
            V2[x, y] = ZERO if p is None else next(iter(p.raw.values()))
    return scale(propagator(c.theory, "R") @ V2 @ propagator(c.theory, "A"), I)


def _coupled_matrix(c: MollerConfig, M: np.ndarray) -> np.ndarray:
    """lambda * M as a matrix usable by gauge maps in either mode."""
    if c.numeric:
        return scale(M, c.lam)
    out = np.empty(M.shape, dtype=object)
    for idx, v in np.ndenumerate(M):
        out[idx] = PolyFunctional.constant(v, c.n_points, c.bounds, lam=1)
    return out


def ppa_check(c: MollerConfig, F: PolyFunctional, G: PolyFunctional | None = None) -> list:
    """Reports for the quadratic-interaction identities."""
    if not c.interaction.is_quadratic():
        raise PreconditionError("perturbative agreement needs a quadratic interaction")
    G = F if G is None else G
    T = c.theory
    ld = _coupled_matrix(c, ppa_delta(c))
    r = classical_moller(c)
    RT = quantum_moller(c, F)
    out = [report("quadratic R_T = alpha_{lambda delta} o r", RT, gauge_map(ld, F.compose(r)))]
    R0 = time_ordering(T, quantum_moller(c, time_ordering(T, F, inverse=True)))
    alt = time_ordering(T, gauge_map(ld, time_ordering(T, F, inverse=True).compose(r)))
    out.append(report("quadratic R_0 = T alpha r T^-1", R0, alt))
    DS = interacting_dirac_symbolic(T, c.interaction, c.bounds, c.lam)
    D0 = propagator(T, "dirac")
    Y = np.empty(DS.shape, dtype=object)
    for idx, v in np.ndenumerate(DS):
        Y[idx] = (v - D0[idx]) * I
    out.append(report("R_0 = r o alpha_{i(D_S - D)}", R0, gauge_map(Y, F).compose(r)))
    AS = interacting_advanced_symbolic(T, c.interaction, c.bounds, c.lam)
    K = np.empty(AS.shape, dtype=object)
    for idx, v in np.ndenumerate(AS):
        K[idx] = v * (-I)
    route = "via_G5"
    out.append(report("quadratic *_{T,int} = exponential product of -i Delta^A_S",
                      star_tint(c, F, G, route), exp_product(K, F, G)))
    return out


__all__ = [
    "ROUTES_T",
    "ROUTES_H",
    "star_tint",
    "star_tr",
    "star_hint",
    "th_graph_sum",
    "low_order_tables",
    "b_term",
    "TermRow",
    "KGraph",
    "kgraph_eval",
    "kgraph_translate",
    "kgraph_sum",
    "b1_kgraph",
    "b2_kgraph",
    "K_B2",
    "ppa_delta",
    "ppa_check",
    "report",
]
