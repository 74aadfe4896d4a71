"""Graphs as multidifferential operators, exponential products and gauge maps."""

from __future__ import annotations

import itertools
import math
import os
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from .functionals import PolyFunctional, add_into, mul_raw, shift_raw
from .graphs import DIRECTED, Graph
from .model import FreeTheory, _mode_lambda, interacting_causal_symbolic, propagator, scale
from .numerics import I, ONE, ZERO, Bounds, ConfigurationError, GaussianRational, rational

GR = GaussianRational
HALF = GR(rational("1/2"))


# -- dictionaries ------------------------------------------------------------


def _entries(M: np.ndarray, bounds: Bounds) -> list:
    """Nonzero entries (row, col, value); poly values are retruncated raw dicts."""
    out = []
    for (x, y), val in np.ndenumerate(M):
        if isinstance(val, PolyFunctional):
            if val.is_zero():
                continue
            if val.degree() == 0 and all(k[-2] == 0 and k[-1] == 0 for k in val.raw):
                out.append((x, y, next(iter(val.raw.values()))))
                continue
            raw = val.retruncate(bounds).raw
            if raw:
                out.append((x, y, raw))
        else:
            if not val.is_zero():
                out.append((x, y, val))
    return out


class Dictionary:
    """What edges and vertices of a graph stand for.

    ``directed`` and ``undirected`` are N x N matrices (constant or
    phi-dependent); ``vertex`` is the functional whose derivatives sit at
    unlabelled vertices.
    """

    def __init__(self, n_points: int, directed=None, undirected=None, vertex: PolyFunctional | None = None):
        self.n_points = n_points
        self.directed = directed
        self.undirected = undirected
        self.vertex = vertex
        self._cache: dict = {}

    def edge_table(self, kind: str, bounds: Bounds) -> list:
        key = ("e", kind, bounds)
        hit = self._cache.get(key)
        if hit is None:
            M = self.directed if kind == DIRECTED else self.undirected
            if M is None:
                raise ConfigurationError(f"dictionary has no matrix for edge kind {kind!r}")
            hit = _entries(M, bounds)
            self._cache[key] = hit
        return hit

    def vertex_table(self, r: int, bounds: Bounds) -> dict:
        key = ("v", r, bounds)
        hit = self._cache.get(key)
        if hit is None:
            if self.vertex is None:
                raise ConfigurationError("dictionary has no vertex functional")
            W = self._cache.get(("W", bounds))
            if W is None:
                W = self.vertex.retruncate(bounds)
                self._cache[("W", bounds)] = W
            hit = {k: p.raw for k, p in W.derivative_tensor(r).items()}
            self._cache[key] = hit
        return hit


class ArgTensor:
    """Derivative tensors of a labelled-vertex argument, with per-bounds caching."""

    def __init__(self, F: PolyFunctional):
        self.F = F
        self.n_points = F.n_points
        self._cache: dict = {}

    def table(self, r: int, bounds: Bounds) -> dict:
        key = (r, bounds)
        hit = self._cache.get(key)
        if hit is None:
            G = self._cache.get(("F", bounds))
            if G is None:
                G = self.F.retruncate(bounds)
                self._cache[("F", bounds)] = G
            if r == 0:
                hit = {(): G.raw} if G.raw else {}
            else:
                hit = {k: p.raw for k, p in G.derivative_tensor(r).items()}
            self._cache[key] = hit
        return hit


class TableArg:
    """An argument given directly by its derivative tensors (used for composite routes)."""

    def __init__(self, n_points: int, provider):
        self.n_points = n_points
        self.provider = provider
        self._cache: dict = {}

    def table(self, r: int, bounds: Bounds) -> dict:
        key = (r, bounds)
        if key not in self._cache:
            self._cache[key] = self.provider(r, bounds)
        return self._cache[key]


def _as_arg(a):
    if isinstance(a, (ArgTensor, TableArg)):
        return a
    if isinstance(a, PolyFunctional):
        return ArgTensor(a)
    raise TypeError(f"cannot use {type(a).__name__} as a graph argument")


# -- contraction -------------------------------------------------------------


def _bundles(g: Graph) -> list:
    """Parallel-edge bundles [(s, t, kind, m)], ordered so vertices complete early."""
    mult = Counter(g.edges)
    return sorted(((s, t, k, m) for (s, t, k), m in mult.items()), key=lambda e: (max(e[0], e[1]), min(e[0], e[1]), e[2]))


def _twin_classes(g: Graph, bundles: list) -> list:
    """Classes of interchangeable unlabelled vertices that can be summed as multisets.

    A class qualifies when its members have no edges among themselves and none
    of their neighbours belongs to another chosen class.
    """
    nv = g.n_vertices
    nbrs = [Counter() for _ in range(nv)]
    for s, t, k, m in bundles:
        if s == t:
            nbrs[s][("loop", k)] += m
        else:
            nbrs[s][("out", k, t)] += m
            nbrs[t][("in", k, s)] += m
    groups: dict = defaultdict(list)
    for u in range(g.n_labelled, nv):
        groups[tuple(sorted(nbrs[u].items(), key=repr))].append(u)
    chosen: list = []
    taken: set = set()
    blocked: set = set()
    for members in sorted(groups.values(), key=lambda c: (-len(c), c)):
        if len(members) < 2:
            continue
        mset = set(members)
        adj = {key[-1] for u in members for key in nbrs[u] if key[0] != "loop"}
        if adj & mset or adj & taken or mset & blocked:
            continue
        chosen.append(members)
        taken |= mset
        blocked |= adj
    return chosen


def _bundle_options(et: list, m: int) -> list:
    """Multisets of m entries: (rows, cols, scalar weight, poly entry ids)."""
    opts = []
    for combo in itertools.combinations_with_replacement(range(len(et)), m):
        w = GR(math.factorial(m))
        for c in Counter(combo).values():
            w = w / math.factorial(c)
        rows, cols, polys = [], [], []
        for j in combo:
            a, b, val = et[j]
            rows.append(a)
            cols.append(b)
            if isinstance(val, GR):
                w = w * val
            else:
                polys.append(j)
        if not w.is_zero():
            opts.append((rows, cols, w, polys))
    return opts


def eval_graph(g: Graph, dictionary: Dictionary, args: Sequence, bounds: Bounds | None = None) -> PolyFunctional:
    """Full tensor contraction of ``g`` with the given dictionary and arguments."""
    args = [_as_arg(a) for a in args]
    if len(args) != g.n_labelled:
        raise ConfigurationError(f"graph has {g.n_labelled} labelled vertices but {len(args)} arguments")
    N = args[0].n_points if args else dictionary.n_points
    if bounds is None:
        bounds = args[0].F.bounds if isinstance(args[0], ArgTensor) else None
    raw = _contract(g, dictionary, args, bounds)
    return PolyFunctional(N, bounds, raw, _trusted=True)


def _dominated(tables_x: dict) -> callable:
    """Predicate: can a partial index multiset still be completed to a key of the table?"""
    keys = [Counter(k) for k in tables_x]
    memo: dict = {}

    def ok(part: tuple) -> bool:
        hit = memo.get(part)
        if hit is None:
            cnt = Counter(part)
            hit = any(all(k[p] >= c for p, c in cnt.items()) for k in keys)
            memo[part] = hit
        return hit

    return ok


def _contract(g: Graph, dictionary: Dictionary, args: list, bounds: Bounds) -> dict:
    nv = g.n_vertices
    n = g.n_labelled
    valency = [g.valency(x) for x in range(nv)]
    tables = []
    for x in range(nv):
        t = args[x].table(valency[x], bounds) if x < n else dictionary.vertex_table(valency[x], bounds)
        if not t:
            return {}
        tables.append(t)
    bundles = _bundles(g)
    etabs = {}
    for s_, t_, k, _ in bundles:
        if k not in etabs:
            etabs[k] = dictionary.edge_table(k, bounds)
            if not etabs[k]:
                return {}
    classes = _twin_classes(g, bundles)
    in_class = {u: ci for ci, C in enumerate(classes) for u in C}

    # units: ("class", outside vertices touched, options) or ("bundle", ...)
    # an option is (slot additions {vertex: [indices]}, scalar, factor keys)
    units = []
    for ci, C in enumerate(classes):
        rep = C[0]
        mine = [bd for bd in bundles if rep in (bd[0], bd[1])]
        configs = []

        def local(i, slots_loc, w, keys):
            if i == len(mine):
                idx = tuple(sorted(slots_loc.get(rep, [])))
                if idx in tables[rep]:
                    out = {x: v for x, v in slots_loc.items() if x != rep}
                    configs.append((out, w, keys + [("v", rep, idx)]))
                return
            s_, t_, k, m = mine[i]
            for rows, cols, ww, pj in _bundle_options(etabs[k], m):
                sl = {x: list(v) for x, v in slots_loc.items()}
                sl.setdefault(t_, []).extend(rows)
                sl.setdefault(s_, []).extend(cols)
                local(i + 1, sl, w * ww, keys + [("e", k, j) for j in pj])

        local(0, {}, ONE, [])
        if not configs:
            return {}
        opts = []
        kk = len(C)
        for combo in itertools.combinations_with_replacement(range(len(configs)), kk):
            w = GR(math.factorial(kk))
            for c in Counter(combo).values():
                w = w / math.factorial(c)
            add: dict = defaultdict(list)
            keys: list = []
            for j in combo:
                out, cw, ck = configs[j]
                w = w * cw
                for x, v in out.items():
                    add[x].extend(v)
                keys.extend(ck)
            opts.append((dict(add), w, keys))
        touched = {x for bd in mine for x in bd[:2] if x != rep}
        units.append((touched, opts))
    for s_, t_, k, m in bundles:
        if s_ in in_class or t_ in in_class:
            continue
        opts = []
        for rows, cols, w, pj in _bundle_options(etabs[k], m):
            add: dict = defaultdict(list)
            add[t_].extend(rows)
            add[s_].extend(cols)
            opts.append((dict(add), w, [("e", k, j) for j in pj]))
        units.append(({s_, t_}, opts))
    if any(not u[1] for u in units):
        return {}

    # vertices outside classes complete once every unit touching them is placed
    outside = [x for x in range(nv) if x not in in_class]
    last = {x: -1 for x in outside}
    for pos, (touched, _) in enumerate(units):
        for x in touched:
            last[x] = pos
    complete_after = [[] for _ in range(len(units) + 1)]
    for x in outside:
        complete_after[last[x] + 1].append(x)
    feasible = {x: _dominated(tables[x]) for x in outside}
    slots = {x: [] for x in outside}
    chosen = {x: None for x in outside}
    groups: dict = defaultdict(lambda: ZERO)
    extra: list = []

    def finish_vertices(pos) -> bool:
        for x in complete_after[pos]:
            idx = tuple(sorted(slots[x]))
            if idx not in tables[x]:
                return False
            chosen[x] = idx
        return True

    if not finish_vertices(0):
        return {}

    def dfs(pos, scalar):
        if pos == len(units):
            key = (tuple(chosen[x] for x in outside), tuple(sorted(extra, key=repr)))
            groups[key] = groups[key] + scalar
            return
        for add, w, keys in units[pos][1]:
            for x, v in add.items():
                slots[x].extend(v)
            if all(feasible[x](tuple(sorted(slots[x]))) for x in add) and finish_vertices(pos + 1):
                extra.extend(keys)
                dfs(pos + 1, scalar * w)
                del extra[len(extra) - len(keys):]
            for x, v in add.items():
                del slots[x][len(slots[x]) - len(v):]
            for x in complete_after[pos + 1]:
                chosen[x] = None

    dfs(0, ONE)

    def factor(key):
        if key[0] == "v":
            return tables[key[1]][key[2]]
        return etabs[key[1]][key[2]][2]

    acc: dict = {}
    memo: dict = {}
    for (idxs, ekeys), c in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        if c.is_zero():
            continue
        fkeys = tuple(("v", x, i) for x, i in zip(outside, idxs)) + ekeys
        prod = _product([factor(k) for k in fkeys], bounds, memo, fkeys)
        if prod:
            add_into(acc, prod, c)
    return acc


def _product(factors: list, bounds: Bounds, memo: dict, keys: tuple) -> dict:
    out = None
    for k in range(len(factors)):
        pref = keys[: k + 1]
        hit = memo.get(pref)
        if hit is not None:
            out = hit
            continue
        out = factors[0] if k == 0 else mul_raw(out, factors[k], bounds)
        memo[pref] = out
        if not out:
            return {}
    return out or {}


def _reduced(bounds: Bounds, h: int, l: int) -> Bounds | None:
    if h > bounds.hbar_max or l > bounds.lambda_max:
        return None
    return Bounds(bounds.hbar_max - h, bounds.lambda_max - l, min(0, bounds.hbar_min - h) if bounds.laurent else 0)


def weighted_eval(g: Graph, coeff: GR, h: int, l: int, dictionary: Dictionary, args: Sequence,
                  bounds: Bounds) -> dict:
    """coeff * hbar^h * lambda^l * g(args), computed inside the reduced window."""
    rb = _reduced(bounds, h, l)
    if rb is None or coeff.is_zero():
        return {}
    raw = _contract(g, dictionary, [_as_arg(a) for a in args], rb)
    return shift_raw(raw, coeff, h, l, bounds)


def _eval_job(payload):
    g, coeff, h, l, dictionary, args, bounds = payload
    return g.key, weighted_eval(g, coeff, h, l, dictionary, args, bounds)


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("STARFORGE_JOBS", "1")))
    except ValueError:
        return 1


def graph_sum(terms: Iterable, dictionary: Dictionary, args: Sequence, bounds: Bounds,
              jobs: int | None = None) -> PolyFunctional:
    """sum of coeff * hbar^h * lambda^l * g(args) over (g, coeff, h, l) terms.

    Terms are reduced in sorted-key order, so the result does not depend on
    the number of workers.
    """
    terms = sorted(terms, key=lambda t: t[0].key)
    args = [_as_arg(a) for a in args]
    N = dictionary.n_points
    jobs = default_jobs() if jobs is None else jobs
    acc: dict = {}
    if jobs > 1 and len(terms) > 1 and all(isinstance(a, ArgTensor) for a in args):
        payloads = [(g, c, h, l, dictionary, args, bounds) for g, c, h, l in terms]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = dict(ex.map(_eval_job, payloads))
        for g, _, _, _ in terms:
            add_into(acc, parts[g.key])
    else:
        for g, c, h, l in terms:
            add_into(acc, weighted_eval(g, c, h, l, dictionary, args, bounds))
    return PolyFunctional(N, bounds, acc, _trusted=True)


# -- exponential products ----------------------------------------------------


def _kernel_entries(K: np.ndarray) -> list:
    out = []
    for (x, y), v in np.ndenumerate(K):
        if isinstance(v, PolyFunctional):
            if not v.is_zero():
                out.append((x, y, v))
        elif not GR.coerce(v).is_zero():
            out.append((x, y, GR.coerce(v)))
    return out


def exp_product(K: np.ndarray, F: PolyFunctional, G: PolyFunctional) -> PolyFunctional:
    """sum_n hbar^n/n! <F^(n), K^(x)n G^(n)>, truncated to the shared window."""
    F._check(G)
    b = F.bounds
    N = F.n_points
    ents = _kernel_entries(K)
    zero_pf = PolyFunctional.zero(N, b)
    # state[X] = sum over ordered x-sequences with multiset X of prod K(x_i, y_i) d_y G
    state = {(): G}
    hmin = min([k[-2] for k in F.raw] + [0]) + min([k[-2] for k in G.raw] + [0])
    out = F * G
    nfact = ONE
    k = 0
    while state:
        k += 1
        if k > b.hbar_max - hmin:
            break
        nfact = nfact * k
        new: dict = {}
        for X, B in state.items():
            for x, y, kv in ents:
                dB = B.diff(y)
                if dB.is_zero():
                    continue
                term = dB * kv
                if term.is_zero():
                    continue
                nX = tuple(sorted(X + (x,)))
                new[nX] = new[nX] + term if nX in new else term
        state = {X: B for X, B in new.items() if not B.is_zero()}
        if not state:
            break
        tens = F.derivative_tensor(k)
        level = zero_pf
        for X, B in state.items():
            dF = tens.get(X)
            if dF is not None:
                level = level + dF * B
        out = out + level.shift(GR(1) / nfact, k, 0)
    return out


KERNELS = ("weyl", "wick", "timeT", "timeTH", "starT")


def kernel(T: FreeTheory, which: str) -> np.ndarray:
    if which == "weyl":
        return scale(propagator(T, "causal"), I * HALF)
    if which == "wick":
        return propagator(T, "plus")
    if which == "timeT":
        return scale(propagator(T, "dirac"), I)
    if which == "timeTH":
        return propagator(T, "feynman")
    if which == "starT":
        return scale(propagator(T, "A"), -I)
    raise ConfigurationError(f"unknown product {which!r}")


def star(T: FreeTheory, which: str, F: PolyFunctional, G: PolyFunctional) -> PolyFunctional:
    return exp_product(kernel(T, which), F, G)


def time_ordered_product(T: FreeTheory, F, G):
    return star(T, "timeT", F, G)


# -- gauge maps --------------------------------------------------------------


def _symmetric(Y: np.ndarray) -> bool:
    n = Y.shape[0]
    return all(Y[x, y] == Y[y, x] for x in range(n) for y in range(n))


def gauge_map(Y: np.ndarray, F: PolyFunctional, *, check: bool = True) -> PolyFunctional:
    """alpha_Y F = exp((hbar/2) D_Y) F with D_Y = <Y, d^2/dphi^2>."""
    if check and not _symmetric(Y):
        raise ConfigurationError("gauge maps need a symmetric kernel")
    ents = _kernel_entries(Y)
    out = F
    term = F
    k = 0
    while True:
        k += 1
        nxt = PolyFunctional.zero(F.n_points, F.bounds)
        for x, y, v in ents:
            d2 = term.diff(x).diff(y)
            if not d2.is_zero():
                nxt = nxt + d2 * v
        term = nxt.shift(HALF / k, 1, 0)
        if term.is_zero():
            return out
        out = out + term


def time_ordering(T: FreeTheory, F: PolyFunctional, inverse: bool = False) -> PolyFunctional:
    """T = alpha_{i Delta^D}."""
    Y = scale(propagator(T, "dirac"), -I if inverse else I)
    return gauge_map(Y, F)


def time_ordering_H(T: FreeTheory, F: PolyFunctional, inverse: bool = False) -> PolyFunctional:
    """T_H = alpha_{Delta^F}."""
    Y = propagator(T, "feynman")
    return gauge_map(scale(Y, -ONE) if inverse else Y, F)


# -- brackets ----------------------------------------------------------------


def bracket(D: np.ndarray, F: PolyFunctional, G: PolyFunctional) -> PolyFunctional:
    """<D, F^(1) (x) G^(1)> for a constant or phi-dependent matrix D."""
    F._check(G)
    out = PolyFunctional.zero(F.n_points, F.bounds)
    for x, y, v in _kernel_entries(D):
        a = F.diff(x)
        if a.is_zero():
            continue
        b = G.diff(y)
        if b.is_zero():
            continue
        out = out + a * b * v
    return out


def peierls(T: FreeTheory, which_delta, F: PolyFunctional, G: PolyFunctional) -> PolyFunctional:
    """<Delta, F' (x) G'> for which_delta in {"free", ("interacting", V[, mode])} or an explicit matrix."""
    if isinstance(which_delta, np.ndarray):
        D = which_delta
    elif which_delta == "free":
        D = propagator(T, "causal")
    elif isinstance(which_delta, tuple) and which_delta[0] == "interacting":
        V = which_delta[1]
        mode = which_delta[2] if len(which_delta) > 2 else "formal_lambda"
        D = interacting_causal_symbolic(T, V, F.bounds, _mode_lambda(mode))
    else:
        raise ConfigurationError(f"unknown bracket kind {which_delta!r}")
    return bracket(D, F, G)


def commutator(T: FreeTheory, which: str, F, G) -> PolyFunctional:
    return star(T, which, F, G) - star(T, which, G, F)


__all__ = [
    "Dictionary",
    "ArgTensor",
    "TableArg",
    "eval_graph",
    "weighted_eval",
    "graph_sum",
    "exp_product",
    "star",
    "kernel",
    "KERNELS",
    "time_ordered_product",
    "gauge_map",
    "time_ordering",
    "time_ordering_H",
    "bracket",
    "peierls",
    "commutator",
    "default_jobs",
]
