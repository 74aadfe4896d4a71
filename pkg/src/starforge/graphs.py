"""Directed multigraphs with labelled/unlabelled vertices and directed/undirected edges.

Vertices ``0..n-1`` are the labelled vertices ``1..n``; vertices ``n..n+v-1``
are unlabelled.  An edge is ``(s, t, kind)`` with kind ``"d"`` (directed,
s -> t) or ``"u"`` (undirected, stored with ``s <= t``).
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

DIRECTED = "d"
UNDIRECTED = "u"


def _norm_edge(e) -> tuple:
    s, t, k = int(e[0]), int(e[1]), (e[2] if len(e) > 2 else DIRECTED)
    if k not in (DIRECTED, UNDIRECTED):
        raise ValueError(f"unknown edge kind {k!r}")
    if k == UNDIRECTED and s > t:
        s, t = t, s
    return (s, t, k)


class Graph:
    """Canonical representative of an isomorphism class."""

    __slots__ = ("n_labelled", "n_unlabelled", "edges", "key", "_aut_vertex", "_info")

    def __init__(self, n_labelled: int, n_unlabelled: int, edges: tuple, key: str, aut_vertex: int):
        self.n_labelled = n_labelled
        self.n_unlabelled = n_unlabelled
        self.edges = edges
        self.key = key
        self._aut_vertex = aut_vertex
        self._info = None

    @property
    def e(self) -> int:
        return len(self.edges)

    @property
    def v(self) -> int:
        return self.n_unlabelled

    @property
    def d(self) -> int:
        return sum(1 for e in self.edges if e[2] == DIRECTED)

    @property
    def n_vertices(self) -> int:
        return self.n_labelled + self.n_unlabelled

    def __eq__(self, other):
        return isinstance(other, Graph) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"Graph({self.key})"

    def degrees(self) -> list:
        """Per vertex: (in, out, undirected-ends, directed loops, undirected loops)."""
        if self._info is None:
            info = [[0, 0, 0, 0, 0] for _ in range(self.n_vertices)]
            for s, t, k in self.edges:
                if k == DIRECTED:
                    info[s][1] += 1
                    info[t][0] += 1
                    if s == t:
                        info[s][3] += 1
                else:
                    info[s][2] += 1
                    info[t][2] += 1
                    if s == t:
                        info[s][4] += 1
            self._info = [tuple(x) for x in info]
        return self._info

    def valency(self, x: int) -> int:
        i, o, u, _, _ = self.degrees()[x]
        return i + o + u

    def aut_order(self) -> int:
        return aut_order(self)

    def to_json(self) -> dict:
        def name(x):
            return f"L{x + 1}" if x < self.n_labelled else f"U{x - self.n_labelled}"

        return {
            "labelled": self.n_labelled,
            "unlabelled": self.n_unlabelled,
            "edges": [{"s": name(s), "t": name(t), "kind": k} for s, t, k in self.edges],
        }

    @classmethod
    def from_json(cls, obj) -> "Graph":
        n = int(obj["labelled"])

        def idx(name):
            if name[0] == "L":
                return int(name[1:]) - 1
            return n + int(name[1:])

        edges = [(idx(e["s"]), idx(e["t"]), e.get("kind", DIRECTED)) for e in obj["edges"]]
        return canonicalize(n, int(obj.get("unlabelled", 0)), edges)


# -- canonical labelling -----------------------------------------------------


def _adjacency(nv: int, edges: Sequence[tuple]) -> list:
    adj = [Counter() for _ in range(nv)]
    for s, t, k in edges:
        if k == DIRECTED:
            if s == t:
                adj[s][(0, s)] += 1
            else:
                adj[s][(1, t)] += 1
                adj[t][(2, s)] += 1
        else:
            if s == t:
                adj[s][(3, s)] += 1
            else:
                adj[s][(4, t)] += 1
                adj[t][(4, s)] += 1
    return [list(a.items()) for a in adj]


def _refine(colours: list, adj: list) -> list:
    ncls = len(set(colours))
    while True:
        sigs = [
            (colours[x], tuple(sorted((typ, colours[y], m) for (typ, y), m in adj[x])))
            for x in range(len(colours))
        ]
        ranks = {s: r for r, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == ncls:
            return new
        colours, ncls = new, len(ranks)


def _encode(n: int, order: Sequence[int], edges: Sequence[tuple]) -> tuple:
    relabel = {x: x for x in range(n)}
    for i, x in enumerate(order):
        relabel[x] = n + i
    out = []
    for s, t, k in edges:
        a, b = relabel[s], relabel[t]
        if k == UNDIRECTED and a > b:
            a, b = b, a
        out.append((a, b, k))
    return tuple(sorted(out))


def _twins(u: int, w: int, adj_d: list) -> bool:
    """Whether swapping u and w is an automorphism."""
    sw = {u: w, w: u}
    moved = Counter()
    for (typ, y), m in adj_d[u].items():
        moved[(typ, sw.get(y, y))] += m
    return moved == adj_d[w]


def _canon(n: int, v: int, edges: list) -> tuple:
    """(minimal encoding, number of leaves attaining it).

    Twin vertices (whose transposition is an automorphism) are explored once,
    with the leaf count scaled by the size of their class.
    """
    nv = n + v
    adj = _adjacency(nv, edges)
    adj_d = [Counter(dict(a)) for a in adj]
    colours = _refine([x if x < n else n for x in range(nv)], adj)
    best = [None, 0]

    def search(col, weight):
        cells: dict = {}
        for x in range(n, nv):
            cells.setdefault(col[x], []).append(x)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            order = sorted(range(n, nv), key=lambda x: col[x])
            enc = _encode(n, order, edges)
            if best[0] is None or enc < best[0]:
                best[0], best[1] = enc, weight
            elif enc == best[0]:
                best[1] += weight
            return
        classes: list = []
        for w in target:
            for cl in classes:
                if _twins(cl[0], w, adj_d):
                    cl.append(w)
                    break
            else:
                classes.append([w])
        cell = set(target)
        for cl in classes:
            w = cl[0]
            nc = [2 * c + (1 if (x in cell and x != w) else 0) for x, c in enumerate(col)]
            search(_refine(nc, adj), weight * len(cl))

    search(colours, 1)
    return best[0], best[1]


def _key(n: int, v: int, enc: tuple) -> str:
    body = ",".join(f"{s}{k}{t}" for s, t, k in enc)
    return f"{n}:{v}:{body}"


def canonicalize(n_labelled: int, n_unlabelled: int, edges: Iterable) -> Graph:
    """Canonical form; isolated unlabelled vertices are kept (they count in v)."""
    edges = [_norm_edge(e) for e in edges]
    nv = n_labelled + n_unlabelled
    for s, t, _ in edges:
        if not (0 <= s < nv and 0 <= t < nv):
            raise ValueError(f"edge ({s},{t}) outside the vertex range")
    enc, leaves = _canon(n_labelled, n_unlabelled, edges)
    return Graph(n_labelled, n_unlabelled, enc, _key(n_labelled, n_unlabelled, enc), leaves)


def graph(n_labelled: int, edges: Iterable, n_unlabelled: int | None = None) -> Graph:
    """Convenience constructor; ``n_unlabelled`` defaults to the largest index used."""
    edges = [_norm_edge(e) for e in edges]
    if n_unlabelled is None:
        top = max((max(s, t) for s, t, _ in edges), default=-1)
        n_unlabelled = max(0, top + 1 - n_labelled)
    return canonicalize(n_labelled, n_unlabelled, edges)


def aut_order(g: Graph) -> int:
    """|Aut|: vertex symmetries, parallel-edge permutations and undirected-loop flips."""
    mult = Counter(g.edges)
    out = g._aut_vertex
    for (s, t, k), m in mult.items():
        out *= math.factorial(m)
        if k == UNDIRECTED and s == t:
            out *= 2**m
    return out


# -- structural predicates ---------------------------------------------------


def directed_successors(g: Graph) -> list:
    succ = [[] for _ in range(g.n_vertices)]
    for s, t, k in g.edges:
        if k == DIRECTED:
            succ[s].append(t)
    return succ


def has_directed_cycle(g: Graph) -> bool:
    succ = directed_successors(g)
    state = [0] * g.n_vertices

    def visit(x):
        state[x] = 1
        for y in succ[x]:
            if state[y] == 1 or (state[y] == 0 and visit(y)):
                return True
        state[x] = 2
        return False

    return any(state[x] == 0 and visit(x) for x in range(g.n_vertices))


def has_directed_path(g: Graph, a: int, b: int) -> bool:
    succ = directed_successors(g)
    seen, stack = set(), list(succ[a])
    while stack:
        x = stack.pop()
        if x == b:
            return True
        if x not in seen:
            seen.add(x)
            stack.extend(succ[x])
    return False


def longest_directed_path(g: Graph) -> int:
    """Edge count of the longest directed path (the graph must be acyclic)."""
    succ = directed_successors(g)
    memo: dict = {}

    def depth(x):
        if x not in memo:
            memo[x] = max((1 + depth(y) for y in succ[x]), default=0)
        return memo[x]

    return max((depth(x) for x in range(g.n_vertices)), default=0)


def has_loop(g: Graph, at: Iterable[int] | None = None) -> bool:
    at = None if at is None else set(at)
    return any(s == t and (at is None or s in at) for s, t, _ in g.edges)


def _no_forward_paths(g: Graph) -> bool:
    n = g.n_labelled
    return not any(has_directed_path(g, j, k) for j in range(n) for k in range(j + 1, n))


def _unlabelled(g: Graph):
    deg = g.degrees()
    return [deg[x] for x in range(g.n_labelled, g.n_vertices)]


def _all_valency_ge1(g):
    return all(i + o + u >= 1 for i, o, u, _, _ in _unlabelled(g))


def _directed_only(g):
    return all(k == DIRECTED for _, _, k in g.edges)


def is_G(g: Graph) -> bool:
    return _directed_only(g) and _all_valency_ge1(g)


def is_G1(g):
    return g.n_labelled == 2 and g.v == 0 and all(e == (1, 0, DIRECTED) for e in g.edges)


def is_G2(g):
    n = g.n_labelled
    if not (_directed_only(g) and _all_valency_ge1(g)):
        return False
    if n == 1:
        return all(s == 0 and t >= 1 for s, t, _ in g.edges)
    return all((s < n and t >= n) or (s, t) == (1, 0) for s, t, _ in g.edges)


def is_G3(g):
    return (
        _directed_only(g)
        and all(i >= 1 and o >= 1 for i, o, _, _, _ in _unlabelled(g))
        and not has_directed_cycle(g)
        and _no_forward_paths(g)
    )


def is_G5(g):
    return is_G3(g) and all(i + o >= 3 for i, o, _, _, _ in _unlabelled(g))


def is_G6(g):
    return (
        all(i >= 1 and o >= 1 and i + o + u >= 3 for i, o, u, _, _ in _unlabelled(g))
        and not has_directed_cycle(g)
        and _no_forward_paths(g)
    )


def is_G7(g):
    return is_G6(g) and not has_loop(g, range(g.n_labelled))


def is_G8(g):
    return is_G6(g) and not has_loop(g)


def is_tree(g):
    if g.n_labelled != 1 or not _directed_only(g) or g.degrees()[0][0]:
        return False
    return all(i == 1 for i, _, _, _, _ in _unlabelled(g)) and not has_directed_cycle(g)


def is_G9(g):
    return is_tree(g) and all(o != 1 for _, o, _, _, _ in _unlabelled(g))


def is_G10(g):
    return (
        g.n_labelled == 1
        and _directed_only(g)
        and g.degrees()[0][0] == 0
        and all(i >= 1 for i, _, _, _, _ in _unlabelled(g))
        and not has_directed_cycle(g)
    )


def is_G11(g):
    return (
        g.n_labelled == 1
        and g.degrees()[0][0] == 0
        and all(i >= 1 for i, _, _, _, _ in _unlabelled(g))
        and not has_directed_cycle(g)
        and not has_loop(g)
    )


def is_G12(g):
    return is_G11(g) and not any((i, o, u) == (1, 1, 0) for i, o, u, _, _ in _unlabelled(g))


def is_G13(g):
    return is_G11(g) and all(i >= 1 and i + o + u >= 2 and (i, o, u) != (1, 1, 0) for i, o, u, _, _ in _unlabelled(g))


def is_corolla(g):
    return g.n_labelled == 1 and _directed_only(g) and sorted(g.edges) == [(0, g.n_labelled + k, DIRECTED) for k in range(g.v)]


PREDICATES: dict = {
    "G": is_G,
    "G1": is_G1,
    "G2": is_G2,
    "G3": is_G3,
    "G5": is_G5,
    "G6": is_G6,
    "G7": is_G7,
    "G8": is_G8,
    "G9": is_G9,
    "G10": is_G10,
    "G11": is_G11,
    "G12": is_G12,
    "G13": is_G13,
    "corollas": is_corolla,
    "trees": is_tree,
}


# -- enumeration -------------------------------------------------------------


@dataclass(frozen=True)
class Limits:
    """Enumeration bounds.  ``None`` means unbounded (the family must then be finite)."""

    max_edges: int | None = None
    max_unlabelled: int | None = None
    max_excess: int | None = None
    max_path: int | None = None
    label_valency: tuple | None = None
    vertex_valency: int | None = None

    def ok(self, e: int, v: int) -> bool:
        if self.max_edges is not None and e > self.max_edges:
            return False
        if self.max_unlabelled is not None and v > self.max_unlabelled:
            return False
        return self.max_excess is None or e - v <= self.max_excess


@dataclass(frozen=True)
class _Rule:
    n: int
    sources: tuple      # labelled vertices placed before every unlabelled vertex
    sink: int | None    # labelled vertex placed after every unlabelled vertex
    in_min: int
    in_max: int | None
    in_from_labelled_only: bool
    min_final_degree: int
    undirected_loops: str  # "none", "unlabelled", "all", or "off" (no undirected edges)
    requirement: Callable | None  # (in, out, und) -> minimal final degree, for pruning
    predicate: Callable


def _req_G3(i, o, u):
    return i + o + u + (1 if o == 0 else 0)


def _req_G5(i, o, u):
    return max(i + o + u + (1 if o == 0 else 0), 3)


def _req_G13(i, o, u):
    base = max(i + o + u, 2)
    return base + (1 if (i, o, u) == (1, 1, 0) else 0)


def _multisets(pool: Sequence[int], lo: int, hi: int):
    for k in range(lo, hi + 1):
        yield from itertools.combinations_with_replacement(pool, k)


class _Partial:
    __slots__ = ("n", "v", "edges", "deg", "depth")

    def __init__(self, n, v, edges, deg, depth):
        self.n, self.v, self.edges, self.deg, self.depth = n, v, edges, deg, depth


def _lower_bound(rule: _Rule, n: int, v: int, deg: list) -> Fraction:
    total = sum(deg[x][0] + deg[x][1] + deg[x][2] for x in range(n))
    for x in range(n, n + v):
        total += rule.requirement(*deg[x])
    return Fraction(total, 2) - v


def _valency_ok(lim: Limits, n: int, deg: list, touched: Iterable[int]) -> bool:
    for x in touched:
        val = deg[x][0] + deg[x][1] + deg[x][2]
        if x < n:
            if lim.label_valency is not None and val > lim.label_valency[x]:
                return False
        elif lim.vertex_valency is not None and val > lim.vertex_valency:
            return False
    return True


def _excess_ok(rule: _Rule, lim: Limits, n: int, v: int, e: int, deg: list) -> bool:
    if not lim.ok(e, v):
        return False
    if lim.max_excess is not None and rule.requirement is not None:
        if _lower_bound(rule, n, v, deg) > lim.max_excess:
            return False
    return True


def _grow(rule: _Rule, lim: Limits) -> set:
    n = rule.n
    base_deg = [(0, 0, 0)] * n
    start = _Partial(n, 0, (), base_deg, [0] * n)
    level = {canonicalize(n, 0, ()).key: start}
    results: dict = {}
    while level:
        nxt: dict = {}
        for p in level.values():
            for g in _finish(rule, lim, p):
                results.setdefault(g.key, g)
            if lim.max_unlabelled is not None and p.v >= lim.max_unlabelled:
                continue
            new = n + p.v
            pool = list(rule.sources) + ([] if rule.in_from_labelled_only else list(range(n, new)))
            hi = rule.in_max
            budget = _budget(lim, p)
            if budget is not None:
                hi = budget if hi is None else min(hi, budget)
            if hi is None:
                raise ValueError("enumeration is unbounded; set max_edges or max_excess")
            for ins in _multisets(pool, rule.in_min, hi):
                q = _add_vertex(p, ins)
                if q is None:
                    continue
                if lim.max_path is not None and max(q.depth) > lim.max_path:
                    continue
                if not _valency_ok(lim, n, q.deg, set(ins) | {new}):
                    continue
                if not _excess_ok(rule, lim, n, q.v, len(q.edges), q.deg):
                    continue
                key = canonicalize(n, q.v, q.edges).key
                nxt.setdefault(key, q)
        level = nxt
    return set(results.values())


def _room(lim: Limits, e: int, v: int):
    """How many more edges fit without adding vertices."""
    opts = []
    if lim.max_edges is not None:
        opts.append(lim.max_edges - e)
    if lim.max_excess is not None:
        opts.append(lim.max_excess - (e - v))
    return min(opts) if opts else None


def _budget(lim: Limits, p: _Partial):
    """Largest number of in-edges a new vertex may carry."""
    e, v = len(p.edges), p.v
    opts = []
    if lim.max_edges is not None:
        opts.append(lim.max_edges - e)
    if lim.max_excess is not None:
        opts.append(lim.max_excess - (e - v) + 1)
    return min(opts) if opts else None


def _add_vertex(p: _Partial, ins: Sequence[int]) -> _Partial:
    new = p.n + p.v
    deg = [list(d) for d in p.deg] + [[0, 0, 0]]
    depth = list(p.depth) + [0]
    edges = list(p.edges)
    for s in ins:
        edges.append((s, new, DIRECTED))
        deg[s][1] += 1
        deg[new][0] += 1
        depth[new] = max(depth[new], depth[s] + 1)
    return _Partial(p.n, p.v + 1, tuple(edges), [tuple(d) for d in deg], depth)


def _finish(rule: _Rule, lim: Limits, p: _Partial):
    n = p.n
    nv = n + p.v
    if rule.sink is None:
        sink_opts = [()]
    else:
        pool = [x for x in list(rule.sources) + list(range(n, nv)) if x != rule.sink]
        hi = _room(lim, len(p.edges), p.v)
        if hi is None:
            raise ValueError("enumeration is unbounded; set max_edges or max_excess")
        sink_opts = _multisets(pool, 0, hi) if hi >= 0 else []
    for ins in sink_opts:
        edges = list(p.edges)
        deg = [list(d) for d in p.deg]
        depth = list(p.depth)
        for s in ins:
            edges.append((s, rule.sink, DIRECTED))
            deg[s][1] += 1
            deg[rule.sink][0] += 1
            depth[rule.sink] = max(depth[rule.sink], depth[s] + 1)
        if lim.max_path is not None and max(depth) > lim.max_path:
            continue
        deg = [tuple(d) for d in deg]
        touched = set(ins) | ({rule.sink} if ins else set())
        if not _valency_ok(lim, n, deg, touched):
            continue
        if not _excess_ok(rule, lim, n, p.v, len(edges), deg):
            continue
        yield from _undirected(rule, lim, n, p.v, edges, deg)


def _undirected(rule: _Rule, lim: Limits, n: int, v: int, edges: list, deg: list):
    nv = n + v
    room = _room(lim, len(edges), v)
    if rule.undirected_loops == "off" or room is None or room <= 0:
        g = canonicalize(n, v, edges)
        if rule.predicate(g):
            yield g
        return
    pairs = []
    for a in range(nv):
        for b in range(a, nv):
            if a == b:
                if rule.undirected_loops == "none":
                    continue
                if rule.undirected_loops == "unlabelled" and a < n:
                    continue
            pairs.append((a, b))
    for extra in _multisets(pairs, 0, room):
        d2 = [list(d) for d in deg]
        for a, b in extra:
            d2[a][2] += 1
            d2[b][2] += 1
        d2 = [tuple(d) for d in d2]
        if not _valency_ok(lim, n, d2, {x for ab in extra for x in ab}):
            continue
        if lim.max_excess is not None and rule.requirement is not None:
            if _lower_bound(rule, n, v, d2) > lim.max_excess:
                continue
        g = canonicalize(n, v, edges + [(a, b, UNDIRECTED) for a, b in extra])
        if rule.predicate(g):
            yield g


def _direct_G1(lim: Limits) -> set:
    hi = lim.max_edges if lim.max_edges is not None else lim.max_excess
    if hi is None:
        raise ValueError("G1 needs max_edges or max_excess")
    if lim.label_valency is not None:
        hi = min(hi, *lim.label_valency)
    return {canonicalize(2, 0, [(1, 0)] * k) for k in range(hi + 1)}


def _G2_1(lim: Limits) -> set:
    """G2(1): multisets of star valencies."""
    vmax = lim.max_unlabelled
    if vmax is None:
        raise ValueError("G2(1) needs max_unlabelled")
    kmax = []
    if lim.max_edges is not None:
        kmax.append(lim.max_edges)
    if lim.max_excess is not None:
        kmax.append(lim.max_excess + 1)
    if lim.vertex_valency is not None:
        kmax.append(lim.vertex_valency)
    if lim.label_valency is not None:
        kmax.append(lim.label_valency[0])
    if not kmax:
        raise ValueError("G2(1) needs an edge or excess bound")
    top = min(kmax)
    out = set()
    for v in range(vmax + 1):
        for combo in itertools.combinations_with_replacement(range(1, top + 1), v):
            e = sum(combo)
            if not lim.ok(e, v):
                continue
            if lim.label_valency is not None and e > lim.label_valency[0]:
                continue
            edges = [(0, 1 + i) for i, k in enumerate(combo) for _ in range(k)]
            out.add(canonicalize(1, v, edges))
    return out


def _G2_2(lim: Limits) -> set:
    vmax = lim.max_unlabelled
    if vmax is None:
        raise ValueError("G2(2) needs max_unlabelled")
    caps = []
    if lim.max_edges is not None:
        caps.append(lim.max_edges)
    if lim.max_excess is not None:
        caps.append(lim.max_excess + vmax)
    if not caps:
        raise ValueError("G2(2) needs an edge or excess bound")
    top = min(caps)
    kinds = [(a, b) for a in range(top + 1) for b in range(top + 1) if 0 < a + b <= top]
    if lim.vertex_valency is not None:
        kinds = [k for k in kinds if sum(k) <= lim.vertex_valency]
    out = set()
    for v in range(vmax + 1):
        for combo in itertools.combinations_with_replacement(kinds, v):
            e0 = sum(a + b for a, b in combo)
            if e0 > top:
                continue
            for k21 in range(top - e0 + 1):
                e = e0 + k21
                if not lim.ok(e, v):
                    continue
                edges = [(1, 0)] * k21
                for i, (a, b) in enumerate(combo):
                    edges += [(0, 2 + i)] * a + [(1, 2 + i)] * b
                g = canonicalize(2, v, edges)
                if lim.label_valency is not None and any(
                    g.valency(x) > lim.label_valency[x] for x in range(2)
                ):
                    continue
                out.add(g)
    return out


def _rule(family: str, n: int) -> _Rule:
    pred = PREDICATES[family]
    if family in ("G3", "G5", "G6", "G7", "G8"):
        if n == 1:
            raise NotImplementedError  # handled by the caller
        if n != 2:
            raise NotImplementedError(f"{family}({n}) is only generated for n <= 2")
        req = _req_G3 if family == "G3" else _req_G5
        loops = {"G3": "off", "G5": "off", "G6": "all", "G7": "unlabelled", "G8": "none"}[family]
        return _Rule(2, (1,), 0, 1, None, False, 2, loops, req, pred)
    if family == "G10":
        return _Rule(1, (0,), None, 1, None, False, 1, "off", None, pred)
    if family in ("G11", "G12"):
        return _Rule(1, (0,), None, 1, None, False, 1, "none", None, pred)
    if family == "G13":
        return _Rule(1, (0,), None, 1, None, False, 2, "none", _req_G13, pred)
    if family in ("trees", "G9"):
        return _Rule(1, (0,), None, 1, 1, False, 1, "off", None, pred)
    raise KeyError(family)


FAMILIES = ("G1", "G2", "G3", "G5", "G6", "G7", "G8", "G9", "G10", "G11", "G12", "G13", "corollas", "trees")
_ARITY = {"G1": (2,), "G2": (1, 2), "G3": (1, 2), "G5": (1, 2), "G6": (1, 2), "G7": (1, 2), "G8": (1, 2),
          "G9": (1,), "G10": (1,), "G11": (1,), "G12": (1,), "G13": (1,), "corollas": (1,), "trees": (1,)}


def parse_family(name: str) -> tuple[str, int]:
    """'G5(2)' -> ('G5', 2); 'corollas' -> ('corollas', 1)."""
    name = name.strip()
    if "(" in name:
        fam, rest = name.split("(", 1)
        n = int(rest.rstrip(")"))
    else:
        fam, n = name, (_ARITY.get(name, (1,))[-1] if name in _ARITY else 1)
    if fam not in _ARITY:
        raise KeyError(f"unknown graph family {name!r}")
    if n not in _ARITY[fam]:
        raise KeyError(f"family {fam} is not available with {n} labelled vertices")
    return fam, n


def enumerate_family(family: str, n: int | None = None, *, max_edges=None, max_unlabelled=None,
                     max_excess=None, max_path=None, label_valency=None, vertex_valency=None) -> list:
    """Complete, duplicate-free list of canonical members, sorted by key."""
    if n is None:
        family, n = parse_family(family)
    elif family not in _ARITY or n not in _ARITY[family]:
        raise KeyError(f"unknown graph family {family}({n})")
    lim = Limits(max_edges, max_unlabelled, max_excess, max_path,
                 tuple(label_valency) if label_valency is not None else None, vertex_valency)
    if family == "G1":
        out = _direct_G1(lim)
    elif family == "G2":
        out = _G2_1(lim) if n == 1 else _G2_2(lim)
    elif family == "corollas":
        vmax = max_unlabelled if max_unlabelled is not None else max_edges
        if vmax is None:
            raise ValueError("corollas need max_unlabelled or max_edges")
        out = {canonicalize(1, v, [(0, 1 + i) for i in range(v)]) for v in range(vmax + 1)}
        out = {g for g in out if lim.ok(g.e, g.v) and (label_valency is None or g.e <= label_valency[0])}
    elif family in ("G3", "G5", "G7", "G8") and n == 1:
        out = {canonicalize(1, 0, [])}
    elif family == "G6" and n == 1:
        hi = max_edges if max_edges is not None else max_excess
        if hi is None:
            raise ValueError("G6(1) needs max_edges or max_excess")
        if label_valency is not None:
            hi = min(hi, label_valency[0] // 2)
        out = {canonicalize(1, 0, [(0, 0, UNDIRECTED)] * m) for m in range(hi + 1)}
    else:
        out = _grow(_rule(family, n), lim)
    return sorted(out)


def universe(n: int, max_edges: int, kinds: Sequence[str] = (DIRECTED,)) -> list:
    """All graphs on n labelled vertices with at most ``max_edges`` edges of the given kinds.

    Loops and parallel edges are included; unlabelled vertices have valency >= 1.
    With the default kinds this is G(n) truncated by edge count.
    """
    layer = {canonicalize(n, 0, [])}
    seen = set(layer)
    for _ in range(max_edges):
        nxt = set()
        for g in layer:
            nv = g.n_vertices
            ends = list(range(nv + 2))
            for s, t in itertools.product(ends, repeat=2):
                fresh = {x for x in (s, t) if x >= nv}
                if nv + 1 in fresh and nv not in fresh:
                    continue
                for k in kinds:
                    if k == UNDIRECTED and s > t:
                        continue
                    h = canonicalize(n, g.v + len(fresh), list(g.edges) + [(s, t, k)])
                    if h not in seen:
                        seen.add(h)
                        nxt.add(h)
        layer = nxt
    return sorted(seen)


# -- extensions and partial composition --------------------------------------


@dataclass(frozen=True)
class Extension:
    alpha: Graph
    beta: Graph
    gamma: Graph
    at: int
    d_beta: int

    @property
    def classes(self) -> Fraction:
        """Number of equivalence classes of extensions realising ``beta``."""
        return Fraction(self.d_beta * aut_order(self.alpha) * aut_order(self.gamma), aut_order(self.beta))


def _insert_layout(alpha: Graph, gamma: Graph, j: int):
    """Vertex maps of alpha and gamma (minus j) into the composite."""
    n, m = alpha.n_labelled, gamma.n_labelled
    if not 1 <= j <= m:
        raise ValueError(f"vertex {j} is not a labelled vertex of gamma")
    j0 = j - 1
    nb = n + m - 1
    amap = {x: j0 + x for x in range(n)}
    for k in range(alpha.v):
        amap[n + k] = nb + k
    gmap = {}
    for x in range(m):
        if x < j0:
            gmap[x] = x
        elif x > j0:
            gmap[x] = x + n - 1
    for k in range(gamma.v):
        gmap[m + k] = nb + alpha.v + k
    return nb, amap, gmap


def compose_terms(gamma: Graph, alpha: Graph, j: int) -> tuple[Counter, dict]:
    """Product-rule expansion of gamma o_j alpha.

    Returns (composite key -> number of attachments, key -> Graph).
    """
    nb, amap, gmap = _insert_layout(alpha, gamma, j)
    j0 = j - 1
    base = [(amap[s], amap[t], k) for s, t, k in alpha.edges]
    targets = sorted(amap.values())
    ends = []
    for idx, (s, t, k) in enumerate(gamma.edges):
        if s == j0:
            ends.append((idx, 0))
        if t == j0:
            ends.append((idx, 1))
    out: Counter = Counter()
    graphs: dict = {}
    vb = alpha.v + gamma.v
    for choice in itertools.product(targets, repeat=len(ends)):
        repl = dict(zip(ends, choice))
        edges = list(base)
        for idx, (s, t, k) in enumerate(gamma.edges):
            a = repl.get((idx, 0), gmap.get(s))
            b = repl.get((idx, 1), gmap.get(t))
            edges.append((a, b, k))
        g = canonicalize(nb, vb, edges)
        graphs[g.key] = g
        out[g.key] += 1
    return out, graphs


def count_embeddings(beta: Graph, alpha: Graph, gamma: Graph, j: int) -> int:
    """d_beta: subgraphs of beta isomorphic to alpha (on labels j..j+n-1) with quotient gamma."""
    n, m = alpha.n_labelled, gamma.n_labelled
    if beta.n_labelled != n + m - 1 or beta.v != alpha.v + gamma.v:
        return 0
    j0 = j - 1
    nb = beta.n_labelled
    block = list(range(j0, j0 + n))
    ulist = list(range(nb, nb + beta.v))
    mult = Counter(beta.edges)
    total = 0
    for us in itertools.combinations(ulist, alpha.v):
        W = set(block) | set(us)
        inner = [(e, c) for e, c in mult.items() if e[0] in W and e[1] in W]
        for take in _sub_multisets(inner, alpha.e):
            weight = 1
            sub = []
            for (e, c), t in zip(inner, take):
                weight *= math.comb(c, t)
                sub += [e] * t
            if not weight:
                continue
            rel = {x: x - j0 for x in block}
            for i, u in enumerate(us):
                rel[u] = n + i
            if canonicalize(n, alpha.v, [(rel[s], rel[t], k) for s, t, k in sub]).key != alpha.key:
                continue
            rest = Counter(beta.edges)
            rest.subtract(Counter(sub))
            qmap = {}
            for x in range(nb):
                qmap[x] = x if x < j0 else (j0 if x < j0 + n else x - n + 1)
            others = [u for u in ulist if u not in W]
            for i, u in enumerate(others):
                qmap[u] = m + i
            for u in us:
                qmap[u] = j0
            qedges = []
            for e, c in rest.items():
                qedges += [(qmap[e[0]], qmap[e[1]], e[2])] * c
            if canonicalize(m, gamma.v, qedges).key == gamma.key:
                total += weight
    return total


def _sub_multisets(inner, size):
    caps = [c for _, c in inner]

    def rec(i, left):
        if i == len(caps):
            if left == 0:
                yield ()
            return
        for t in range(min(caps[i], left) + 1):
            for rest in rec(i + 1, left - t):
                yield (t,) + rest

    return rec(0, size)


def extensions(alpha: Graph, gamma: Graph, at: int) -> list:
    """Equivalence classes of extensions of gamma by alpha at ``at``, grouped by beta."""
    terms, graphs = compose_terms(gamma, alpha, at)
    out = []
    for key in sorted(terms):
        beta = graphs[key]
        out.append(Extension(alpha, beta, gamma, at, count_embeddings(beta, alpha, gamma, at)))
    return out


def partial_composition(gamma: Graph, alpha: Graph, j: int) -> tuple[dict, dict]:
    """Both sides of the weighted composition law, as key -> Fraction."""
    terms, graphs = compose_terms(gamma, alpha, j)
    norm = aut_order(gamma) * aut_order(alpha)
    lhs = {k: Fraction(c, norm) for k, c in terms.items()}
    rhs = {}
    for k, g in graphs.items():
        d = count_embeddings(g, alpha, gamma, j)
        if d:
            rhs[k] = Fraction(d, aut_order(g))
    return lhs, rhs


__all__ = [
    "DIRECTED",
    "UNDIRECTED",
    "Graph",
    "Extension",
    "Limits",
    "canonicalize",
    "graph",
    "aut_order",
    "enumerate_family",
    "parse_family",
    "extensions",
    "partial_composition",
    "universe",
    "compose_terms",
    "count_embeddings",
    "PREDICATES",
    "FAMILIES",
    "has_directed_cycle",
    "has_directed_path",
    "longest_directed_path",
    "has_loop",
]
