import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starforge.functionals import PolyFunctional, random_functional
from starforge.graphs import enumerate_family
from starforge.interacting import (
    K_B2,
    KGraph,
    b1_kgraph,
    b2_kgraph,
    b_term,
    kgraph_eval,
    kgraph_sum,
    kgraph_translate,
    low_order_tables,
    ppa_check,
    ppa_delta,
    star_hint,
    star_tint,
    star_tr,
    th_graph_sum,
)
from starforge.model import Interaction, PreconditionError, fixture_m1, fixture_m2, fixture_m3, matrix
from starforge.moller import MollerConfig, classical_moller, upsilon
from starforge.numerics import Bounds, ConfigurationError, GaussianRational as GR
from starforge.operators import peierls, star, time_ordering_H

from conftest import poly

I = GR(0, 1)
ONE = GR(1)


def generic_v(b):
    return Interaction(poly({(0, 0, 0): "1/6", (0, 1, 2): "1/2", (1, 1): "1/2"}, 3, b))


def diagonal_v(b):
    return Interaction(poly({(0, 0, 0): "1/6", (1, 1, 1): "-1/3", (2, 2): "1/2", (1, 1): "1"}, 3, b))


def pair(seed, b, deg=3, n=3):
    r = random.Random(seed)
    return (random_functional(r, n, b, deg, min_degree=1), random_functional(r, n, b, deg, min_degree=1))


# -- the T identification


def test_zero_interaction_gives_star_T(m2):
    b = Bounds(3, 2)
    c = MollerConfig(m2, Interaction(PolyFunctional.zero(3, b)), bounds=b)
    F, G = pair(0, b)
    want = star(m2, "starT", F, G)
    for route in ("via_G3", "via_G5", "via_moller"):
        assert star_tint(c, F, G, route) == want


@pytest.mark.parametrize("seed", range(3))
def test_routes_agree_formal(m2, seed):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(b), bounds=b)
    F, G = pair(seed, b)
    g3 = star_tint(c, F, G, "via_G3")
    assert star_tint(c, F, G, "via_moller") == g3
    assert star_tint(c, F, G, "via_G5") == g3


@pytest.mark.parametrize("lam", [1, 2, GR("-3/2")])
def test_routes_agree_numeric(m2, lam):
    b = Bounds(2, 0)
    c = MollerConfig(m2, diagonal_v(b), mode=("numeric_lambda", lam), bounds=b)
    F, G = pair(5, b)
    g3 = star_tint(c, F, G, "via_G3")
    assert star_tint(c, F, G, "via_G5") == g3
    assert star_tint(c, F, G, "via_moller") == g3


def test_hbar_slices(m2):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(b), bounds=b)
    F, G = pair(1, b)
    P = star_tint(c, F, G, "via_moller")
    assert P.slice(hbar=0) == F * G
    assert P.slice(hbar=1) == b_term(c, F, G, 1).shift(ONE, 1, 0)
    assert P.slice(hbar=2) == b_term(c, F, G, 2).shift(ONE, 2, 0)


def test_commutator_is_interacting_peierls(m2):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(b), bounds=b)
    F, G = pair(2, b)
    comm = star_tint(c, F, G, "via_moller") - star_tint(c, G, F, "via_moller")
    assert comm.slice(hbar=1) == peierls(m2, ("interacting", c.interaction), F, G).shift(I, 1, 0)


@given(seed=st.integers(0, 10**6))
@settings(max_examples=8)
def test_associative_formal(seed):
    b = Bounds(2, 2)
    c = MollerConfig(fixture_m2(), generic_v(b), bounds=b)
    r = random.Random(seed)
    F, G, H = (random_functional(r, 3, b, 2) for _ in range(3))
    p = lambda X, Y: star_tint(c, X, Y, "via_moller")
    assert p(p(F, G), H) == p(F, p(G, H))


def test_associative_numeric(m3):
    b = Bounds(2, 0)
    V = Interaction(poly({(0, 0, 0): "1/6", (2, 2, 2): "1/2", (1, 1): "1/3"}, 3, b))
    c = MollerConfig(m3, V, mode=("numeric_lambda", 2), bounds=b)
    r = random.Random(11)
    F, G, H = (random_functional(r, 3, b, 2) for _ in range(3))
    p = lambda X, Y: star_tint(c, X, Y, "via_G5")
    assert p(p(F, G), H) == p(F, p(G, H))


@pytest.mark.parametrize("seed", range(2))
def test_upsilon_intertwines(m2, seed):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(b), bounds=b)
    F, G = pair(seed, b)
    lhs = upsilon(c, star_tr(c, F, G))
    assert lhs == star_tint(c, upsilon(c, F), upsilon(c, G), "via_moller")


def test_unknown_route(m2):
    b = Bounds(1, 1)
    c = MollerConfig(m2, generic_v(b), bounds=b)
    with pytest.raises(ConfigurationError):
        star_tint(c, *pair(0, b), "via_G99")


# -- the H identification


def with_hadamard():
    return fixture_m2(matrix([[0, 1, 0], [1, 0, "1/2"], [0, "1/2", 0]]))


@pytest.mark.parametrize("seed", range(2))
def test_star_hint_routes(seed):
    b = Bounds(2, 2)
    c = MollerConfig(with_hadamard(), generic_v(b), bounds=b)
    F, G = pair(seed, b)
    assert star_hint(c, F, G, "via_G7") == star_hint(c, F, G, "via_transport")


def test_star_hint_g8_for_local():
    b = Bounds(2, 2)
    c = MollerConfig(with_hadamard(), diagonal_v(b), bounds=b)
    F, G = pair(3, b)
    assert star_hint(c, F, G, "via_G8") == star_hint(c, F, G, "via_G7")


def test_star_hint_zero_interaction_is_wick():
    T = with_hadamard()
    b = Bounds(3, 1)
    c = MollerConfig(T, Interaction(PolyFunctional.zero(3, b)), bounds=b)
    F, G = pair(4, b)
    assert star_hint(c, F, G) == star(T, "wick", F, G)


def test_bouquet_census():
    gs = enumerate_family("G6", 1, max_edges=2)
    assert sorted((g.e, g.aut_order()) for g in gs) == [(0, 1), (1, 2), (2, 8)]


def test_bouquet_sum_is_TH(rng):
    T = with_hadamard()
    b = Bounds(3, 0)
    c = MollerConfig(T, Interaction(PolyFunctional.zero(3, b)), bounds=b)
    F = random_functional(rng, 3, b, 4)
    assert th_graph_sum(c, F) == time_ordering_H(T, F)


# -- low-order tables


def test_b1_table():
    (row,) = low_order_tables(1)
    assert (row.graph.e, row.graph.v, row.coeff) == (1, 0, -I)


def test_b2_table_shapes():
    rows = low_order_tables(2)
    assert sorted(r.graph.key for r in rows) == sorted(
        ["2:0:1d0,1d0", "2:1:1d2,1d2,2d0", "2:1:1d2,2d0,2d0", "2:2:1d3,2d0,3d2,3d2"]
    )
    assert Counter(r.coeff for r in rows) == Counter({GR("-1/2"): 2, GR("1/2"): 2})


def test_b3_multiset():
    rows = low_order_tables(3)
    assert len(rows) == 28
    want = Counter()
    for c, k in (("1/2", 6), ("1/4", 4), ("1/6", 2), ("1", 2)):
        want[GR(0, c)] += k
        want[GR(0, "-" + c)] += k
    assert Counter(r.coeff for r in rows) == want


@pytest.mark.parametrize("order", [1, 2, 3])
def test_tables_are_g5(order):
    for row in low_order_tables(order):
        g = row.graph
        assert g.e - g.v == order == row.hbar_power
        assert row.lambda_power == g.v
        assert all(g.valency(x) >= 3 for x in range(2, g.n_vertices))


def test_table_order_zero_rejected():
    with pytest.raises(ConfigurationError):
        low_order_tables(0)


# -- K-graphs


def test_kgraph_validation():
    with pytest.raises(ConfigurationError):
        KGraph((0,), ())
    with pytest.raises(ConfigurationError):
        KGraph((2,), (1,))


def test_single_k_vertex_is_b1(m2):
    b = Bounds(1, 3)
    c = MollerConfig(m2, generic_v(b), bounds=b)
    F, G = pair(0, b)
    assert kgraph_sum(c, b1_kgraph(), F, G) == b_term(c, F, G, 1)
    assert kgraph_sum(c, b1_kgraph(), F, G, translate=True) == b_term(c, F, G, 1)


@pytest.mark.parametrize("make", [fixture_m1, fixture_m2, fixture_m3])
def test_b2_kgraphs_diagonal(make):
    T = make()
    n = T.n_points
    b = Bounds(2, 3)
    V = Interaction(poly({(0, 0, 0): "1/6", (n - 1, n - 1, n - 1): "1/2", (0, 0): "1/2"}, n, b))
    c = MollerConfig(T, V, bounds=b)
    F, G = pair(7, b, n=n)
    B2 = b_term(c, F, G, 2)
    assert kgraph_sum(c, b2_kgraph(), F, G) == B2
    assert kgraph_sum(c, b2_kgraph(), F, G, translate=True) == B2


def test_b2_kgraphs_need_diagonal_hessian(m2):
    # the rewrite leaves a self-loop and a 2-cycle of interacting edges, which
    # only vanish when the interacting advanced propagator is strictly triangular
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(b), bounds=b)
    F, G = pair(7, b)
    direct = kgraph_sum(c, b2_kgraph(), F, G)
    assert direct == kgraph_sum(c, b2_kgraph(), F, G, translate=True)
    assert direct != b_term(c, F, G, 2)
    keys = sorted(g.key for g in kgraph_translate(K_B2[3]))
    assert keys == ["2:1:1d2,2d0,2d2", "2:2:1d3,2d0,2d3,3d2", "2:2:1d3,2d0,3d2,3d2"]


def test_translate_simple():
    out = kgraph_translate(KGraph((0,), (1,)))
    assert list(out.values()) == [ONE]
    (g,) = out
    assert (g.e, g.v) == (1, 0)


def test_kgraph_eval_single_vertex(m1):
    b = Bounds(1, 2)
    c = MollerConfig(m1, Interaction(poly({(0, 0, 0): "1/6"}, 2, b)), bounds=b)
    F = PolyFunctional.variable(0, 2, b)
    G = PolyFunctional.variable(1, 2, b)
    # <Delta^A_S, F' (x) G'> picks the (0, 1) entry, which is 1
    assert kgraph_eval(c, KGraph((0,), (1,)), F, G) == PolyFunctional.constant(1, 2, b)
    assert kgraph_eval(c, KGraph((0,), (1,)), G, F).is_zero()


# -- perturbative agreement


def quadratic_config(mode="formal_lambda", b=Bounds(2, 3)):
    V = Interaction(poly({(1, 1): "1/2"}, 3, b))
    return MollerConfig(fixture_m2(), V, mode=mode, bounds=b)


def test_ppa_formal():
    c = quadratic_config()
    F, G = pair(8, c.bounds)
    reps = ppa_check(c, F, G)
    assert len(reps) == 4
    assert all(r["status"] == "pass" for r in reps), [r for r in reps if r["status"] != "pass"]


def test_ppa_numeric():
    c = quadratic_config(("numeric_lambda", 1), Bounds(2, 0))
    F, G = pair(9, c.bounds)
    assert all(r["status"] == "pass" for r in ppa_check(c, F, G))


def test_ppa_zero_interaction(m2):
    b = Bounds(2, 2)
    c = MollerConfig(m2, Interaction(poly({(0, 0): "0"}, 3, b)), bounds=b)
    F, G = pair(10, b)
    assert all(r["status"] == "pass" for r in ppa_check(c, F, G))


def test_ppa_delta_pattern():
    # V = phi_1^2/2 on M2: only the (2, 2) entry survives: Delta^R[2,1] * Delta^A[1,2]
    D = ppa_delta(quadratic_config())
    nz = {(x, y): D[x, y] for x in range(3) for y in range(3) if not D[x, y].is_zero()}
    assert nz == {(2, 2): I}


def test_ppa_rejects_cubic(m2):
    b = Bounds(1, 1)
    with pytest.raises(PreconditionError):
        ppa_check(MollerConfig(m2, generic_v(b), bounds=b), *pair(0, b))


def test_peierls_intertwined(m2):
    b = Bounds(0, 3)
    c = MollerConfig(m2, generic_v(b), bounds=b)
    F, G = pair(12, b)
    r = classical_moller(c)
    lhs = peierls(m2, "free", F.compose(r), G.compose(r))
    assert lhs == peierls(m2, ("interacting", c.interaction), F, G).compose(r)
