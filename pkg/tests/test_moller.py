import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starforge.functionals import PolyFunctional, random_functional
from starforge.model import Interaction, PreconditionError, fixture_m1, fixture_m2, matrix, propagator
from starforge.moller import (
    MollerConfig,
    classical_moller,
    classical_moller_inverse,
    corolla_sum,
    g9_sum,
    local_interaction,
    moller_h,
    omega,
    omega_and_RH,
    quantum_moller,
    quantum_moller_inverse,
    smatrix_bogoliubov,
    tree_sum,
    upsilon,
)
from starforge.numerics import Bounds, ConfigurationError, GaussianRational as GR
from starforge.operators import time_ordering_H

from conftest import cubic_at, poly

def var(i, n, b):
    return PolyFunctional.variable(i, n, b)


@pytest.fixture
def c1():
    b = Bounds(2, 3)
    return MollerConfig(fixture_m1(), cubic_at(0, 2, b), bounds=b)


def generic_v(n, b):
    # cubic with mixed-point terms, not diagonal
    return Interaction(poly({(0, 0, 0): "1/6", (0, 1, 2): "1/2", (1, 1): "1/2", (0, 2, 2): "-1/3"}, n, b))


# -- classical maps


def test_rinv_example(c1):
    b = c1.bounds
    r_inv = classical_moller_inverse(c1)
    lam_phi0sq = (var(0, 2, b) * var(0, 2, b) * GR("1/2")).shift(GR(1), 0, 1)
    assert r_inv[0] == var(0, 2, b)
    assert r_inv[1] == var(1, 2, b) + lam_phi0sq


def test_rinv_numeric_point():
    b = Bounds(2, 0)
    c = MollerConfig(fixture_m1(), cubic_at(0, 2, b), mode=("numeric_lambda", 2), bounds=b)
    assert classical_moller_inverse(c, [1, 0]) == [GR(1), GR(1)]
    assert classical_moller(c, [1, 1]) == [GR(1), GR(0)]


@pytest.mark.parametrize("make", [fixture_m1, fixture_m2])
def test_r_inverts_rinv(make):
    T = make()
    n = T.n_points
    b = Bounds(0, 4)
    c = MollerConfig(T, generic_v(n, b) if n == 3 else cubic_at(0, n, b), bounds=b)
    r, r_inv = classical_moller(c), classical_moller_inverse(c)
    for i in range(n):
        assert r[i].compose(r_inv) == var(i, n, b)
        assert r_inv[i].compose(r) == var(i, n, b)


def test_r_first_order_is_minus_retarded_gradient(m2):
    b = Bounds(0, 3)
    c = MollerConfig(m2, generic_v(3, b), bounds=b)
    R = propagator(m2, "R")
    grad = [c.V.diff(y) for y in range(3)]
    for x, rx in enumerate(classical_moller(c)):
        want = PolyFunctional.zero(3, b)
        for y in range(3):
            want = want - grad[y] * R[x, y]
        assert rx.slice(lam=1) == want.shift(GR(1), 0, 1)


@pytest.mark.parametrize("make", [fixture_m1, fixture_m2])
def test_corolla_and_tree_sums(make, rng):
    T = make()
    n = T.n_points
    b = Bounds(0, 3)
    c = MollerConfig(T, generic_v(n, b) if n == 3 else cubic_at(0, n, b), bounds=b)
    F = random_functional(rng, n, b, 3, min_degree=1)
    assert corolla_sum(c, F) == F.compose(classical_moller_inverse(c))
    assert tree_sum(c, F) == F.compose(classical_moller(c))


def test_g9_resums_trees_numeric(m2, rng):
    b = Bounds(0, 0)
    V = Interaction(poly({(0, 0, 0): "1/6", (1, 1, 1): "1/3", (1, 1): "1/2"}, 3, b))
    for lam in (1, 2, GR("-3/2")):
        c = MollerConfig(m2, V, mode=("numeric_lambda", lam), bounds=b)
        F = random_functional(rng, 3, b, 3, min_degree=1)
        assert g9_sum(c, F) == tree_sum(c, F) == F.compose(classical_moller(c))


def test_numeric_matches_formal_at_lambda(m2, rng):
    formal_b = Bounds(1, 8)
    V = Interaction(poly({(0, 0, 0): "1/6", (1, 1, 1): "1/3"}, 3, formal_b))
    cf = MollerConfig(m2, V, bounds=formal_b)
    F = random_functional(rng, 3, formal_b, 3, min_degree=1)
    full = classical_moller(cf)
    nb = Bounds(1, 0)
    cn = MollerConfig(m2, Interaction(V.V.retruncate(nb)), mode=("numeric_lambda", 2), bounds=nb)
    # the formal series terminates in the nilpotent regime, so the window is exact
    for x in range(3):
        assert full[x].at_lambda(2) == classical_moller(cn)[x]
    assert quantum_moller(cn, F.retruncate(nb)) == quantum_moller(cf, F).at_lambda(2)


def test_numeric_needs_nilpotent(m2):
    b = Bounds(1, 0)
    with pytest.raises(PreconditionError):
        MollerConfig(m2, generic_v(3, b), mode=("numeric_lambda", 1), bounds=b)


# -- quantum Moller operators


@pytest.mark.parametrize("seed", range(4))
def test_rinv_graphs_vs_bogoliubov(m2, seed):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(3, b), bounds=b)
    F = random_functional(random.Random(seed), 3, b, 3, min_degree=1)
    assert quantum_moller_inverse(c, F) == quantum_moller_inverse(c, F, route="bogoliubov")


def test_bogoliubov_negative_hbar_cancels(m2, rng):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(3, b), bounds=b)
    F = random_functional(rng, 3, b, 3, min_degree=1)
    full = smatrix_bogoliubov(c, F, keep_laurent=True)
    assert full.negative_hbar_part().is_zero()


def test_bogoliubov_refuses_numeric(m2):
    b = Bounds(1, 0)
    c = MollerConfig(m2, cubic_at(0, 3, b), mode=("numeric_lambda", 1), bounds=b)
    with pytest.raises(ConfigurationError):
        smatrix_bogoliubov(c, var(0, 3, b))


@given(seed=st.integers(0, 10**6))
@settings(max_examples=10)
def test_round_trip(seed):
    b = Bounds(2, 2)
    c = MollerConfig(fixture_m2(), generic_v(3, b), bounds=b)
    F = random_functional(random.Random(seed), 3, b, 3, min_degree=1)
    RF = quantum_moller(c, F)
    assert quantum_moller_inverse(c, RF) == F
    assert quantum_moller(c, quantum_moller_inverse(c, F)) == F
    assert RF == quantum_moller(c, F, route="inversion")


def test_zero_interaction_is_identity(m2, rng):
    b = Bounds(2, 2)
    c = MollerConfig(m2, Interaction(PolyFunctional.zero(3, b)), bounds=b)
    F = random_functional(rng, 3, b, 3)
    assert quantum_moller(c, F) == F
    assert quantum_moller_inverse(c, F) == F


def test_hbar_zero_slice_is_classical(m2, rng):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(3, b), bounds=b)
    F = random_functional(rng, 3, b, 3, min_degree=1)
    assert quantum_moller_inverse(c, F).slice(hbar=0) == F.compose(classical_moller_inverse(c)).slice(hbar=0)
    assert quantum_moller(c, F).slice(hbar=0) == F.compose(classical_moller(c)).slice(hbar=0)


# -- the quantum factor Upsilon


@pytest.mark.parametrize("seed", range(3))
def test_upsilon_routes(m2, seed):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(3, b), bounds=b)
    F = random_functional(random.Random(seed), 3, b, 3, min_degree=1)
    U = upsilon(c, F)
    assert U == upsilon(c, F, route="graphs")
    assert U.slice(hbar=0) == F.slice(hbar=0)
    # R_T^-1 = Upsilon o r^-1
    assert quantum_moller_inverse(c, F) == upsilon(c, F.compose(classical_moller_inverse(c)), route="graphs")


def test_upsilon_is_linear(m2, rng):
    b = Bounds(2, 3)
    c = MollerConfig(m2, generic_v(3, b), bounds=b)
    F = random_functional(rng, 3, b, 3)
    G = random_functional(rng, 3, b, 3)
    assert upsilon(c, F + G * GR(2, -1)) == upsilon(c, F) + upsilon(c, G) * GR(2, -1)


# -- the H identification


def local_config(lam_max=3, hbar_max=2):
    H = matrix([[0, 1, 0], [1, 0, "1/2"], [0, "1/2", 0]])
    b = Bounds(hbar_max, lam_max)
    V = Interaction(poly({(0, 0, 0): "1/6", (1, 1, 1): "1/2", (2, 2): "1/2"}, 3, b))
    return MollerConfig(fixture_m2(H), V, bounds=b)


def test_local_interaction_detection(m2):
    assert local_interaction(local_config())
    b = Bounds(1, 1)
    assert not local_interaction(MollerConfig(m2, generic_v(3, b), bounds=b))
    with pytest.raises(PreconditionError):
        omega(MollerConfig(m2, generic_v(3, b), bounds=b), var(0, 3, b))


@pytest.mark.parametrize("seed", range(3))
def test_omega_and_RH(seed):
    c = local_config()
    F = random_functional(random.Random(seed), 3, c.bounds, 3, min_degree=1)
    W, RH = omega_and_RH(c, F)
    assert RH == W.compose(classical_moller(c))
    assert W.slice(hbar=0) == F.slice(hbar=0)


@pytest.mark.parametrize("seed", range(3))
def test_RH_is_conjugated_RT(seed):
    c = local_config()
    T = c.theory
    F = random_functional(random.Random(seed), 3, c.bounds, 3, min_degree=1)
    conj = time_ordering_H(T, quantum_moller(c, time_ordering_H(T, F, inverse=True)))
    assert moller_h(c, F) == conj


def test_omega_zero_interaction_is_identity(rng):
    c = local_config()
    c0 = c.with_interaction(Interaction(PolyFunctional.zero(3, c.bounds)))
    F = random_functional(rng, 3, c.bounds, 3)
    assert omega(c0, F) == F
    assert moller_h(c0, F) == F
