from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from starforge.functionals import PolyFunctional
from starforge.model import (
    CausalOrder,
    FreeTheory,
    Interaction,
    PreconditionError,
    causally_separated,
    fixture_m2,
    interacting_advanced,
    interacting_advanced_derivative,
    interacting_advanced_symbolic,
    interacting_retarded_symbolic,
    matrices_equal,
    matrix,
    propagator,
)
from starforge.numerics import Bounds, ConfigurationError, GaussianRational as GR, TruncatedSeries

from conftest import cubic_at, poly

B = Bounds(0, 4)
I = GR(0, 1)


def series(c, h=0, l=0, b=B):
    return TruncatedSeries.monomial(GR.coerce(c), h, l, b)


# -- propagators


@pytest.mark.parametrize(
    "kind,expect",
    [
        ("A", [[0, 1], [0, 0]]),
        ("causal", [[0, -1], [1, 0]]),
        ("feynman", [[0, GR(0, "1/2")], [GR(0, "1/2"), 0]]),
    ],
)
def test_m1_propagators(m1, kind, expect):
    assert matrices_equal(propagator(m1, kind), matrix(expect))


@pytest.mark.parametrize("fixture", ["m1", "m2", "m3"])
def test_propagator_identities(fixture, request):
    T = request.getfixturevalue(fixture)
    D = propagator(T, "causal")
    assert matrices_equal(D, -D.T)
    A = propagator(T, "A")
    P = A
    for _ in range(T.n_points - 1):
        P = P @ A
    assert all(x.is_zero() for x in P.flat)
    diff = propagator(T, "feynman") - propagator(T, "plus")
    assert matrices_equal(diff, np.vectorize(lambda x: x * I, otypes=[object])(A))


def test_feynman_minus_plus_with_hadamard_part():
    H = matrix([[2, "1/3", 0], ["1/3", 0, 1], [0, 1, 5]])
    T = fixture_m2(H)
    diff = propagator(T, "feynman") - propagator(T, "plus")
    assert matrices_equal(diff, np.vectorize(lambda x: x * I, otypes=[object])(propagator(T, "A")))


def test_strict_model_rejects_acausal_entry():
    with pytest.raises(ConfigurationError):
        FreeTheory(CausalOrder.total(2), matrix([[0, 1], [0, 0]]))


def test_asymmetric_hadamard_rejected():
    with pytest.raises(ConfigurationError):
        fixture_m2(matrix([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))


def test_model_json_round_trip(m3):
    T = FreeTheory.from_json(m3.to_json())
    assert matrices_equal(T.delta_R, m3.delta_R)
    assert T.order.relations == m3.order.relations


# -- interacting advanced propagator


def test_single_chain_formal(m2):
    V = cubic_at(1, 3, B)
    M = interacting_advanced(m2, V, [5, 7, 11])
    assert M[0, 2] == series(1) - series(7, 0, 1)
    A = propagator(m2, "A")
    for x in range(3):
        for y in range(3):
            if (x, y) != (0, 2):
                assert M[x, y] == series(A[x, y])


def test_zero_interaction(m2):
    V = Interaction(PolyFunctional.zero(3, B))
    M = interacting_advanced(m2, V, [1, 2, 3])
    A = propagator(m2, "A")
    assert all(M[i] == series(A[i]) for i in np.ndindex(3, 3))


def test_numeric_substitution(m2):
    V = cubic_at(1, 3, B)
    M = interacting_advanced(m2, V, [0, 3, 0], mode=("numeric_lambda", 2))
    assert M[0, 2].coeff(0, 0) == GR(-5)


def test_numeric_needs_nilpotent_regime(m2):
    V = Interaction(poly({(0, 1, 2): 1}, 3, B))
    with pytest.raises(PreconditionError):
        interacting_advanced(m2, V, [1, 1, 1], mode=("numeric_lambda", 1))


def test_first_derivative(m2):
    V = cubic_at(1, 3, B)
    D = interacting_advanced_derivative(m2, V, [1, 1, 1], 1)
    assert set(D) == {(1,)}
    assert D[(1,)][0, 2] == series(-1, 0, 1)


def test_quadratic_interaction_has_constant_propagator(m2):
    V = Interaction(poly({(0, 0): "1/2", (1, 2): 3}, 3, B))
    assert interacting_advanced_derivative(m2, V, [1, 2, 3], 1) == {}


def _sym_inverse_oracle(T, V, phi, lam):
    """(1 + lam A V'')^-1 A by exact symbolic inversion."""
    N = T.n_points
    A = sympy.Matrix(N, N, lambda i, j: sympy.Rational(str(propagator(T, "A")[i, j].re)))
    x = sympy.symbols(f"x0:{N}")
    expr = 0
    for k, c in V.V.terms.items():
        m = sympy.Rational(str(c.coeff(0, 0).re))
        for i in k:
            m *= x[i]
        expr += m
    Hs = sympy.hessian(expr, x).subs(dict(zip(x, phi)))
    return (sympy.eye(N) + lam * A * Hs).inv() * A


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=3), st.fractions(-2, 2, max_denominator=3))
def test_numeric_neumann_matches_matrix_inverse(phi, lam):
    T = fixture_m2()
    V = Interaction(poly({(0, 0, 0): "1/6", (1, 1, 1): "1/2", (2, 2): 2}, 3, B))
    M = interacting_advanced(T, V, phi, mode=("numeric_lambda", GR(lam)))
    oracle = _sym_inverse_oracle(T, V, phi, sympy.Rational(lam.numerator, lam.denominator))
    for i, j in np.ndindex(3, 3):
        assert M[i, j].coeff(0, 0).re == Fraction(str(oracle[i, j]))


def test_derivative_contraction_identity(m2):
    # K' + K S''' K = 0, with S''' carrying the coupling
    Bf = Bounds(0, 3)
    V = Interaction(poly({(1, 1, 1): "1/6", (0, 1, 2): 1, (2, 2, 2): 2}, 3, Bf))
    K = interacting_advanced_symbolic(m2, V, Bf)
    dK = {}
    for x, y in np.ndindex(3, 3):
        for idx, p in K[x, y].derivative_tensor(1).items():
            dK[(x, y, idx[0])] = p
    V3 = V.V.derivative_tensor(3)
    zero = PolyFunctional.zero(3, Bf)
    for x, y, z in np.ndindex(3, 3, 3):
        rhs = zero
        for a, b in np.ndindex(3, 3):
            t = V3.get(tuple(sorted((a, b, z))))
            if t is not None:
                rhs = rhs + K[x, a] * t.shift(GR(1), 0, 1) * K[b, y]
        assert dK.get((x, y, z), zero) + rhs == zero


def test_telescoping_identity(m2):
    Bf = Bounds(0, 4)
    V = Interaction(poly({(1, 1, 1): "1/6", (0, 2, 2): 1}, 3, Bf))
    RS = interacting_retarded_symbolic(m2, V, Bf)
    R = propagator(m2, "R")
    A = propagator(m2, "A")
    H = V.V.derivative_tensor(2)
    zero = PolyFunctional.zero(3, Bf)

    def lift(M):
        return np.vectorize(lambda c: PolyFunctional.constant(c, 3, Bf), otypes=[object])(M)

    V2 = np.empty((3, 3), dtype=object)
    for x, y in np.ndindex(3, 3):
        V2[x, y] = H.get(tuple(sorted((x, y))), zero).shift(GR(1), 0, 1)
    eye = lift(matrix(np.eye(3, dtype=int).tolist()))
    rho = eye + lift(R) @ V2
    lhs = rho @ RS @ rho.T
    rhs = lift(R) + lift(R) @ V2 @ lift(A)
    assert all(lhs[i] == rhs[i] for i in np.ndindex(3, 3))


# -- causal separation


@pytest.mark.parametrize(
    "sa,sb,expect",
    [({0}, {2}, "a_before_b"), ({0, 2}, {1}, "neither"), (set(), {1}, "a_before_b"), ({2}, {0, 1}, "b_before_a")],
)
def test_causally_separated(m2, sa, sb, expect):
    assert causally_separated(m2, sa, sb) == expect


def test_unrelated_points(m3):
    assert causally_separated(m3, {0}, {1}) == "a_before_b"
    assert causally_separated(m3, {1}, {0}) == "a_before_b"


def test_separation_needs_strict_model():
    T = FreeTheory(CausalOrder.total(2), matrix([[0, 1], [1, 0]]), strict=False)
    with pytest.raises(PreconditionError):
        causally_separated(T, {0}, {1})
