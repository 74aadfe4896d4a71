"""Finite causal models: causal order, free propagators and their interacting versions.

Matrices are numpy object arrays.  Constant matrices hold ``GaussianRational``
entries; phi-dependent matrices hold ``PolyFunctional`` entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .functionals import FieldPoint, PolyFunctional
from .numerics import (
    I,
    ONE,
    ZERO,
    Bounds,
    ConfigurationError,
    GaussianRational,
    rational,
    rational_str,
)

GR = GaussianRational
HALF = GR(rational("1/2"))


class PreconditionError(ValueError):
    """A model-level precondition (strictness, nilpotency) does not hold."""


# -- matrices ----------------------------------------------------------------


def matrix(rows: Sequence[Sequence]) -> np.ndarray:
    n = len(rows)
    out = np.empty((n, n), dtype=object)
    for i, row in enumerate(rows):
        if len(row) != n:
            raise ConfigurationError("matrix must be square")
        for j, x in enumerate(row):
            out[i, j] = GR.from_json(x) if isinstance(x, dict) else GR.coerce(rational(x) if isinstance(x, str) else x)
    return out


def zeros(n: int) -> np.ndarray:
    out = np.empty((n, n), dtype=object)
    out[...] = ZERO
    return out


def identity(n: int) -> np.ndarray:
    out = zeros(n)
    for i in range(n):
        out[i, i] = ONE
    return out


def scale(M: np.ndarray, c) -> np.ndarray:
    c = GR.coerce(c) if not isinstance(c, (GR, PolyFunctional)) else c
    out = np.empty(M.shape, dtype=object)
    for idx, x in np.ndenumerate(M):
        out[idx] = x * c
    return out


def is_zero_matrix(M: np.ndarray) -> bool:
    return all((x.is_zero() if hasattr(x, "is_zero") else x == 0) for x in M.flat)


def matrices_equal(A: np.ndarray, B: np.ndarray) -> bool:
    return A.shape == B.shape and all(a == b for a, b in zip(A.flat, B.flat))


def lift(M: np.ndarray, n: int, bounds: Bounds) -> np.ndarray:
    """Constant matrix -> matrix of constant functionals."""
    out = np.empty(M.shape, dtype=object)
    for idx, x in np.ndenumerate(M):
        out[idx] = x if isinstance(x, PolyFunctional) else PolyFunctional.constant(x, n, bounds)
    return out


def substitute(M: np.ndarray, phi) -> np.ndarray:
    """phi-dependent matrix -> matrix of TruncatedSeries at phi."""
    out = np.empty(M.shape, dtype=object)
    for idx, x in np.ndenumerate(M):
        out[idx] = x.eval(phi)
    return out


def matrix_to_json(M: np.ndarray) -> list:
    return [[x.to_json() for x in row] for row in M]


# -- causal order ------------------------------------------------------------


@dataclass(frozen=True)
class CausalOrder:
    """Strict partial order on range(n); ``(a, b)`` in ``relations`` means a precedes b."""

    n_points: int
    relations: frozenset
    linear_extension: tuple

    @classmethod
    def total(cls, n: int) -> "CausalOrder":
        return cls.from_pairs(n, [(a, a + 1) for a in range(n - 1)])

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Sequence[int]]) -> "CausalOrder":
        rel = {(int(a), int(b)) for a, b in pairs}
        for a, b in rel:
            if not (0 <= a < n and 0 <= b < n):
                raise ConfigurationError(f"order relation ({a},{b}) outside [0,{n})")
        changed = True
        while changed:
            changed = False
            for a, b in list(rel):
                for c, d in list(rel):
                    if b == c and (a, d) not in rel:
                        rel.add((a, d))
                        changed = True
        if any(a == b for a, b in rel):
            raise ConfigurationError("causal order has a cycle")
        ext, left = [], set(range(n))
        while left:
            ready = min(x for x in left if not any((y, x) in rel for y in left))
            ext.append(ready)
            left.remove(ready)
        return cls(n, frozenset(rel), tuple(ext))

    def precedes(self, a: int, b: int) -> bool:
        return (a, b) in self.relations

    def down_closure(self, s: Iterable[int]) -> frozenset:
        s = set(s)
        return frozenset(s | {a for (a, b) in self.relations if b in s})


# -- free theory -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FreeTheory:
    order: CausalOrder
    delta_R: np.ndarray
    H: np.ndarray = None
    strict: bool = True
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = self.order.n_points
        if self.delta_R.shape != (n, n):
            raise ConfigurationError("delta_R has the wrong shape")
        if self.H is None:
            object.__setattr__(self, "H", zeros(n))
        if self.H.shape != (n, n):
            raise ConfigurationError("H has the wrong shape")
        for x in range(n):
            for y in range(n):
                if self.H[x, y] != self.H[y, x]:
                    raise ConfigurationError("H must be symmetric")
                if self.strict and not self.delta_R[x, y].is_zero() and not self.order.precedes(y, x):
                    raise ConfigurationError(
                        f"strict model: delta_R({x},{y}) != 0 but {y} does not precede {x}"
                    )

    @property
    def n_points(self) -> int:
        return self.order.n_points

    def propagator(self, kind: str) -> np.ndarray:
        return propagator(self, kind)

    def to_json(self) -> dict:
        return {
            "n": self.n_points,
            "order": sorted([list(p) for p in self.order.relations]),
            "delta_R": [[rational_str(x.re) if x.im == 0 else x.to_json() for x in row] for row in self.delta_R],
            "H": [[rational_str(x.re) if x.im == 0 else x.to_json() for x in row] for row in self.H],
            "strict": self.strict,
        }

    @classmethod
    def from_json(cls, obj) -> "FreeTheory":
        n = int(obj["n"])
        order = obj.get("order", "total")
        co = CausalOrder.total(n) if order == "total" else CausalOrder.from_pairs(n, order)
        dR = matrix(obj["delta_R"])
        H = matrix(obj["H"]) if obj.get("H") is not None else zeros(n)
        return cls(co, dR, H, bool(obj.get("strict", True)))


def propagator(T: FreeTheory, kind: str) -> np.ndarray:
    """Table-1 kernels: R, A, causal, dirac, plus (Wick), feynman."""
    hit = T._cache.get(("prop", kind))
    if hit is not None:
        return hit
    R = T.delta_R
    A = R.T.copy()
    if kind == "R":
        out = R.copy()
    elif kind == "A":
        out = A
    elif kind == "causal":
        out = R - A
    elif kind == "dirac":
        out = scale(R + A, HALF)
    elif kind == "plus":
        out = scale(R - A, I * HALF) + T.H
    elif kind == "feynman":
        out = scale(R + A, I * HALF) + T.H
    else:
        raise ConfigurationError(f"unknown propagator kind {kind!r}")
    out.setflags(write=False)
    T._cache[("prop", kind)] = out
    return out


def causally_separated(T: FreeTheory, sa: Iterable[int], sb: Iterable[int]) -> str:
    """'a_before_b' if a down-set holds sa and misses sb, 'b_before_a' symmetrically."""
    if not T.strict:
        raise PreconditionError("causal separation is defined on strict models only")
    sa, sb = frozenset(sa), frozenset(sb)
    if not (T.order.down_closure(sa) & sb):
        return "a_before_b"
    if not (T.order.down_closure(sb) & sa):
        return "b_before_a"
    return "neither"


# -- interactions ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Interaction:
    V: PolyFunctional

    def __post_init__(self):
        if any(k[-2] or k[-1] for k in self.V.raw):
            raise ConfigurationError("interaction coefficients must be free of hbar and lambda")

    @property
    def diagonal_hessian(self) -> bool:
        return all(sum(1 for e in k[:-2] if e) <= 1 for k in self.V.raw)

    @property
    def degree(self) -> int:
        return self.V.degree()

    def is_quadratic(self) -> bool:
        return all(sum(k[:-2]) == 2 for k in self.V.raw)

    def with_bounds(self, bounds: Bounds) -> PolyFunctional:
        return self.V.retruncate(bounds)


def _hessian(V: PolyFunctional) -> np.ndarray:
    n = V.n_points
    H = np.empty((n, n), dtype=object)
    t = V.derivative_tensor(2)
    zero = PolyFunctional.zero(n, V.bounds)
    for x in range(n):
        for y in range(n):
            H[x, y] = t.get(tuple(sorted((x, y))), zero)
    return H


def _check_numeric(T: FreeTheory, V: Interaction):
    if not T.strict or not V.diagonal_hessian:
        raise PreconditionError("numeric lambda needs the nilpotent regime (strict model, diagonal Hessian)")


def _neumann(first: np.ndarray, step: np.ndarray, n: int, bounds: Bounds, lam) -> np.ndarray:
    """sum_k (-lambda)^k first (step)^k with lambda formal (lam None) or a number."""
    total = first.copy()
    term = first
    k = 0
    while True:
        k += 1
        if lam is None and k > bounds.lambda_max:
            break
        term = term @ step
        term = np.vectorize(lambda p: p.shift(-ONE, 0, 1) if lam is None else p * (-lam), otypes=[object])(term)
        if all(p.is_zero() for p in term.flat):
            break
        if lam is not None and k > n:
            raise PreconditionError("Neumann series did not terminate; model is not nilpotent")
        total = total + term
    return total


def interacting_advanced_symbolic(T: FreeTheory, V: Interaction, bounds: Bounds, lam=None) -> np.ndarray:
    """Delta^A_S(phi) = sum_n (-lambda)^n A (V''(phi) A)^n as a matrix of functionals.

    ``lam=None`` keeps lambda formal; a number sums the finite series exactly.
    """
    key = ("advS", id(V), bounds, None if lam is None else GR.coerce(lam))
    hit = T._cache.get(key)
    if hit is not None:
        return hit[1]
    n = T.n_points
    if lam is not None:
        _check_numeric(T, V)
        lam = GR.coerce(lam)
        bounds = Bounds(bounds.hbar_max, 0, 0)
    A = lift(propagator(T, "A"), n, bounds)
    Vb = V.with_bounds(bounds)
    out = _neumann(A, _hessian(Vb) @ A, n, bounds, lam)
    out.setflags(write=False)
    T._cache[key] = (V, out)
    return out


def interacting_retarded_symbolic(T: FreeTheory, V: Interaction, bounds: Bounds, lam=None) -> np.ndarray:
    """Delta^R_S(phi) = sum_n (-lambda)^n R (V''(phi) R)^n, summed on its own."""
    key = ("retS", id(V), bounds, None if lam is None else GR.coerce(lam))
    hit = T._cache.get(key)
    if hit is not None:
        return hit[1]
    n = T.n_points
    if lam is not None:
        _check_numeric(T, V)
        lam = GR.coerce(lam)
        bounds = Bounds(bounds.hbar_max, 0, 0)
    R = lift(propagator(T, "R"), n, bounds)
    Vb = V.with_bounds(bounds)
    out = _neumann(R, _hessian(Vb) @ R, n, bounds, lam)
    out.setflags(write=False)
    T._cache[key] = (V, out)
    return out


def interacting_causal_symbolic(T: FreeTheory, V: Interaction, bounds: Bounds, lam=None) -> np.ndarray:
    return interacting_retarded_symbolic(T, V, bounds, lam) - interacting_advanced_symbolic(T, V, bounds, lam)


def interacting_dirac_symbolic(T: FreeTheory, V: Interaction, bounds: Bounds, lam=None) -> np.ndarray:
    s = interacting_retarded_symbolic(T, V, bounds, lam) + interacting_advanced_symbolic(T, V, bounds, lam)
    return scale(s, HALF)


def _mode_lambda(mode):
    """mode is 'formal_lambda', ('numeric_lambda', value) or a bare number."""
    if mode is None or mode == "formal_lambda":
        return None
    if isinstance(mode, tuple) and mode[0] == "numeric_lambda":
        return mode[1]
    if isinstance(mode, str):
        raise ConfigurationError(f"unknown lambda mode {mode!r}")
    return mode


def interacting_advanced(T: FreeTheory, V: Interaction, phi, mode="formal_lambda", bounds: Bounds | None = None):
    """Delta^A_S at a configuration: matrix of TruncatedSeries."""
    bounds = bounds or Bounds(0, 4)
    M = interacting_advanced_symbolic(T, V, bounds, _mode_lambda(mode))
    return substitute(M, FieldPoint(phi))


def interacting_advanced_derivative_symbolic(T, V, n: int, bounds: Bounds, lam=None) -> dict:
    """n-th phi-derivative of Delta^A_S: sorted index tuple -> matrix of functionals."""
    M = interacting_advanced_symbolic(T, V, bounds, lam)
    N = T.n_points
    out: dict = {}
    for x in range(N):
        for y in range(N):
            for idx, p in M[x, y].derivative_tensor(n).items():
                if idx not in out:
                    out[idx] = np.empty((N, N), dtype=object)
                    out[idx][...] = None
                out[idx][x, y] = p
    zero = PolyFunctional.zero(N, next(iter(M.flat)).bounds)
    for mat in out.values():
        for i, v in np.ndenumerate(mat):
            if v is None:
                mat[i] = zero
    return out


def interacting_advanced_derivative(T, V, phi, n: int, mode="formal_lambda", bounds: Bounds | None = None) -> dict:
    """n-th phi-derivative of Delta^A_S at phi: sorted index tuple -> series matrix."""
    bounds = bounds or Bounds(0, 4)
    sym = interacting_advanced_derivative_symbolic(T, V, n, bounds, _mode_lambda(mode))
    phi = FieldPoint(phi)
    out = {}
    for idx, M in sym.items():
        S = substitute(M, phi)
        if not all(s.is_zero() for s in S.flat):
            out[idx] = S
    return out


# -- fixtures ----------------------------------------------------------------


def fixture_m1(H=None) -> FreeTheory:
    """N=2, 0 precedes 1, delta_R = [[0,0],[1,0]]."""
    return FreeTheory(CausalOrder.total(2), matrix([[0, 0], [1, 0]]), H if H is not None else zeros(2))


def fixture_m2(H=None) -> FreeTheory:
    """N=3 totally ordered, unit entries strictly below the diagonal."""
    return FreeTheory(
        CausalOrder.total(3), matrix([[0, 0, 0], [1, 0, 0], [1, 1, 0]]), H if H is not None else zeros(3)
    )


def fixture_m3(H=None) -> FreeTheory:
    """N=3 with 0 and 1 unrelated and both preceding 2."""
    order = CausalOrder.from_pairs(3, [(0, 2), (1, 2)])
    return FreeTheory(order, matrix([[0, 0, 0], [0, 0, 0], [1, "1/2", 0]]), H if H is not None else zeros(3))


__all__ = [
    "PreconditionError",
    "CausalOrder",
    "FreeTheory",
    "Interaction",
    "propagator",
    "causally_separated",
    "interacting_advanced",
    "interacting_advanced_symbolic",
    "interacting_retarded_symbolic",
    "interacting_causal_symbolic",
    "interacting_dirac_symbolic",
    "interacting_advanced_derivative",
    "interacting_advanced_derivative_symbolic",
    "fixture_m1",
    "fixture_m2",
    "fixture_m3",
    "matrix",
    "zeros",
    "identity",
    "lift",
    "substitute",
]
