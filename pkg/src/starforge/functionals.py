"""Polynomial functionals on a finite configuration space.

A functional on N points is a polynomial in phi_0..phi_{N-1} whose
coefficients are truncated series in hbar and lambda.  Internally every term
is one dict entry keyed by ``(e_0, ..., e_{N-1}, h, l)``; products, sums and
derivatives act directly on that flat layout.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from math import comb
from typing import Iterable, Mapping, Sequence

import gmpy2

from .numerics import (
    ONE,
    ZERO,
    Bounds,
    ConfigurationError,
    DomainError,
    GaussianRational,
    TruncatedSeries,
    check_bounds,
    rational,
    rational_str,
)

mpq = gmpy2.mpq
GR = GaussianRational


class FieldPoint(tuple):
    """A configuration phi: one exact rational per model point."""

    def __new__(cls, values: Iterable):
        return super().__new__(cls, (rational(v) for v in values))


# -- raw kernels -------------------------------------------------------------


def _admit(bounds: Bounds):
    hmax, lmax, hmin = bounds.hbar_max, bounds.lambda_max, bounds.hbar_min
    if hmin == 0:
        return lambda h, l: h <= hmax and l <= lmax
    return lambda h, l: h <= hmax and l <= lmax and h >= hmin and h >= -l


def mul_raw(a: dict, b: dict, bounds: Bounds) -> dict:
    """Truncated product of two flat term dicts."""
    if not a or not b:
        return {}
    if len(b) > len(a):
        a, b = b, a
    hmax, lmax, hmin = bounds.hbar_max, bounds.lambda_max, bounds.hbar_min
    laurent = hmin < 0
    acc: dict = {}
    bl = [(kb, kb[-2], kb[-1], cb.re, cb.im) for kb, cb in b.items()]
    for ka, ca in a.items():
        ha, la = ka[-2], ka[-1]
        ar, ai = ca.re, ca.im
        for kb, hb, lb, br, bi in bl:
            h = ha + hb
            if h > hmax:
                continue
            l = la + lb
            if l > lmax:
                continue
            if laurent and (h < hmin or h < -l):
                continue
            key = tuple(map(int.__add__, ka, kb))
            if ai == 0:
                re, im = ar * br, ar * bi
            elif bi == 0:
                re, im = ar * br, ai * br
            else:
                re, im = ar * br - ai * bi, ar * bi + ai * br
            slot = acc.get(key)
            if slot is None:
                acc[key] = [re, im]
            else:
                slot[0] += re
                slot[1] += im
    return {k: GR(v[0], v[1]) for k, v in acc.items() if v[0] != 0 or v[1] != 0}


def add_into(acc: dict, d: Mapping, scale: GaussianRational = ONE) -> None:
    """acc += scale * d, in place, dropping cancelled terms."""
    one = scale == ONE
    for k, c in d.items():
        if not one:
            c = c * scale
        old = acc.get(k)
        if old is None:
            acc[k] = c
        else:
            s = old + c
            if s.is_zero():
                del acc[k]
            else:
                acc[k] = s


def shift_raw(d: Mapping, c: GaussianRational, dh: int, dl: int, bounds: Bounds) -> dict:
    """c * hbar^dh * lambda^dl * d, truncated."""
    ok = _admit(bounds)
    out = {}
    for k, v in d.items():
        h, l = k[-2] + dh, k[-1] + dl
        if ok(h, l):
            nv = v * c
            if not nv.is_zero():
                out[k[:-2] + (h, l)] = nv
    return out


# -- the functional type -----------------------------------------------------


class PolyFunctional:
    """Polynomial functional with truncated-series coefficients.

    ``terms`` exposes the canonical view: sorted index tuples (a monomial as a
    multiset of point indices) mapped to ``TruncatedSeries``.
    """

    __slots__ = ("n_points", "bounds", "_d", "_cache")

    def __init__(self, n_points: int, bounds: Bounds, data: Mapping | None = None, *, _trusted=False):
        self.n_points = n_points
        self.bounds = bounds
        self._cache: dict = {}
        if _trusted:
            self._d = dict(data) if data else {}
            return
        ok = _admit(bounds)
        clean = {}
        for k, c in (data or {}).items():
            k = tuple(int(x) for x in k)
            if len(k) != n_points + 2 or any(x < 0 for x in k[:-2]) or k[-1] < 0:
                raise ConfigurationError(f"malformed term key {k} for N={n_points}")
            c = GR.coerce(c)
            if c.is_zero() or not ok(k[-2], k[-1]):
                continue
            clean[k] = clean[k] + c if k in clean else c
        self._d = {k: c for k, c in clean.items() if not c.is_zero()}

    # construction

    @classmethod
    def zero(cls, n: int, bounds: Bounds) -> "PolyFunctional":
        return cls(n, bounds, {}, _trusted=True)

    @classmethod
    def constant(cls, c, n: int, bounds: Bounds, hbar: int = 0, lam: int = 0) -> "PolyFunctional":
        return cls(n, bounds, {(0,) * n + (hbar, lam): c})

    @classmethod
    def monomial(cls, indices: Sequence[int], c, n: int, bounds: Bounds, hbar: int = 0, lam: int = 0):
        e = [0] * n
        for i in indices:
            if not 0 <= i < n:
                raise ConfigurationError(f"point index {i} outside [0, {n})")
            e[i] += 1
        return cls(n, bounds, {tuple(e) + (hbar, lam): c})

    @classmethod
    def variable(cls, i: int, n: int, bounds: Bounds) -> "PolyFunctional":
        return cls.monomial((i,), ONE, n, bounds)

    @classmethod
    def from_terms(cls, terms: Mapping[Sequence[int], object], n: int, bounds: Bounds):
        """Build from {indices: coefficient}; a coefficient may be a series."""
        out: dict = {}
        for idx, c in terms.items():
            e = [0] * n
            for i in idx:
                if not 0 <= i < n:
                    raise ConfigurationError(f"point index {i} outside [0, {n})")
                e[i] += 1
            if isinstance(c, TruncatedSeries):
                for (h, l), v in c.coeffs.items():
                    k = tuple(e) + (h, l)
                    out[k] = out.get(k, ZERO) + v
            else:
                k = tuple(e) + (0, 0)
                out[k] = out.get(k, ZERO) + GR.coerce(c)
        return cls(n, bounds, out)

    def _new(self, d: dict) -> "PolyFunctional":
        return PolyFunctional(self.n_points, self.bounds, d, _trusted=True)

    # views

    @property
    def raw(self) -> dict:
        return self._d

    @property
    def terms(self) -> dict:
        grouped: dict = defaultdict(dict)
        for k, c in self._d.items():
            grouped[_indices(k[:-2])][(k[-2], k[-1])] = c
        return {m: TruncatedSeries(s, self.bounds) for m, s in sorted(grouped.items())}

    def degree(self) -> int:
        return max((sum(k[:-2]) for k in self._d), default=-1)

    def is_zero(self) -> bool:
        return not self._d

    def support(self) -> frozenset:
        return frozenset(i for k in self._d for i in range(self.n_points) if k[i])

    def hl_range(self) -> tuple[int, int]:
        return (max((k[-2] for k in self._d), default=0), max((k[-1] for k in self._d), default=0))

    def __len__(self):
        return len(self._d)

    # arithmetic

    def _check(self, other: "PolyFunctional"):
        if self.n_points != other.n_points:
            raise ConfigurationError("functionals live on different point counts")
        check_bounds(self.bounds, other.bounds)

    def _lift(self, other) -> "PolyFunctional":
        if isinstance(other, PolyFunctional):
            self._check(other)
            return other
        if isinstance(other, TruncatedSeries):
            check_bounds(self.bounds, other.bounds)
            z = (0,) * self.n_points
            return self._new({z + hl: c for hl, c in other.coeffs.items()})
        return PolyFunctional.constant(GR.coerce(other), self.n_points, self.bounds)

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        o = self._lift(other)
        d = dict(self._d)
        add_into(d, o._d)
        return self._new(d)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -c for k, c in self._d.items()})

    def __sub__(self, other):
        o = self._lift(other)
        d = dict(self._d)
        add_into(d, o._d, -ONE)
        return self._new(d)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, (GaussianRational, int)) or type(other).__name__ == "mpq":
            c = GR.coerce(other)
            if c.is_zero():
                return self._new({})
            return self._new({k: v * c for k, v in self._d.items()})
        o = self._lift(other)
        return self._new(mul_raw(self._d, o._d, self.bounds))

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, PolyFunctional):
            return self.n_points == other.n_points and self.bounds == other.bounds and self._d == other._d
        if isinstance(other, int) and other == 0:
            return not self._d
        return NotImplemented

    def __hash__(self):
        return hash((self.n_points, self.bounds, frozenset(self._d.items())))

    def shift(self, c, hbar: int = 0, lam: int = 0) -> "PolyFunctional":
        """c * hbar^hbar * lambda^lam * self."""
        return self._new(shift_raw(self._d, GR.coerce(c), hbar, lam, self.bounds))

    def conjugate(self) -> "PolyFunctional":
        return self._new({k: c.conjugate() for k, c in self._d.items()})

    def retruncate(self, bounds: Bounds) -> "PolyFunctional":
        return PolyFunctional(self.n_points, bounds, self._d)

    def slice(self, hbar: int | None = None, lam: int | None = None) -> "PolyFunctional":
        """Terms with the given hbar and/or lambda power, kept at that power."""
        return self._new(
            {k: c for k, c in self._d.items() if (hbar is None or k[-2] == hbar) and (lam is None or k[-1] == lam)}
        )

    def at_lambda(self, value) -> "PolyFunctional":
        """Substitute a number for lambda; the result has lambda_max = 0."""
        lam = GR.coerce(value)
        b = Bounds(self.bounds.hbar_max, 0, 0)
        out: dict = {}
        for k, c in self._d.items():
            if k[-2] < 0:
                raise DomainError("cannot substitute lambda into a Laurent tail")
            nk = k[:-2] + (k[-2], 0)
            out[nk] = out.get(nk, ZERO) + c * lam ** k[-1]
        return PolyFunctional(self.n_points, b, out)

    def negative_hbar_part(self) -> "PolyFunctional":
        return self._new({k: c for k, c in self._d.items() if k[-2] < 0})

    # calculus

    def diff(self, i: int) -> "PolyFunctional":
        key = ("d", i)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = {}
        for k, c in self._d.items():
            e = k[i]
            if e:
                nk = k[:i] + (e - 1,) + k[i + 1 :]
                out[nk] = c * e
        res = self._new(out)
        self._cache[key] = res
        return res

    def derivative_tensor(self, n: int) -> dict:
        """Symbolic n-th derivative: sorted index tuple -> PolyFunctional.

        Only nonzero entries are stored; the tensor is symmetric so the sorted
        tuple stands for every permutation of itself.
        """
        key = ("T", n)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        N = self.n_points
        acc: dict = defaultdict(dict)
        for k, c in self._d.items():
            e = k[:N]
            if sum(e) < n:
                continue
            for take in _sub_multisets(e, n):
                f = 1
                for ei, ti in zip(e, take):
                    for j in range(ti):
                        f *= ei - j
                nk = tuple(a - b for a, b in zip(e, take)) + k[N:]
                slot = acc[_indices(take)]
                slot[nk] = slot[nk] + c * f if nk in slot else c * f
        res = {m: self._new({k: v for k, v in d.items() if not v.is_zero()}) for m, d in acc.items()}
        res = {m: p for m, p in res.items() if not p.is_zero()}
        self._cache[key] = res
        return res

    def eval(self, phi: Sequence) -> TruncatedSeries:
        return evaluate(self, phi)

    def derivative(self, phi: Sequence, n: int) -> "DerivativeTensor":
        return derivative(self, phi, n)

    def substitute(self, phi: Sequence) -> "PolyFunctional":
        """Substitute a configuration, keeping the result as a constant functional."""
        s = evaluate(self, phi)
        z = (0,) * self.n_points
        return self._new({z + hl: c for hl, c in s.coeffs.items()})

    def compose(self, fieldmap: Sequence["PolyFunctional"]) -> "PolyFunctional":
        """Pullback: (F o m)(phi) = F(m_0(phi), ..., m_{N-1}(phi))."""
        N = self.n_points
        if len(fieldmap) != N:
            raise ConfigurationError("field map has the wrong number of components")
        for m in fieldmap:
            self._check(m)
        powers = [[PolyFunctional.constant(ONE, N, self.bounds)] for _ in range(N)]

        def power(i, e):
            while len(powers[i]) <= e:
                powers[i].append(powers[i][-1] * fieldmap[i])
            return powers[i][e]

        acc: dict = {}
        for k, c in self._d.items():
            term = {(0,) * N + (k[-2], k[-1]): c}
            for i in range(N):
                if k[i]:
                    term = mul_raw(term, power(i, k[i])._d, self.bounds)
                    if not term:
                        break
            add_into(acc, term)
        return self._new(acc)

    # serialization

    def to_json(self) -> dict:
        rows = []
        for m, s in self.terms.items():
            rows.append({"indices": list(m), "coeff": s.to_json()})
        return {"monomials": rows}

    @classmethod
    def from_json(cls, obj, n: int, bounds: Bounds) -> "PolyFunctional":
        terms: dict = {}
        for row in obj["monomials"]:
            c = row["coeff"]
            idx = tuple(sorted(row["indices"]))
            if isinstance(c, list):
                val = TruncatedSeries.from_json(c, bounds)
            else:
                val = TruncatedSeries.constant(GR.from_json(c), bounds)
            terms[idx] = terms[idx] + val if idx in terms else val
        return cls.from_terms(terms, n, bounds)

    def __repr__(self):
        if not self._d:
            return "0"
        parts = []
        for m, s in self.terms.items():
            mono = "·".join(f"φ{i}" for i in m)
            parts.append(f"({s!r}){mono}" if mono else f"({s!r})")
        return " + ".join(parts)


def _indices(e: Sequence[int]) -> tuple:
    return tuple(i for i, x in enumerate(e) for _ in range(x))


def _sub_multisets(e: Sequence[int], n: int):
    """Exponent vectors t <= e with |t| = n."""
    N = len(e)

    def rec(i, left, cur):
        if i == N - 1:
            if left <= e[i]:
                yield tuple(cur) + (left,)
            return
        for t in range(min(left, e[i]) + 1):
            yield from rec(i + 1, left - t, cur + [t])

    if N == 0:
        if n == 0:
            yield ()
        return
    yield from rec(0, n, [])


# -- higher-level operations -------------------------------------------------


class DerivativeTensor:
    """Symmetric tensor of n-th partial derivatives at a configuration."""

    def __init__(self, order: int, n_points: int, entries: Mapping[tuple, TruncatedSeries], bounds: Bounds):
        self.order = order
        self.n_points = n_points
        self.bounds = bounds
        self._sorted = {tuple(sorted(k)): v for k, v in entries.items() if not v.is_zero()}

    def __getitem__(self, idx) -> TruncatedSeries:
        if len(idx) != self.order:
            raise IndexError("index tuple has the wrong length")
        return self._sorted.get(tuple(sorted(idx)), TruncatedSeries({}, self.bounds))

    @property
    def entries(self) -> dict:
        out = {}
        for k, v in self._sorted.items():
            for p in set(itertools.permutations(k)):
                out[p] = v
        return out

    def is_zero(self) -> bool:
        return not self._sorted


def _phi(phi, n: int) -> FieldPoint:
    phi = phi if isinstance(phi, FieldPoint) else FieldPoint(phi)
    if len(phi) != n:
        raise ConfigurationError(f"configuration has {len(phi)} values, model has {n} points")
    return phi


def evaluate(F: PolyFunctional, phi: Sequence) -> TruncatedSeries:
    phi = _phi(phi, F.n_points)
    N = F.n_points
    out: dict = {}
    for k, c in F.raw.items():
        v = mpq(1)
        for i in range(N):
            if k[i]:
                v *= phi[i] ** k[i]
        if v:
            hl = (k[-2], k[-1])
            out[hl] = out.get(hl, ZERO) + c * v
    return TruncatedSeries(out, F.bounds)


def derivative(F: PolyFunctional, phi: Sequence, n: int) -> DerivativeTensor:
    if n < 0:
        raise ConfigurationError("derivative order must be non-negative")
    phi = _phi(phi, F.n_points)
    entries = {m: evaluate(p, phi) for m, p in F.derivative_tensor(n).items()}
    return DerivativeTensor(n, F.n_points, entries, F.bounds)


def multiply(F: PolyFunctional, G: PolyFunctional) -> PolyFunctional:
    F._check(G)
    return F * G


def support(F: PolyFunctional) -> frozenset:
    return F.support()


def random_functional(rng, n: int, bounds: Bounds, max_degree: int, *, min_degree: int = 0,
                      density: float = 0.5, coeff_range: int = 3, points: Sequence[int] | None = None,
                      gaussian: bool = False) -> PolyFunctional:
    """Random polynomial with small rational coefficients (test and demo input).

    ``points`` restricts the monomials to those indices; ``rng`` is a
    ``random.Random``.
    """
    pts = list(range(n)) if points is None else list(points)
    terms: dict = {}
    for deg in range(min_degree, max_degree + 1):
        for mono in itertools.combinations_with_replacement(pts, deg):
            if rng.random() > density:
                continue
            re = mpq(rng.randint(-coeff_range, coeff_range), rng.randint(1, 3))
            im = mpq(rng.randint(-coeff_range, coeff_range), rng.randint(1, 3)) if gaussian else mpq(0)
            if re or im:
                terms[mono] = GR(re, im)
    if not terms and max_degree >= min_degree:
        terms[tuple([pts[0]] * max_degree)] = ONE
    return PolyFunctional.from_terms(terms, n, bounds)


def n_monomials(n: int, degree: int) -> int:
    return comb(n + degree - 1, degree)


__all__ = [
    "FieldPoint",
    "PolyFunctional",
    "DerivativeTensor",
    "evaluate",
    "derivative",
    "multiply",
    "support",
    "random_functional",
    "mul_raw",
    "add_into",
    "shift_raw",
    "rational_str",
]
