"""Exact scalars and truncated bivariate series in hbar and lambda.

Scalars live in Q(i) and are stored as pairs of gmpy2 rationals.  A series
carries its truncation window (``Bounds``) and refuses to mix with a series
that has a different window.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

import gmpy2

mpq = gmpy2.mpq
_ZERO = mpq(0)
_ONE = mpq(1)


class ConfigurationError(ValueError):
    """Operands carry incompatible truncation bounds or malformed settings."""


class DomainError(ValueError):
    """An operation was applied outside its mathematical domain."""


def rational(x) -> mpq:
    """Coerce int, Fraction, mpq or a "p/q" string into an exact rational."""
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a Fraction or a 'p/q' string")
    return mpq(x)


def rational_str(q) -> str:
    q = mpq(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class GaussianRational:
    """An element re + i*im of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_ZERO) else rational(re)
        self.im = im if type(im) is type(_ZERO) else rational(im)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            raise TypeError("complex floats are not exact")
        return cls(rational(x), _ZERO)

    def __add__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def inverse(self) -> "GaussianRational":
        norm = self.re * self.re + self.im * self.im
        if norm == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return GaussianRational(self.re / norm, -self.im / norm)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        if self.im == 0:
            return rational_str(self.re)
        if self.re == 0:
            return f"{rational_str(self.im)}i"
        return f"({rational_str(self.re)}{'+' if self.im > 0 else '-'}{rational_str(abs(self.im))}i)"

    def to_json(self) -> dict:
        return {"re": rational_str(self.re), "im": rational_str(self.im)}

    @classmethod
    def from_json(cls, obj) -> "GaussianRational":
        if isinstance(obj, Mapping):
            return cls(rational(obj.get("re", 0)), rational(obj.get("im", 0)))
        return cls.coerce(obj)


def _coerce_or_none(x):
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Fraction)) or type(x) is type(_ZERO):
        return GaussianRational(mpq(x), _ZERO)
    return None


ZERO = GaussianRational(0, 0)
ONE = GaussianRational(1, 0)
I = GaussianRational(0, 1)


@dataclass(frozen=True)
class Bounds:
    """Truncation window: hbar_min <= h <= hbar_max and 0 <= l <= lambda_max.

    With ``hbar_min < 0`` the window is in Laurent mode and additionally
    requires h >= -l, the grading of series in lambda/hbar.
    """

    hbar_max: int
    lambda_max: int
    hbar_min: int = 0

    def __post_init__(self):
        if self.hbar_max < 0 or self.lambda_max < 0 or self.hbar_min > 0:
            raise ConfigurationError(f"invalid truncation bounds {self}")

    @property
    def laurent(self) -> bool:
        return self.hbar_min < 0

    def admits(self, h: int, l: int) -> bool:
        if h > self.hbar_max or l > self.lambda_max or l < 0 or h < self.hbar_min:
            return False
        return h >= 0 or h >= -l

    def power_series(self) -> "Bounds":
        return Bounds(self.hbar_max, self.lambda_max, 0)

    def to_json(self) -> dict:
        return {"hbar_max": self.hbar_max, "lambda_max": self.lambda_max, "hbar_min": self.hbar_min}


def check_bounds(a: Bounds, b: Bounds) -> Bounds:
    if a != b:
        raise ConfigurationError(f"truncation bounds differ: {a} vs {b}")
    return a


class TruncatedSeries:
    """Finite sum of c * hbar^h * lambda^l over Q(i), truncated to ``bounds``."""

    __slots__ = ("coeffs", "bounds")

    def __init__(self, coeffs: Mapping[tuple[int, int], object] | None, bounds: Bounds):
        self.bounds = bounds
        clean = {}
        for (h, l), c in (coeffs or {}).items():
            c = GaussianRational.coerce(c)
            if c.is_zero() or not bounds.admits(h, l):
                continue
            clean[(h, l)] = c
        self.coeffs = clean

    @classmethod
    def constant(cls, c, bounds: Bounds) -> "TruncatedSeries":
        return cls({(0, 0): c}, bounds)

    @classmethod
    def monomial(cls, c, h: int, l: int, bounds: Bounds) -> "TruncatedSeries":
        return cls({(h, l): c}, bounds)

    def coeff(self, h: int, l: int) -> GaussianRational:
        return self.coeffs.get((h, l), ZERO)

    def items(self) -> Iterator[tuple[tuple[int, int], GaussianRational]]:
        return iter(sorted(self.coeffs.items()))

    def is_zero(self) -> bool:
        return not self.coeffs

    def _other(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            check_bounds(self.bounds, other.bounds)
            return other
        return TruncatedSeries.constant(GaussianRational.coerce(other), self.bounds)

    def __add__(self, other):
        o = self._other(other)
        out = dict(self.coeffs)
        for k, c in o.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return TruncatedSeries(out, self.bounds)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries({k: -c for k, c in self.coeffs.items()}, self.bounds)

    def __sub__(self, other):
        return self + (-self._other(other))

    def __rsub__(self, other):
        return self._other(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            c = GaussianRational.coerce(other)
            return TruncatedSeries({k: v * c for k, v in self.coeffs.items()}, self.bounds)
        check_bounds(self.bounds, other.bounds)
        b = self.bounds
        out: dict = {}
        for (h1, l1), c1 in self.coeffs.items():
            for (h2, l2), c2 in other.coeffs.items():
                key = (h1 + h2, l1 + l2)
                if not b.admits(*key):
                    continue
                out[key] = out[key] + c1 * c2 if key in out else c1 * c2
        return TruncatedSeries(out, b)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, TruncatedSeries):
            return self.bounds == other.bounds and self.coeffs == other.coeffs
        try:
            return self == self._other(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.bounds, frozenset(self.coeffs.items())))

    def conjugate(self) -> "TruncatedSeries":
        return TruncatedSeries({k: c.conjugate() for k, c in self.coeffs.items()}, self.bounds)

    def constant_term(self) -> GaussianRational:
        return self.coeff(0, 0)

    def exp(self) -> "TruncatedSeries":
        return series_exp(self)

    def retruncate(self, bounds: Bounds) -> "TruncatedSeries":
        """Explicit change of window; terms outside the new window are dropped."""
        return TruncatedSeries(self.coeffs, bounds)

    def at_lambda(self, value) -> "TruncatedSeries":
        """Substitute a number for lambda; the result has lambda_max = 0."""
        lam = GaussianRational.coerce(value)
        b = Bounds(self.bounds.hbar_max, 0, max(self.bounds.hbar_min, 0))
        out: dict = {}
        for (h, l), c in self.coeffs.items():
            if h < 0:
                raise DomainError("cannot substitute lambda into a Laurent tail")
            out[(h, 0)] = out.get((h, 0), ZERO) + c * lam**l
        return TruncatedSeries(out, b)

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for (h, l), c in self.items():
            mono = "".join(
                s for s in (
                    "" if h == 0 else ("ħ" if h == 1 else f"ħ^{h}"),
                    "" if l == 0 else ("λ" if l == 1 else f"λ^{l}"),
                )
            )
            parts.append(f"{c!r}{mono}" if mono else repr(c))
        return " + ".join(parts)

    def to_json(self) -> list:
        return [
            {"hbar": h, "lambda": l, "re": rational_str(c.re), "im": rational_str(c.im)}
            for (h, l), c in self.items()
        ]

    @classmethod
    def from_json(cls, rows, bounds: Bounds) -> "TruncatedSeries":
        return cls(
            {(r["hbar"], r["lambda"]): GaussianRational(rational(r["re"]), rational(r["im"])) for r in rows},
            bounds,
        )


def series_arith(a: TruncatedSeries, b: TruncatedSeries, which: str) -> TruncatedSeries:
    if which == "add":
        return a + b
    if which == "mul":
        return a * b
    raise ConfigurationError(f"unknown series operation {which!r}")


def series_exp(a: TruncatedSeries) -> TruncatedSeries:
    """exp(a) as the finite sum of a^k/k! inside the truncation window."""
    b = a.bounds
    if not b.laurent:
        if not a.constant_term().is_zero():
            raise DomainError("exp needs a zero constant term in power-series mode")
    else:
        for (h, l) in a.coeffs:
            if l < 1 or h < -l:
                raise DomainError("Laurent exp needs lambda_power >= 1 and hbar_power >= -lambda_power")
    out = TruncatedSeries.constant(ONE, b)
    term = TruncatedSeries.constant(ONE, b)
    k = 0
    while True:
        k += 1
        term = term * a * GaussianRational(mpq(1, k))
        if term.is_zero():
            return out
        out = out + term
