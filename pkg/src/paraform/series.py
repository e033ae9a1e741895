"""Truncated Laurent series with exact rational coefficients.

A series stores a sparse map exponent -> Fraction together with a
truncation bound ``trunc``: coefficients are exact for every exponent
strictly below ``trunc``.  ``trunc`` is an integer or the float
infinity sentinel ``INF`` for series known to all orders (exact
Laurent polynomials).  All operations are pure and propagate the
truncation pessimistically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

INF = float("inf")

Exponent = int
Trunc = Union[int, float]


class SeriesError(Exception):
    """Base class for series arithmetic failures."""


class ZeroInverse(SeriesError):
    """Inversion of a series that is zero modulo its truncation."""


class PrecisionError(SeriesError):
    """An operation needs a finite truncation but none is available."""


def frac(value) -> Fraction:
    """Coerce ints, strings like '3/2', and Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise SeriesError(f"bad rational literal {value!r}: {exc}") from exc
    raise SeriesError(f"cannot interpret {value!r} as a rational")


def frac_str(value: Fraction) -> str:
    """Canonical text form: '3' for integers, '3/2' otherwise."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class RamifiedContext:
    """Degree of the cover currently in use: z = zeta**b."""

    b: int = 1

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("cover degree must be >= 1")

    def extend(self, b: int) -> "RamifiedContext":
        return RamifiedContext(self.b * b)


class LaurentSeries:
    """Immutable sparse Laurent series over Q with tracked truncation."""

    __slots__ = ("coeffs", "trunc")

    def __init__(self, coeffs: Mapping[int, Fraction] | Iterable = (), trunc: Trunc = INF):
        if isinstance(coeffs, Mapping):
            items = coeffs.items()
        else:
            items = coeffs
        clean = {}
        for e, c in items:
            c = frac(c)
            if c == 0:
                continue
            e = int(e)
            if e < trunc:
                clean[e] = clean.get(e, Fraction(0)) + c
                if clean[e] == 0:
                    del clean[e]
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "trunc", trunc)

    def __setattr__(self, *a):
        raise AttributeError("LaurentSeries is immutable")

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(trunc: Trunc = INF) -> "LaurentSeries":
        return LaurentSeries({}, trunc)

    @staticmethod
    def one(trunc: Trunc = INF) -> "LaurentSeries":
        return LaurentSeries({0: Fraction(1)}, trunc)

    @staticmethod
    def monomial(coeff, exponent: int, trunc: Trunc = INF) -> "LaurentSeries":
        return LaurentSeries({exponent: frac(coeff)}, trunc)

    @staticmethod
    def const(coeff, trunc: Trunc = INF) -> "LaurentSeries":
        return LaurentSeries.monomial(coeff, 0, trunc)

    # -- inspection ----------------------------------------------------

    def is_zero(self) -> bool:
        """True when zero modulo the truncation."""
        return not self.coeffs

    def coeff(self, exponent: int) -> Fraction:
        return self.coeffs.get(exponent, Fraction(0))

    def support(self):
        return sorted(self.coeffs)

    def val_lower(self) -> Trunc:
        """Lower bound for the valuation: min exponent, or trunc if zero."""
        if self.coeffs:
            return min(self.coeffs)
        return self.trunc

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.coeffs == other.coeffs and self.trunc == other.trunc

    def __hash__(self):
        return hash((tuple(sorted(self.coeffs.items())), self.trunc))

    def agrees(self, other: "LaurentSeries", upto: Trunc = INF) -> bool:
        """Equality of all coefficients below min(truncs, upto)."""
        bound = min(self.trunc, other.trunc, upto)
        exps = set(self.coeffs) | set(other.coeffs)
        return all(self.coeff(e) == other.coeff(e) for e in exps if e < bound)

    def __repr__(self):
        if not self.coeffs:
            body = "0"
        else:
            parts = []
            for e in self.support():
                c = frac_str(self.coeffs[e])
                parts.append(f"({c})z^{e}" if e else f"({c})")
            body = " + ".join(parts)
        t = "inf" if self.trunc == INF else str(self.trunc)
        return f"<{body} mod z^{t}>"

    # -- ring operations ----------------------------------------------

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        t = min(self.trunc, other.trunc)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, Fraction(0)) + c
        return LaurentSeries(out, t)

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries({e: -c for e, c in self.coeffs.items()}, self.trunc)

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def scale(self, c) -> "LaurentSeries":
        c = frac(c)
        if c == 0:
            # scaling by an exact zero keeps no uncertainty
            return LaurentSeries.zero(INF)
        return LaurentSeries({e: c * v for e, v in self.coeffs.items()}, self.trunc)

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        t = min(self.trunc + other.val_lower(), other.trunc + self.val_lower())
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                if e < t:
                    out[e] = out.get(e, Fraction(0)) + c1 * c2
        return LaurentSeries(out, t)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by z**k."""
        return LaurentSeries({e + k: c for e, c in self.coeffs.items()}, self.trunc + k)

    def truncate(self, trunc: Trunc) -> "LaurentSeries":
        if trunc >= self.trunc:
            return self
        return LaurentSeries({e: c for e, c in self.coeffs.items() if e < trunc}, trunc)

    def inverse(self) -> "LaurentSeries":
        """Multiplicative inverse, exact up to trunc - 2*valuation."""
        if not self.coeffs:
            raise ZeroInverse("cannot invert a series that is zero modulo truncation")
        v = min(self.coeffs)
        lead = self.coeffs[v]
        out_trunc = self.trunc - 2 * v
        if len(self.coeffs) == 1:
            return LaurentSeries.monomial(1 / lead, -v, out_trunc)
        if self.trunc == INF:
            raise PrecisionError("inverting a multi-term series needs a finite truncation")
        # recurrence for the coefficients of 1 / (self / lead z^v)
        span = int(self.trunc - v)
        tail = {e - v: c / lead for e, c in self.coeffs.items() if e != v}
        inv = {0: Fraction(1)}
        for m in range(1, span):
            acc = Fraction(0)
            for j, cj in tail.items():
                if 0 < j <= m:
                    prev = inv.get(m - j)
                    if prev is not None:
                        acc += cj * prev
            if acc:
                inv[m] = -acc
        return LaurentSeries({m - v: c / lead for m, c in inv.items()}, out_trunc)

    def deriv(self) -> "LaurentSeries":
        """Term-wise d/dz; truncation drops by one."""
        return LaurentSeries({e - 1: e * c for e, c in self.coeffs.items() if e != 0},
                             self.trunc - 1)

    def ramify(self, b: int) -> "LaurentSeries":
        """Substitute z -> zeta**b (exponents and truncation scaled by b)."""
        if b < 1:
            raise ValueError("cover degree must be >= 1")
        if b == 1:
            return self
        return LaurentSeries({e * b: c for e, c in self.coeffs.items()}, self.trunc * b)

    def unramify(self, b: int) -> "LaurentSeries":
        """Inverse of ramify; all exponents must be divisible by b."""
        if b == 1:
            return self
        if any(e % b for e in self.coeffs):
            raise SeriesError("series does not descend the cover")
        t = self.trunc if self.trunc == INF else -(-int(self.trunc) // b)
        return LaurentSeries({e // b: c for e, c in self.coeffs.items()}, t)

    # -- text form ------------------------------------------------------

    def to_pairs(self):
        """Exponent-ascending list of (exponent, rational-string) pairs."""
        return [[e, frac_str(self.coeffs[e])] for e in self.support()]

    @staticmethod
    def from_pairs(pairs, trunc: Trunc = INF) -> "LaurentSeries":
        return LaurentSeries({int(e): frac(c) for e, c in pairs}, trunc)
