"""Exact rational arithmetic: 2-adic valuations and dense polynomials in c1.

Rationals are plain :class:`fractions.Fraction` values, which are always kept
in lowest terms with a positive denominator, so valuations can be read off the
stored numerator and denominator directly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence, Union

# Degree of the zero polynomial.
DEG_ZERO = -math.inf

Scalar = Union[int, Fraction]


def nu2(n: int) -> int:
    """2-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of zero undefined")
    n = abs(n)
    return (n & -n).bit_length() - 1


def val2(q: Scalar) -> int:
    """2-adic valuation of a nonzero rational: nu2(num) - nu2(den).

    >>> val2(Fraction(4, 3))
    2
    >>> val2(Fraction(3, 8))
    -3
    """
    q = Fraction(q)
    if q == 0:
        raise ValueError("valuation of zero undefined")
    return nu2(q.numerator) - nu2(q.denominator)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, _RationalABC)):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class RationalPoly:
    """Dense polynomial in c1 with rational coefficients, ascending powers.

    Instances are immutable and always trimmed, so two equal polynomials have
    identical coefficient tuples.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        c = [_as_fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self._c = tuple(c)

    @classmethod
    def _raw(cls, coeffs: tuple) -> "RationalPoly":
        obj = cls.__new__(cls)
        obj._c = coeffs
        return obj

    @classmethod
    def monomial(cls, k: int, coeff: Scalar = 1) -> "RationalPoly":
        return cls([0] * k + [coeff])

    @classmethod
    def variable(cls) -> "RationalPoly":
        return cls.monomial(1)

    @property
    def coeffs(self) -> tuple:
        return self._c

    @property
    def degree(self):
        return len(self._c) - 1 if self._c else DEG_ZERO

    def is_zero(self) -> bool:
        return not self._c

    def __getitem__(self, k: int) -> Fraction:
        if 0 <= k < len(self._c):
            return self._c[k]
        return Fraction(0)

    def __iter__(self):
        return iter(self._c)

    def __len__(self):
        return len(self._c)

    def __eq__(self, other):
        if isinstance(other, RationalPoly):
            return self._c == other._c
        if isinstance(other, (int, Fraction)):
            return self._c == RationalPoly([other])._c
        return NotImplemented

    def __hash__(self):
        return hash(self._c)

    def __repr__(self):
        if not self._c:
            return "RationalPoly(0)"
        terms = []
        for k, a in enumerate(self._c):
            if a:
                terms.append(f"{a}" if k == 0 else f"({a})*c1^{k}")
        return "RationalPoly(" + " + ".join(terms) + ")"

    def __neg__(self):
        return RationalPoly._raw(tuple(-a for a in self._c))

    def __add__(self, other):
        if not isinstance(other, RationalPoly):
            try:
                other = RationalPoly([_as_fraction(other)])
            except TypeError:
                return NotImplemented
        a, b = self._c, other._c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, x in enumerate(b):
            out[i] += x
        return RationalPoly(out)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, RationalPoly):
            try:
                other = RationalPoly([_as_fraction(other)])
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, RationalPoly):
            return poly_mul(self, other)
        try:
            s = _as_fraction(other)
        except TypeError:
            return NotImplemented
        if s == 0:
            return RationalPoly()
        return RationalPoly._raw(tuple(a * s for a in self._c))

    __rmul__ = __mul__

    def __call__(self, x):
        """Evaluate by Horner's rule; works for Fraction, int, float, complex."""
        acc = 0
        for a in reversed(self._c):
            acc = acc * x + (a if isinstance(x, (int, Fraction)) else _to_number(a, x))
        return acc

    def evaluate_abs(self, x) -> float:
        """Sum of |a_k| |x|^k, the natural scale for rounding errors in self(x)."""
        r = abs(x)
        return float(sum(abs(float(a)) * r**k for k, a in enumerate(self._c)))

    def integer_form(self) -> tuple[list[int], int]:
        """Return (numerators, D) with self == sum(numerators[k] c1^k) / D."""
        if not self._c:
            return [], 1
        den = reduce(math.lcm, (a.denominator for a in self._c), 1)
        return [a.numerator * (den // a.denominator) for a in self._c], den

    @classmethod
    def from_integer_form(cls, nums: Sequence[int], den: int) -> "RationalPoly":
        return cls(Fraction(n, den) for n in nums)


def _to_number(a: Fraction, like):
    if isinstance(like, complex):
        return complex(a)
    return float(a)


def _convolve(a: Sequence, b: Sequence) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] += x * y
    return out


def poly_mul(a: RationalPoly, b: RationalPoly, integer_path: bool = True) -> RationalPoly:
    """Exact product of two polynomials by schoolbook convolution.

    With ``integer_path`` the denominators are cleared first, the integer
    vectors are convolved, and the result is reduced once at the end, which
    avoids a gcd per partial product.
    """
    if a.is_zero() or b.is_zero():
        return RationalPoly()
    if not integer_path:
        return RationalPoly(_convolve(a.coeffs, b.coeffs))
    na, da = a.integer_form()
    nb, db = b.integer_form()
    return RationalPoly.from_integer_form(_convolve(na, nb), da * db)
