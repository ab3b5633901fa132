"""Truncated (Laurent) power series with explicit precision.

A series stores the coefficients of z^val .. z^(prec-1) and represents
``sum c_k z^k + O(z^prec)``.  ``prec`` is absolute and is never inferred:
every operation derives the precision of its result from the precisions and
valuations of its operands, so a dropped order shows up as a smaller ``prec``
instead of silently wrong coefficients.

:class:`RationalSeries` holds exact ``Fraction`` coefficients,
:class:`ComplexSeries` double precision complex ones.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class SeriesDivisionError(ZeroDivisionError):
    pass


class _Series:
    __slots__ = ("val", "prec", "_c")

    @staticmethod
    def _coerce(x):
        raise NotImplementedError

    def __init__(self, coeffs: Iterable = (), prec: int | None = None, val: int = 0):
        c = [self._coerce(x) for x in coeffs]
        if prec is None:
            prec = val + len(c)
        if val + len(c) > prec:
            c = c[: max(prec - val, 0)]
        # strip leading zeros so that val is the true valuation
        i = 0
        while i < len(c) and c[i] == 0:
            i += 1
        val += i
        c = c[i:]
        # pad up to the precision
        if val < prec:
            c = c + [self._coerce(0)] * (prec - val - len(c))
        else:
            val, c = prec, []
        self.val = val
        self.prec = prec
        self._c = c

    # constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, a, prec: int):
        return cls([a], prec=prec)

    @classmethod
    def z(cls, prec: int, power: int = 1):
        return cls([1], prec=prec, val=power)

    @classmethod
    def from_poly(cls, coeffs: Sequence, prec: int):
        """Series of an exact polynomial sum coeffs[k] z^k, truncated at prec."""
        return cls(list(coeffs)[:prec], prec=prec)

    # access ---------------------------------------------------------------

    def __getitem__(self, k: int):
        if k >= self.prec:
            raise IndexError(f"coefficient z^{k} is beyond the precision O(z^{self.prec})")
        if k < self.val:
            return self._coerce(0)
        return self._c[k - self.val]

    def coefficients(self, start: int = 0, stop: int | None = None) -> list:
        stop = self.prec if stop is None else stop
        return [self[k] for k in range(start, stop)]

    def is_zero(self) -> bool:
        """True when every known coefficient vanishes."""
        return not any(x != 0 for x in self._c)

    def nonzero_terms(self) -> list[tuple[int, object]]:
        return [(self.val + i, x) for i, x in enumerate(self._c) if x != 0]

    def __repr__(self):
        shown = ", ".join(f"{k}: {x}" for k, x in self.nonzero_terms()[:6])
        return f"{type(self).__name__}({{{shown}}}, prec={self.prec})"

    def __eq__(self, other):
        if type(other) is type(self):
            return self.prec == other.prec and self.val == other.val and self._c == other._c
        return NotImplemented

    __hash__ = None

    # helpers --------------------------------------------------------------

    def _new(self, coeffs, prec, val=0):
        return type(self)(coeffs, prec=prec, val=val)

    def _check(self, other):
        if type(other) is not type(self):
            raise TypeError("cannot mix rational and complex series")
        return other

    def _add_scalar(self, s):
        # a scalar is an exact constant: only the z^0 coefficient changes
        s = self._coerce(s)
        if self.prec <= 0 or s == 0:
            return self
        lo = min(self.val, 0)
        out = [self._coerce(0)] * (self.prec - lo)
        for i, x in enumerate(self._c):
            out[self.val + i - lo] = x
        out[-lo] += s
        return self._new(out, self.prec, lo)

    def truncate(self, prec: int):
        prec = min(prec, self.prec)
        return self._new(self._c[: max(prec - self.val, 0)], prec=prec, val=self.val)

    # arithmetic -----------------------------------------------------------

    def __neg__(self):
        return self._new([-x for x in self._c], self.prec, self.val)

    def __add__(self, other):
        if not isinstance(other, _Series):
            return self._add_scalar(other)
        self._check(other)
        prec = min(self.prec, other.prec)
        lo = min(self.val, other.val)
        out = [self._coerce(0)] * max(prec - lo, 0)
        for s in (self, other):
            for i, x in enumerate(s._c):
                k = s.val + i
                if k < prec:
                    out[k - lo] += x
        return self._new(out, prec, lo)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, _Series):
            s = self._coerce(other)
            return self._new([x * s for x in self._c], self.prec, self.val)
        self._check(other)
        prec = min(self.prec + other.val, other.prec + self.val)
        val = self.val + other.val
        n = prec - val
        if n <= 0:
            return self._new([], prec, prec)
        return self._new(self._convolve(self._c[:n], other._c[:n], n), prec, val)

    def __rmul__(self, other):
        return self * other

    def _convolve(self, a, b, n):
        out = [self._coerce(0)] * n
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j in range(min(len(b), n - i)):
                out[i + j] += x * b[j]
        return out

    def inverse(self):
        """1/self; a nonzero valuation v is carried as a z^-v shift."""
        if self.is_zero():
            raise SeriesDivisionError("division by a series that vanishes to its precision")
        v = self.val
        u = self._c  # unit part, relative precision len(u)
        n = len(u)
        inv = [self._coerce(0)] * n
        inv[0] = self._coerce(1) / u[0]
        for k in range(1, n):
            acc = self._coerce(0)
            for j in range(1, k + 1):
                acc += u[j] * inv[k - j]
            inv[k] = -acc * inv[0]
        return self._new(inv, prec=n - v, val=-v)

    def __truediv__(self, other):
        if isinstance(other, _Series):
            return self * other.inverse()
        s = self._coerce(other)
        if s == 0:
            raise SeriesDivisionError("division by zero scalar")
        return self._new([x / s for x in self._c], self.prec, self.val)

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return self._new([1], prec=max(self.prec - self.val, 0))
        out = None
        base = self
        while k:
            if k & 1:
                out = base if out is None else out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def derivative(self):
        out = [(self.val + i) * x for i, x in enumerate(self._c)]
        # the z^0 coefficient disappears; everything shifts down one power
        return self._new(out, self.prec - 1, self.val - 1)

    def shift(self, k: int):
        """Multiply by z^k (k may be negative)."""
        return self._new(list(self._c), self.prec + k, self.val + k)


class RationalSeries(_Series):
    """Truncated Laurent series with exact rational coefficients."""

    __slots__ = ()

    @staticmethod
    def _coerce(x):
        if isinstance(x, Fraction):
            return x
        if isinstance(x, float):
            raise TypeError("RationalSeries coefficients must be exact")
        return Fraction(x)


class ComplexSeries(_Series):
    """Truncated power series with double precision complex coefficients."""

    __slots__ = ()

    @staticmethod
    def _coerce(x):
        return complex(x)

    def __call__(self, x: complex) -> complex:
        acc = 0j
        for c in reversed(self._c):
            acc = acc * x + c
        return acc * x**self.val if self.val else acc

    def to_array(self, start: int = 0) -> np.ndarray:
        return np.array(self.coefficients(start), dtype=complex)

    def max_abs(self, start: int | None = None, stop: int | None = None) -> float:
        start = self.val if start is None else start
        vals = [abs(x) for x in self.coefficients(start, stop)]
        return max(vals, default=0.0)

    def drop_below(self, k: int, tol: float):
        """Divide out z^k after checking the dropped coefficients are below tol.

        Floating point cancellation can leave tiny nonzero coefficients where
        exact arithmetic would give zero; this makes the valuation explicit.
        """
        for j in range(self.val, k):
            if abs(self[j]) > tol:
                raise SeriesDivisionError(f"coefficient of z^{j} is {self[j]!r}, not negligible")
        kept = self._c[max(k - self.val, 0):]
        return ComplexSeries(kept, prec=self.prec - k, val=max(self.val, k) - k)
