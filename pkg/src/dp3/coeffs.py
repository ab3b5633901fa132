"""The coefficient polynomials c_m(c1) of the vanishing solution and checks on them.

The expansion is y(x) = -(x/2)(1 + sum_{m>=1} c_m x^m) with c_0 = 1 and c_1 a
free parameter.  Substituting it into the ODE gives, for m >= 2,

    (m^2 - 1) c_m = sum_{p=0}^{m-2} (p+2)(m-2(p+1)) c_{p+1} c_{m-p-1}
                    + 4 sum_{p=0}^{m-2} c_{m-p-2} d_p,      d_p = sum_{q=0}^{p} c_q c_{p-q}.

The engine keeps every c_m as an integer vector over one denominator (see
:class:`~dp3.cache.CoeffForm`).  One step gathers all its products over a
single common denominator, multiplies the integer vectors by Kronecker
substitution (pack each vector into one big integer, multiply once, unpack),
and reduces by a single gcd at the end.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import gmpy2
from gmpy2 import mpz

from .cache import CacheCorruptionError, CoeffCache, CoeffForm, structure
from .exact import RationalPoly

ProgressHook = Callable[[int, float, CoeffForm], None]


# ---------------------------------------------------------------------------
# Kronecker-packed integer convolution


def _pack(vec: Sequence, width: int) -> mpz:
    r = mpz(0)
    for x in reversed(vec):
        r = (r << width) + x
    return r


def _unpack(packed: mpz, width: int, n: int) -> list:
    out = []
    half = mpz(1) << (width - 1)
    full = mpz(1) << width
    for _ in range(n):
        x = gmpy2.f_mod_2exp(packed, width)
        if x >= half:
            x -= full
        out.append(x)
        packed = (packed - x) >> width
    if packed != 0:
        raise ArithmeticError("slot overflow while unpacking a Kronecker product")
    return out


def _combine(terms, parity: int) -> tuple[list, mpz]:
    """Sum of w * a * b over ``terms`` as (integer vector in t = c1^2, denominator).

    Every (w, a, b) is a weight and two CoeffForms; the result carries the
    factor c1^parity, so a product with shift a.shift + b.shift = parity + 2e
    lands e slots higher.
    """
    if not terms:
        return [], mpz(1)
    den = mpz(1)
    for _, a, b in terms:
        den = gmpy2.lcm(den, a.den * b.den)
    specs = []
    length = 0
    need = 0
    for w, a, b in terms:
        scale = w * (den // (a.den * b.den))
        extra = (a.shift + b.shift - parity) // 2
        length = max(length, len(a.nums) + len(b.nums) - 1 + extra)
        bound = (int(gmpy2.bit_length(scale)) + a.bits + b.bits
                 + min(len(a.nums), len(b.nums)).bit_length())
        need = max(need, bound)
        specs.append((scale, a, b, extra))
    width = need + len(terms).bit_length() + 2  # sum of terms plus a sign bit
    width = -(-width // 64) * 64
    packed = {}
    total = mpz(0)
    for scale, a, b, extra in specs:
        pa = packed.get(id(a))
        if pa is None:
            pa = packed[id(a)] = _pack(a.nums, width)
        pb = packed.get(id(b))
        if pb is None:
            pb = packed[id(b)] = _pack(b.nums, width)
        total += (scale * (pa * pb)) << (width * extra)
    return _unpack(total, width, length), den


class RecurrenceEngine:
    """Step the recurrence on a :class:`CoeffCache`, one index at a time.

    The convolution sums d_p are kept in ``cache.conv``; each new index costs
    O(m) packed products.  ``threads`` is accepted as a hint only: one step is
    a handful of very large gmpy2 multiplications, which do not parallelise
    usefully from Python.
    """

    def __init__(self, cache: CoeffCache, threads: int | None = None):
        self.cache = cache
        self.threads = threads
        if not cache.conv:
            cache.conv.append(CoeffForm(0, [1], 1))

    def _conv(self, p: int) -> CoeffForm:
        conv = self.cache.conv
        c = self.cache.forms
        while len(conv) <= p:
            q = len(conv)
            terms = [(2, c[q1], c[q - q1]) for q1 in range((q + 1) // 2)]
            if q % 2 == 0:
                terms.append((1, c[q // 2], c[q // 2]))
            nums, den = _combine(terms, q % 2)
            conv.append(CoeffForm.reduced(q % 2, nums, den))
        return conv[p]

    def rhs(self, m: int) -> CoeffForm:
        """c_m computed from c_0 .. c_{m-1} (those must already be stored)."""
        if m < 2:
            raise ValueError("the recurrence starts at m = 2")
        c = self.cache.forms
        if len(c) < m:
            raise ValueError(f"c_{m - 1} is needed before c_{m}")
        self._conv(m - 2)
        conv = self.cache.conv
        # first sum in its symmetric form: pairs (p+1, m-p-1) fold together
        terms = [(-(m - 2 * p - 2) ** 2, c[p + 1], c[m - p - 1])
                 for p in range((m - 2) // 2 + 1) if m - 2 * p - 2 != 0]
        terms += [(4, c[m - p - 2], conv[p]) for p in range(m - 1)]
        nums, den = _combine(terms, m % 2)
        return CoeffForm.reduced(m % 2, nums, den * (m * m - 1))

    def extend(self, upto: int, progress: ProgressHook | None = None) -> None:
        for m in range(self.cache.max_m + 1, upto + 1):
            t0 = time.perf_counter()
            form = self.rhs(m)
            self.cache.append(form)
            if progress is not None:
                progress(m, time.perf_counter() - t0, form)

    def validate(self, m: int) -> None:
        if self.rhs(m) != self.cache.forms[m]:
            raise CacheCorruptionError(m)


def revalidate(cache: CoeffCache, upto: int | None = None, start: int = 2) -> None:
    """Recompute c_start..c_upto from their predecessors; raise on the first mismatch."""
    upto = cache.max_m if upto is None else upto
    engine = RecurrenceEngine(cache)
    for m in range(max(start, 2), upto + 1):
        engine.validate(m)


def compute_cm(M: int, cache: CoeffCache | None = None, validate: str = "tail",
               progress: ProgressHook | None = None, threads: int | None = None) -> CoeffCache:
    """Extend ``cache`` (or a fresh one) so that it holds c_0 .. c_M.

    Entries already in the cache are checked before new ones are appended:
    ``validate="full"`` recomputes every stored c_m, ``"tail"`` only the last
    one, and ``"none"`` skips the check.  A mismatch raises
    :class:`CacheCorruptionError` naming the index.
    """
    if M < 2:
        raise ValueError("max index must be at least 2")
    if validate not in ("full", "tail", "none"):
        raise ValueError(f"unknown validation mode {validate!r}")
    cache = CoeffCache() if cache is None else cache
    engine = RecurrenceEngine(cache, threads=threads)
    stored = cache.max_m
    if validate == "full":
        for m in range(2, stored + 1):
            engine.validate(m)
    elif validate == "tail" and stored >= 2:
        engine.validate(stored)
    engine.extend(M, progress)
    return cache


# ---------------------------------------------------------------------------
# reference recurrence on RationalPoly (slow, independent of the engine)


def first_sum_direct(m: int, c: Sequence[RationalPoly]) -> RationalPoly:
    """sum_{p=0}^{m-2} (p+2)(m-2(p+1)) c_{p+1} c_{m-p-1}, term by term."""
    acc = RationalPoly()
    for p in range(m - 1):
        w = (p + 2) * (m - 2 * (p + 1))
        if w:
            acc = acc + c[p + 1] * c[m - p - 1] * w
    return acc


def first_sum_converted(m: int, c: Sequence[RationalPoly]) -> RationalPoly:
    """The same sum with symmetric pairs folded: -sum (m-2p-2)^2 c_{p+1} c_{m-p-1}."""
    acc = RationalPoly()
    for p in range((m - 2) // 2 + 1):
        acc = acc - c[p + 1] * c[m - p - 1] * (m - 2 * p - 2) ** 2
    return acc


def cubic_sum_direct(m: int, c: Sequence[RationalPoly]) -> RationalPoly:
    acc = RationalPoly()
    for p in range(m - 1):
        inner = RationalPoly()
        for q in range(p + 1):
            inner = inner + c[q] * c[p - q]
        acc = acc + c[m - p - 2] * inner
    return acc


def reference_coefficients(M: int) -> list[RationalPoly]:
    """c_0 .. c_M from the recurrence exactly as written, with Fraction arithmetic."""
    c = [RationalPoly([1]), RationalPoly.variable()]
    for m in range(2, M + 1):
        rhs = first_sum_direct(m, c) + cubic_sum_direct(m, c) * 4
        c.append(rhs * Fraction(1, m * m - 1))
    return c[: M + 1]


def recurrence_residual(m: int, c: Sequence[RationalPoly]) -> RationalPoly:
    """(m^2-1) c_m minus the right-hand side; the zero polynomial when c is correct."""
    return c[m] * (m * m - 1) - first_sum_direct(m, c) - cubic_sum_direct(m, c) * 4


def numeric_coefficients(c1: complex, M: int, cubic: complex = 4, bits: int = 256) -> list[complex]:
    """Coefficients of the recurrence evaluated at a fixed complex c1.

    ``cubic`` is the weight of the triple sum (4 for c_m, the constant C for
    the coefficients of u in the original variables).  The sums cancel
    heavily once |c1| is of order one, so they run in ``bits``-bit complex
    arithmetic and only the results are rounded to double.
    """
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        one = gmpy2.mpc(1)
        w = gmpy2.mpc(complex(cubic))
        c = [one, gmpy2.mpc(complex(c1))]
        d = [one]
        for m in range(2, M + 1):
            p = m - 2
            if p >= len(d):
                d.append(sum((c[q] * c[p - q] for q in range(p + 1)), gmpy2.mpc(0)))
            s1 = sum(((k + 2) * (m - 2 * (k + 1)) * c[k + 1] * c[m - k - 1] for k in range(m - 1)),
                     gmpy2.mpc(0))
            s2 = sum((c[m - k - 2] * d[k] for k in range(m - 1)), gmpy2.mpc(0))
            c.append((s1 + w * s2) / (m * m - 1))
        return [complex(x) for x in c[: M + 1]]


# ---------------------------------------------------------------------------
# structured coefficients and the propositions


@dataclass
class CoeffTable:
    """p_{m,n} for n = 0..r_m; p_{m,n} multiplies c1^(m//3 + delta - 2n)."""

    m: int
    delta: int
    r: int
    entries: list = field(default_factory=list)

    @property
    def top(self) -> int:
        return self.m // 3 + self.delta

    def power(self, n: int) -> int:
        return self.top - 2 * n

    def __getitem__(self, n: int) -> Fraction:
        return self.entries[n][1]

    def to_poly(self) -> RationalPoly:
        coeffs = [Fraction(0)] * (self.top + 1)
        for n, p in self.entries:
            coeffs[self.power(n)] = p
        return RationalPoly(coeffs)


def coeff_table(m: int, cache: CoeffCache) -> CoeffTable:
    if m > cache.max_m:
        raise KeyError(f"c_{m} not computed (cache holds m <= {cache.max_m})")
    delta, top, r = structure(m)
    form = cache.forms[m]
    entries = [(n, form.coefficient(top - 2 * n)) for n in range(r + 1)]
    return CoeffTable(m, delta, r, entries)


def _nonzero_powers(form: CoeffForm) -> list[int]:
    return [form.shift + 2 * j for j, x in enumerate(form.nums) if x]


def check_parity(m: int, cache: CoeffCache) -> bool:
    form = cache.forms[m]
    if form.shift != m % 2:
        return False
    return all(k % 2 == m % 2 for k in _nonzero_powers(form))


def expected_degree(m: int) -> int:
    return m // 3 + (1 if m % 3 == 1 else 0)


def check_degree(m: int, cache: CoeffCache) -> bool:
    powers = _nonzero_powers(cache.forms[m])
    return bool(powers) and max(powers) == expected_degree(m)


def check_positive(m: int, cache: CoeffCache) -> bool:
    """Every p_{m,n} is a positive rational (so none of them vanish)."""
    form = cache.forms[m]
    _, top, r = structure(m)
    if len(form.nums) != r + 1 or form.shift != top % 2:
        return False
    return all(x > 0 for x in form.nums)


# ---------------------------------------------------------------------------
# the majorant used in the convergence argument


def bound_Rm(m: int, alpha: float, C2: float) -> float:
    """Ratio that must stay <= 1 for the induction |c_m| < alpha C^m/(m+1)^2 to close."""
    if m < 2:
        raise ValueError("bound needs m >= 2 (it divides by m - 1)")
    if alpha < 1 or C2 <= 0:
        raise ValueError("need alpha >= 1 and C^2 > 0")
    z2 = math.pi ** 2 / 6
    z3 = math.pi ** 2 / 3
    tail = 4 * (z3 + 2) * (z3 + 1) * alpha / (C2 * (m + 1) ** 2)
    return (m + 1) / (m - 1) * alpha * (z2 - 1 + tail)


@dataclass
class EstimateReport:
    M: int
    c1: complex
    alpha: float
    C: float
    violations: list = field(default_factory=list)  # (m, |c_m|, bound)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_estimate(M: int, c1: complex, alpha: float, C: float, cache: CoeffCache) -> EstimateReport:
    """Report every m <= M with |c_m(c1)| >= alpha C^m / (m+1)^2.

    For m = 0 and m = 1 equality is allowed, since the admissible C and alpha
    only give |c_0| <= alpha and |c_1| <= alpha C / 4 there.
    """
    need = max(math.sqrt(12 / alpha), 4 * abs(c1) / alpha)
    if C < need * (1 - 1e-15):
        raise ValueError(f"C = {C} is below the admissible minimum {need}")
    if M > cache.max_m:
        raise KeyError(f"c_{M} not computed (cache holds m <= {cache.max_m})")
    report = EstimateReport(M, complex(c1), alpha, C)
    x = complex(c1)
    for m in range(M + 1):
        value = abs(cache.poly(m)(x))
        bound = alpha * C ** m / (m + 1) ** 2
        # m < 2 may hold with equality; allow for the rounding of C itself
        bad = value > bound * (1 + 1e-14) if m < 2 else value >= bound
        if bad:
            report.violations.append((m, value, bound))
    return report
