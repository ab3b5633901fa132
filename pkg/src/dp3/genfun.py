"""Generating functions for the columns p_{m,n} of the coefficient tables.

With c1 large, the rescaled solution w(z) = sum_k A_k(z) c1^(-2k/3) has rational
A_k, and A_{3n}, A_{3n+1}, A_{3n+2} generate column n of the tables for
m = 1, 0, 2 (mod 3) respectively.  Every A_k is stored as a finite sum of
terms  coef * z^j / (1 - 2 z^3/9)^e.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

from .cache import CoeffCache, structure
from .series import RationalSeries

TWO_NINTHS = Fraction(2, 9)


class RationalFunctionExpr:
    """sum coef * z^j / (1 - 2z^3/9)^e, keyed by (j, e); e = 0 is the polynomial part."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[tuple[int, int], Fraction] = {}
        for (j, e), c in dict(terms or {}).items():
            self._add(j, e, Fraction(c))

    def _add(self, j: int, e: int, c: Fraction) -> None:
        if j < 0 or e < 0:
            raise ValueError("powers must be nonnegative")
        v = self.terms.get((j, e), 0) + c
        if v:
            self.terms[(j, e)] = v
        else:
            self.terms.pop((j, e), None)

    @classmethod
    def from_quotient(cls, num_s: Sequence, scale, zpow: int, e: int) -> "RationalFunctionExpr":
        """scale * z^zpow * N(z^3) / (1 - 2z^3/9)^e, N given by ascending coefficients."""
        out = cls()
        for i, a in enumerate(num_s):
            out._add(zpow + 3 * i, e, Fraction(scale) * Fraction(a))
        return out.canonical()

    def __add__(self, other: "RationalFunctionExpr") -> "RationalFunctionExpr":
        out = RationalFunctionExpr(self.terms)
        for (j, e), c in other.terms.items():
            out._add(j, e, c)
        return out

    def __eq__(self, other):
        if not isinstance(other, RationalFunctionExpr):
            return NotImplemented
        return self.canonical().terms == other.canonical().terms

    def canonical(self) -> "RationalFunctionExpr":
        """Rewrite so that every term with e >= 1 has j < 3.

        Uses z^3 = (9/2)(1 - u) with u = 1 - 2z^3/9, so that
        z^j/u^e = (9/2) z^(j-3) (1/u^e - 1/u^(e-1)).
        """
        work = dict(self.terms)
        out = RationalFunctionExpr()
        while work:
            (j, e), c = work.popitem()
            if e == 0 or j < 3:
                out._add(j, e, c)
                continue
            for key, w in (((j - 3, e), Fraction(9, 2) * c), ((j - 3, e - 1), -Fraction(9, 2) * c)):
                v = work.get(key, 0) + w
                if v:
                    work[key] = v
                else:
                    work.pop(key, None)
        return out

    def polynomial_part(self) -> dict[int, Fraction]:
        return {j: c for (j, e), c in self.canonical().terms.items() if e == 0}

    def series(self, order: int) -> RationalSeries:
        """Taylor coefficients of z^0 .. z^(order-1), exact."""
        coeffs = [Fraction(0)] * max(order, 0)
        for (j, e), c in self.terms.items():
            # 1/(1-x)^e = sum_k C(k+e-1, e-1) x^k with x = 2z^3/9
            k = 0
            while j + 3 * k < order:
                binom = 1 if e == 0 and k == 0 else (0 if e == 0 else comb(k + e - 1, e - 1))
                if binom:
                    coeffs[j + 3 * k] += c * binom * TWO_NINTHS ** k
                k += 1
                if e == 0:
                    break
        return RationalSeries(coeffs, prec=order)

    def __call__(self, z):
        u = 1 - 2 * z ** 3 / 9
        return sum(float(c) * z ** j / u ** e if not isinstance(z, Fraction) else c * z ** j / u ** e
                   for (j, e), c in self.terms.items())

    def __repr__(self):
        parts = []
        for (j, e), c in sorted(self.canonical().terms.items(), key=lambda t: (t[0][1], t[0][0])):
            parts.append(f"({c})*z^{j}" + (f"/u^{e}" if e else ""))
        return "RationalFunctionExpr(" + " + ".join(parts) + ")"


def _F(s: str) -> Fraction:
    return Fraction(s)


def _closed_forms() -> list[RationalFunctionExpr]:
    R = RationalFunctionExpr
    a0 = R({(1, 2): 1})
    # (2s+45)(4s^2-252s-405) / (25 (2s-9)^3),  (2s-9)^3 = -729 u^3
    a1 = R.from_quotient([-18225, -12150, -324, 8], Fraction(-1, 25 * 729), 0, 3)
    # -162 z^2 (340s^3 - 14112s^2 - 436509s - 1638792) / (30625 (2s-9)^4),  (2s-9)^4 = 6561 u^4
    a2 = R({(5, 0): Fraction(-8, 16875), (2, 0): Fraction(1108, 91875)}) + R.from_quotient(
        [-1638792, -436509, -14112, 340], Fraction(-162, 30625 * 6561), 2, 4)
    a3 = R({
        (7, 0): _F("-32/2953125"), (4, 0): _F("-8752/4134375"), (1, 0): _F("68258/2296875"),
        (1, 2): _F("116878/459375"), (1, 3): _F("8086604/2296875"),
        (1, 4): _F("-9771516/765625"), (1, 5): _F("139968/15625"),
    })
    a4 = R({
        (12, 0): _F("256/13953515625"), (9, 0): _F("-78928/45581484375"),
        (6, 0): _F("-17694848/1838453203125"), (3, 0): _F("-330698309/81709031250"),
        (0, 0): _F("61927956/3242421875"),
        (0, 1): _F("48238574611/453939062500"), (0, 2): _F("-1400615705869/453939062500"),
        (0, 3): _F("1407265401/2316015625"), (0, 4): _F("59441369643/1875781250"),
        (0, 5): _F("-1024460784/19140625"), (0, 6): _F("1889568/78125"),
    })
    a5 = R({
        (14, 0): _F("131072/197791083984375"), (11, 0): _F("90116032/564070869140625"),
        (8, 0): _F("-324630499328/23302394349609375"), (5, 0): _F("4366976622/9785166015625"),
        (2, 0): _F("-385406999424/68496162109375"),
        (2, 1): _F("4531503785253/479473134765625"), (2, 2): _F("59545228803909/479473134765625"),
        (2, 3): _F("-37276082380518/13699232421875"), (2, 4): _F("14383449268992/2837119140625"),
        (2, 5): _F("268395996744/23447265625"), (2, 6): _F("-13329012672/478515625"),
        (2, 7): _F("136048896/9765625"),
    })
    return [a0, a1, a2, a3, a4, a5]


_CLOSED = _closed_forms()


def A_closed(n: int) -> RationalFunctionExpr:
    if not 0 <= n < len(_CLOSED):
        raise ValueError("closed form not transcribed")
    return RationalFunctionExpr(_CLOSED[n].terms)


def A_series(n: int, order: int) -> RationalSeries:
    if order < 1:
        raise ValueError("order must be at least 1")
    return A_closed(n).series(order)


def homogeneous_solution(order: int) -> RationalSeries:
    """Series of z(2z^3+9)/(2z^3-9)^3, the single-valued kernel of the linear hierarchy."""
    return RationalFunctionExpr.from_quotient([9, 2], Fraction(-1, 729), 1, 3).series(order)


# ---------------------------------------------------------------------------
# closed forms for the first two columns


def p_m0_closed(m: int) -> Fraction:
    """Leading coefficient p_{m,0} in closed form."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    k, rem = divmod(m, 3)
    if rem == 1:
        return (k + 1) * TWO_NINTHS ** k
    if rem == 0:
        if k == 0:
            return Fraction(1)
        return Fraction(6, 25) * (3 * k + 2) ** 2 * TWO_NINTHS ** k
    if k == 0:
        return Fraction(4, 3)
    if k == 1:
        return Fraction(206, 135)
    return Fraction(9, 30625) * (196 * k + 281) * (3 * k + 4) ** 2 * TWO_NINTHS ** k


_P1_SPECIAL = {
    4: Fraction(16, 15), 7: Fraction(1336, 945),
    6: Fraction(256, 315), 9: Fraction(253774, 212625), 12: Fraction(4788251008, 4862521125),
    8: Fraction(4864, 8505), 11: Fraction(3958936, 4209975),
    14: Fraction(44744664088576, 51771262417875),
}


def p_m1_closed(m: int) -> Fraction:
    """Second coefficient p_{m,1}; small indices use the tabulated exceptional values."""
    if m in _P1_SPECIAL:
        return _P1_SPECIAL[m]
    k, rem = divmod(m, 3)
    g = TWO_NINTHS ** k
    if rem == 1 and k >= 3:
        poly = 2916 * k * k + _F("328779/49") * k - _F("34129/147")
        return Fraction(2, 5 ** 6) * poly * (k + 1) ** 2 * g
    if rem == 0 and k >= 5:
        poly = _F("8748/5") * k ** 3 + _F("223074/49") * k ** 2 - _F("281982223/48020") * k - _F("15481989/41503")
        return Fraction(1, 5 ** 7) * poly * (3 * k + 2) ** 2 * g
    if rem == 2 and k >= 5:
        poly = (_F("34992/5") * k ** 4 + _F("10865016/245") * k ** 3 + _F("86107493/12005") * k ** 2
                - _F("86860273454/1452605") * k + _F("8029312488/7014007"))
        return Fraction(3, 5 ** 10) * poly * (3 * k + 4) ** 2 * g
    raise ValueError(f"no closed form for p_{{{m},1}}: index below the formula's range")


def generating_index(m: int, column: int) -> int:
    """Which A_k carries p_{m,column} as its z^m coefficient."""
    return 3 * column + {1: 0, 0: 1, 2: 2}[m % 3]


# ---------------------------------------------------------------------------
# hierarchy of linear equations satisfied by the A_k


def _hierarchy_sides(n: int, A: Sequence[RationalSeries]):
    z = RationalSeries.z(A[0].prec + 8)

    def D(s):
        return s.derivative()

    def zd(s, c=1):  # (c z s')'
        return D(z * D(s) * c)

    A0 = A[0]
    if n == 0:
        return D(z * D(A0) / A0), z * A0 * 4
    lhs = D(z * D(A[n] / A0)) - z * A[n] * 4
    if n == 1:
        return lhs, 1 / (z * A0)
    A1, A2 = A[1], A[2]
    if n == 2:
        return lhs, zd(A1 * A1 / (A0 * A0), Fraction(1, 2)) - (A1 + 1) / (z * A0 * A0)
    if n == 3:
        rhs = (zd(A1 * A2 / A0 ** 2) - zd(A1 ** 3 / A0 ** 3, Fraction(1, 3))
               + (-A2 + (A1 * A1 + A1 * 2) / A0) / (z * A0 ** 2))
        return lhs, rhs
    if n == 4:
        A3 = A[3]
        rhs = (zd(A1 * A3 / A0 ** 2) + zd(A2 * A2 / A0 ** 2, Fraction(1, 2))
               + zd(A1 ** 4 / A0 ** 4, Fraction(1, 4)) - zd(A1 * A1 * A2 / A0 ** 3)
               + (-A3 + A2 * (A1 + 1) * 2 / A0 - (A1 ** 3 + A1 * A1 * 3) / A0 ** 2) / (z * A0 ** 2))
        return lhs, rhs
    raise ValueError("explicit right-hand side only transcribed for n <= 4")


HIERARCHY_MARGIN = 12


def verify_genfun_ode(n: int, order: int) -> RationalSeries | None:
    """Left minus right side of the n-th hierarchy equation as a truncated series.

    The result is known through at least z^(order-1); it should be identically
    zero.  For n = 5 no explicit right-hand side is available and None is
    returned (see :func:`verify_sgf_equation` for a check that covers A_5).
    """
    if order < 6:
        raise ValueError("order must be at least 6")
    if n == 5:
        return None
    prec = order + HIERARCHY_MARGIN
    A = [A_series(k, prec) for k in range(n + 1)]
    lhs, rhs = _hierarchy_sides(n, A)
    res = lhs - rhs
    return res.truncate(order)


def _eps_mul(a, b, K):
    out = []
    for k in range(K + 1):
        acc = None
        for i in range(k + 1):
            if a[i] is None or b[k - i] is None:
                continue
            t = a[i] * b[k - i]
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


def _eps_inv(a, K):
    v0 = a[0].inverse()
    out = [v0]
    for k in range(1, K + 1):
        acc = None
        for i in range(1, k + 1):
            t = a[i] * out[k - i]
            acc = t if acc is None else acc + t
        out.append(-(acc * v0))
    return out


def verify_sgf_equation(order: int, K: int = 5) -> list[RationalSeries]:
    """Residuals of (z w'/w)' - 4zw - e/(zw) + e^2/(zw^2) for w = sum_{k<=K} A_k e^k.

    Returns one truncated series per power e^0 .. e^K; all should vanish.
    This checks the full nonlinear equation for the rescaled solution, so it
    exercises A_5 without needing the general forcing terms.
    """
    prec = order + HIERARCHY_MARGIN
    w = [A_series(k, prec) for k in range(K + 1)]
    z = RationalSeries.z(prec + 8)
    inv = _eps_inv(w, K)
    dw = [s.derivative() for s in w]
    logd = [None if s is None else (z * s).derivative() for s in _eps_mul(dw, inv, K)]
    inv2 = _eps_mul(inv, inv, K)
    out = []
    for k in range(K + 1):
        r = logd[k] - z * w[k] * 4
        if k >= 1:
            r = r - inv[k - 1] / z
        if k >= 2:
            r = r + inv2[k - 2] / z
        out.append(r.truncate(order))
    return out


# ---------------------------------------------------------------------------
# comparison with the recurrence


@dataclass
class ColumnReport:
    column: int
    order: int
    checked: list = field(default_factory=list)  # m values compared
    mismatches: list = field(default_factory=list)  # (m, from recurrence, from series)
    rows: list = field(default_factory=list)  # (m, recurrence, closed, match)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", f"p_m{self.column}_recurrence", f"p_m{self.column}_closed", "match"])
        for m, rec, closed, ok in self.rows:
            w.writerow([m, str(rec), str(closed), int(ok)])
        return buf.getvalue()


def column_value(m: int, column: int, cache: CoeffCache) -> Fraction:
    _, top, r = structure(m)
    if column > r:
        return Fraction(0)
    return cache.forms[m].coefficient(top - 2 * column)


def check_column(j: int, cache: CoeffCache, order: int) -> ColumnReport:
    """Compare column j of the cached tables with the generating function series."""
    if j not in (0, 1):
        raise ValueError("only columns 0 and 1 have transcribed generating functions")
    upto = min(order - 1, cache.max_m)
    series = {k: A_series(k, upto + 1) for k in range(3 * j, 3 * j + 3)}
    report = ColumnReport(j, order)
    for m in range(0, upto + 1):
        rec = column_value(m, j, cache)
        closed = series[generating_index(m, j)][m]
        ok = rec == closed
        report.checked.append(m)
        report.rows.append((m, rec, closed, ok))
        if not ok:
            report.mismatches.append((m, rec, closed))
    return report
