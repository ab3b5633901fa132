"""Monodromy data of the vanishing solutions at formal monodromy a = +-i/2.

A point on the monodromy manifold is the tuple (a, s00, s0inf, s1inf, G) with
G = [[g11, g12], [g21, g22]].  For the solution family with parameter c1t the
data are pinned only through products of entries of G.  We fix the gauge
g12 = 1 (kappa = +1) or g21 = 1 (kappa = -1); every residual below is gauge
invariant.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

SQRT_PI = math.sqrt(math.pi)
E_PI4 = cmath.exp(1j * math.pi / 4)


@dataclass(frozen=True)
class MonodromyPoint:
    kappa: int
    eps_b: float
    s00: complex
    s0inf: complex
    s1inf: complex
    g11: complex
    g12: complex
    g21: complex
    g22: complex
    X: complex = 0j

    @property
    def a(self) -> complex:
        return self.kappa * 0.5j

    # product variables of the contracted manifold
    @property
    def gt1(self) -> complex:
        return 1j * self.g12 * self.g11

    @property
    def gt2(self) -> complex:
        return 1j * self.g21 * self.g22

    @property
    def gt3(self) -> complex:
        return self.g11 * self.g22

    @property
    def gt4(self) -> complex:
        return self.g12 * self.g21

    @property
    def st(self) -> complex:
        return 1 + 1j * self.s00

    @property
    def ft1(self) -> complex:
        return self.g12 ** 2

    @property
    def ft2(self) -> complex:
        return self.g21 ** 2

    def negated(self) -> "MonodromyPoint":
        """The same solution seen through the other branch of the square root: G -> -G."""
        return replace(self, g11=-self.g11, g12=-self.g12, g21=-self.g21, g22=-self.g22)

    def to_dict(self) -> dict:
        def c(z):
            return [z.real, z.imag]
        return {
            "kappa": self.kappa, "eps_b": self.eps_b, "X": c(self.X),
            "s00": c(self.s00), "s0inf": c(self.s0inf), "s1inf": c(self.s1inf),
            "g11": c(self.g11), "g12": c(self.g12), "g21": c(self.g21), "g22": c(self.g22),
            "gt": [c(self.gt1), c(self.gt2), c(self.gt3), c(self.gt4)],
        }


def x_parameter(c1t: complex, eps_b: float) -> complex:
    return SQRT_PI * complex(c1t) / (2 ** 1.5 * math.sqrt(eps_b))


def monodromy_point(c1t: complex, eps_b: float, kappa: int) -> MonodromyPoint:
    if eps_b <= 0:
        raise ValueError("eps*b must be positive")
    if kappa not in (1, -1):
        raise ValueError("kappa must be +1 or -1")
    X = x_parameter(c1t, eps_b)
    Y = X * (E_PI4 if kappa == 1 else E_PI4.conjugate())
    gt3 = (1 + Y) / 2
    gt4 = -(1 - Y) / 2
    if kappa == 1:
        # g12 = 1, g22 = -g12; then g11 g22 = gt3 and g12 g21 = gt4
        return MonodromyPoint(1, eps_b, 0j, Y, 0j, -gt3, 1 + 0j, gt4, -1 + 0j, X)
    # g21 = 1, g11 = -g21
    return MonodromyPoint(-1, eps_b, 0j, 0j, Y, -1 + 0j, gt4, 1 + 0j, -gt3, X)


def manifold_residuals(pt: MonodromyPoint) -> list[float]:
    """Absolute residuals of the five manifold equations and the two contracted ones."""
    em = cmath.exp(-math.pi * pt.a)  # e^{-pi a}
    ep = cmath.exp(math.pi * pt.a)
    e2 = cmath.exp(-2 * math.pi * pt.a)
    g11, g12, g21, g22 = pt.g11, pt.g12, pt.g21, pt.g22
    s00, s0, s1 = pt.s00, pt.s0inf, pt.s1inf
    r = [
        s0 * s1 - (-1 - e2 - 1j * s00 * em),
        g21 * g22 - g11 * g12 + s00 * g11 * g22 - 1j * em,
        g11 ** 2 - g21 ** 2 - s00 * g11 * g21 - 1j * s0 * em,
        g22 ** 2 - g12 ** 2 + s00 * g12 * g22 - 1j * s1 * ep,
        g11 * g22 - g12 * g21 - 1,
        pt.gt3 ** 2 + pt.gt1 ** 2 + (1 - pt.st) * pt.gt1 * pt.gt3 - pt.gt3 - pt.gt1 * em,
        pt.ft1 * pt.ft2 - (pt.gt3 - 1) ** 2,
    ]
    return [abs(x) for x in r]


def relation_residuals(pt: MonodromyPoint) -> dict[str, float]:
    """Relations the solution family must satisfy beyond the manifold equations."""
    Y = pt.X * (E_PI4 if pt.kappa == 1 else E_PI4.conjugate())
    out = {
        "gt3-gt4-1": abs(pt.gt3 - pt.gt4 - 1),
        "gt3*gt4+gt1*gt2": abs(pt.gt3 * pt.gt4 + pt.gt1 * pt.gt2),
        "ft1*ft2-gt4^2": abs(pt.ft1 * pt.ft2 - pt.gt4 ** 2),
        "s00": abs(pt.s00),
    }
    if pt.kappa == 1:
        out["s1inf"] = abs(pt.s1inf)
        out["g22+g12"] = abs(pt.g22 + pt.g12)
        out["s0inf*g12^2-Y"] = abs(pt.s0inf * pt.g12 ** 2 - Y)
        out["gt1"] = abs(pt.gt1 + 0.5j * (1 + Y))
    else:
        out["s0inf"] = abs(pt.s0inf)
        out["g11+g21"] = abs(pt.g11 + pt.g21)
        out["s1inf*g21^2-Y"] = abs(pt.s1inf * pt.g21 ** 2 - Y)
        out["gt1"] = abs(pt.gt1 - 0.5j * (1 - Y))
    return out


def backlund_map(pt: MonodromyPoint) -> MonodromyPoint:
    """Image of an a = i/2 point under the Backlund transformation to a = -i/2."""
    if pt.kappa != 1:
        raise ValueError("the Backlund action is stated for a = i/2 (kappa = +1) only")
    return MonodromyPoint(-1, pt.eps_b, -pt.s00, pt.s0inf, pt.s1inf,
                          1j * pt.g11, 1j * pt.g12, -1j * pt.g21, -1j * pt.g22, pt.X)


def nu_plus_one_raw(pt: MonodromyPoint) -> complex:
    """(i / 2 pi) Log(g11 g22) on the principal branch."""
    g = pt.gt3
    if g == 0:
        raise ValueError("g11 g22 = 0: truncated-solution boundary")
    return 1j / (2 * math.pi) * cmath.log(g)


def nu_plus_one(pt: MonodromyPoint) -> complex:
    """Principal value with the real part moved into [0, 1)."""
    v = nu_plus_one_raw(pt)
    re = v.real - math.floor(v.real)
    if re >= 1.0:  # floor rounding at the upper edge
        re -= 1.0
    return complex(re, v.imag)


# ---------------------------------------------------------------------------
# the two transcendental equations for the exponent at the origin

_PATCH = 1e-4


def _h(r: complex) -> tuple[complex, complex]:
    """sin(2 pi r)/(2r) and its derivative; removable at r = 0."""
    if abs(r) < _PATCH:
        p = math.pi
        val = p - (2 * p ** 3 / 3) * r ** 2 + (2 * p ** 5 / 15) * r ** 4
        der = -(4 * p ** 3 / 3) * r + (8 * p ** 5 / 15) * r ** 3
        return val, der
    s, c = cmath.sin(2 * math.pi * r), cmath.cos(2 * math.pi * r)
    return s / (2 * r), math.pi * c / r - s / (2 * r * r)


def _g(w: complex) -> tuple[complex, complex]:
    """w/sin(pi w) and its derivative; removable at w = 0 with value 1/pi."""
    p = math.pi
    if abs(w) < _PATCH:
        val = (1 + (p * w) ** 2 / 6 + 7 * (p * w) ** 4 / 360) / p
        der = (p * p * w / 3 + 7 * p ** 4 * w ** 3 / 90) / p
        return val, der
    s, c = cmath.sin(p * w), cmath.cos(p * w)
    return w / s, (s - p * w * c) / (s * s)


def varrho_equation(which: int, r: complex) -> tuple[complex, complex]:
    """Left minus right side of equation ``which`` and its derivative at r."""
    r = complex(r)
    h, dh = _h(r)
    if which == 1:
        g, dg = _g(r - 0.25)
        e = cmath.exp(-1j * math.pi * (r + 0.25))
        rhs, drhs = -4 * r * e, -4 * e + 4j * math.pi * r * e
    elif which == 2:
        g, dg = _g(r + 0.25)
        e = cmath.exp(1j * math.pi * (r - 0.25))
        rhs, drhs = 4 * r * e, 4 * e + 4j * math.pi * r * e
    else:
        raise ValueError("which must be 1 or 2")
    return h * g - rhs, dh * g + h * dg - drhs


@dataclass(frozen=True)
class RhoRoot:
    which: int
    value: complex
    residual: float

    @property
    def admissible(self) -> bool:
        return 0 < self.value.real < 0.5


DEFAULT_RECT = (-0.05, 1.3, -0.5, 0.5)


def newton(which: int, r0: complex, tol: float = 1e-15, maxiter: int = 60) -> complex | None:
    r = complex(r0)
    for _ in range(maxiter):
        f, df = varrho_equation(which, r)
        if df == 0 or not (cmath.isfinite(f) and cmath.isfinite(df)):
            return None
        step = f / df
        r -= step
        if abs(r) > 1e3:
            return None
        if abs(step) <= tol * max(1.0, abs(r)):
            return r
    f, _ = varrho_equation(which, r)
    return r if abs(f) < 1e-12 else None


def find_varrho_roots(which: int, rect=DEFAULT_RECT, grid: tuple[int, int] = (40, 40),
                      tol: float = 1e-12, dedup: float = 1e-9) -> list[RhoRoot]:
    """Roots of equation ``which`` in the rectangle, from a grid of Newton seeds.

    Seeds that diverge or converge outside the rectangle are dropped.
    """
    nx, ny = grid
    if nx < 20 or ny < 20:
        raise ValueError("seed grid must be at least 20 x 20")
    x0, x1, y0, y1 = rect
    roots: list[RhoRoot] = []
    for x in np.linspace(x0, x1, nx):
        for y in np.linspace(y0, y1, ny):
            r = newton(which, complex(x, y))
            if r is None or not (x0 <= r.real <= x1 and y0 <= r.imag <= y1):
                continue
            res = abs(varrho_equation(which, r)[0])
            if res >= tol:
                continue
            if any(abs(r - q.value) < dedup for q in roots):
                continue
            roots.append(RhoRoot(which, r, res))
    roots.sort(key=lambda q: (q.value.real, q.value.imag))
    return roots
