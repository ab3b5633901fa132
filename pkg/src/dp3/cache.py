"""Persistent, append-only store for the coefficient polynomials c_m(c1).

File layout (text, one record per line)::

    # dp3-coefficient-cache format=1; y(x) = -(x/2)(1 + sum_{m>=1} c_m x^m); c_0 = 1; c_1 free
    0 0 0 1/1
    1 1 0 1/1
    2 0 0 4/3
    ...
    m delta r_m p_{m,0} p_{m,1} ... p_{m,r_m}

where p_{m,n} is the coefficient of c1^(floor(m/3) + delta - 2n), written as
``numerator/denominator`` in lowest terms.  Records are flushed one at a time so
an interrupted run leaves a valid prefix behind.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import gmpy2
from gmpy2 import mpz

from .exact import RationalPoly

FORMAT_VERSION = 1
CONVENTION = "y(x) = -(x/2)(1 + sum_{m>=1} c_m x^m); c_0 = 1; c_1 free"
HEADER = f"# dp3-coefficient-cache format={FORMAT_VERSION}; {CONVENTION}"
CACHE_ENV = "DP3_CACHE_DIR"


class CacheError(Exception):
    """Operational problem with a cache file (missing, unreadable, wrong format)."""


class CacheCorruptionError(Exception):
    """A stored polynomial fails the recurrence; ``index`` names the first bad m."""

    def __init__(self, index: int, detail: str = ""):
        self.index = index
        msg = f"cache entry m={index} does not satisfy the recurrence"
        super().__init__(msg + (f": {detail}" if detail else ""))


def default_cache_path() -> Path:
    base = os.environ.get(CACHE_ENV)
    root = Path(base) if base else Path.home() / ".cache" / "dp3"
    return root / "coeffs.txt"


def structure(m: int) -> tuple[int, int, int]:
    """(delta, top power, r_m) of the coefficient table of c_m."""
    delta = 1 if m % 3 == 1 else 0
    top = m // 3 + delta
    return delta, top, top // 2


class CoeffForm:
    """c_m in integer form: c1^shift * sum_j nums[j] (c1^2)^j / den.

    Only powers of the parity of m ever occur, so storing polynomials in
    t = c1^2 halves every convolution.
    """

    __slots__ = ("shift", "nums", "den", "bits")

    def __init__(self, shift: int, nums, den):
        self.shift = shift
        self.nums = [mpz(x) for x in nums]
        self.den = mpz(den)
        self.bits = max((int(gmpy2.bit_length(x)) for x in self.nums), default=0)

    @classmethod
    def reduced(cls, shift: int, nums, den) -> "CoeffForm":
        nums = list(nums)
        while nums and nums[-1] == 0:
            nums.pop()
        g = mpz(den)
        for x in nums:
            g = gmpy2.gcd(g, x)
            if g == 1:
                break
        if den < 0:
            g = -g
        return cls(shift, [x // g for x in nums], mpz(den) // g)

    def __eq__(self, other):
        if not isinstance(other, CoeffForm):
            return NotImplemented
        return (self.shift, self.nums, self.den) == (other.shift, other.nums, other.den)

    def to_poly(self) -> RationalPoly:
        coeffs = [0] * (self.shift + 2 * len(self.nums))
        for j, x in enumerate(self.nums):
            coeffs[self.shift + 2 * j] = Fraction(int(x), int(self.den))
        return RationalPoly(coeffs)

    @classmethod
    def from_poly(cls, poly: RationalPoly, shift: int) -> "CoeffForm":
        nums, den = poly.integer_form()
        for k, x in enumerate(nums):
            if x and (k - shift) % 2:
                raise ValueError("polynomial has a power of the wrong parity")
        return cls.reduced(shift, nums[shift::2], den)

    def coefficient_mpq(self, power: int):
        if power < self.shift or (power - self.shift) % 2:
            return gmpy2.mpq(0)
        j = (power - self.shift) // 2
        if j >= len(self.nums):
            return gmpy2.mpq(0)
        return gmpy2.mpq(self.nums[j], self.den)

    def coefficient(self, power: int) -> Fraction:
        q = self.coefficient_mpq(power)
        return Fraction(int(q.numerator), int(q.denominator))


@dataclass
class CoeffCache:
    """The sequence c_0 .. c_M plus provenance metadata.

    ``forms[m]`` is the integer form of c_m.  The convolution sums used by the
    engine live in ``conv`` and are rebuilt on demand, they are not persisted.
    """

    forms: list = field(default_factory=list)
    path: Path | None = None
    meta: dict = field(default_factory=lambda: {"format": FORMAT_VERSION, "convention": CONVENTION})
    conv: list = field(default_factory=list, repr=False)
    _polys: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.forms:
            self.forms = [CoeffForm(0, [1], 1), CoeffForm(1, [1], 1)]

    @property
    def max_m(self) -> int:
        return len(self.forms) - 1

    def poly(self, m: int) -> RationalPoly:
        if m > self.max_m:
            raise KeyError(f"c_{m} not computed (cache holds m <= {self.max_m})")
        p = self._polys.get(m)
        if p is None:
            p = self._polys[m] = self.forms[m].to_poly()
        return p

    def polys(self, upto: int | None = None) -> list[RationalPoly]:
        upto = self.max_m if upto is None else upto
        return [self.poly(m) for m in range(upto + 1)]

    def append(self, form: CoeffForm) -> None:
        m = len(self.forms)
        self.forms.append(form)
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(format_record(m, form) + "\n")

    def truncated(self, upto: int) -> "CoeffCache":
        return CoeffCache(forms=list(self.forms[: upto + 1]), meta=dict(self.meta))

    # persistence ----------------------------------------------------------

    @classmethod
    def open(cls, path, create: bool = True) -> "CoeffCache":
        """Load the cache at ``path``; with ``create`` a missing file is started."""
        path = Path(path)
        if path.exists():
            cache = load(path)
            cache.path = path
            return cache
        if not create:
            raise CacheError(f"no coefficient cache at {path}")
        path.parent.mkdir(parents=True, exist_ok=True)
        cache = cls(path=None)
        save(cache, path)
        cache.path = path
        return cache


def format_record(m: int, form: CoeffForm) -> str:
    delta, top, r = structure(m)
    fields = [str(m), str(delta), str(r)]
    covered = 0
    for n in range(r + 1):
        p = form.coefficient_mpq(top - 2 * n)
        if p:
            covered += 1
        # gmpy2 formatting: str(int) is capped at 4300 digits on recent CPythons
        fields.append(f"{p.numerator}/{p.denominator}")
    if covered != sum(1 for x in form.nums if x):
        raise ValueError(f"c_{m} has terms outside its coefficient table; cannot serialise")
    return " ".join(fields)


def parse_record(line: str) -> tuple[int, CoeffForm]:
    parts = line.split()
    if len(parts) < 4:
        raise CacheError(f"malformed record: {line!r}")
    try:
        m, delta, r = int(parts[0]), int(parts[1]), int(parts[2])
        ps = [gmpy2.mpq(x) for x in parts[3:]]
    except (ValueError, ZeroDivisionError) as exc:
        raise CacheError(f"malformed record: {line!r}") from exc
    exp_delta, top, exp_r = structure(m)
    if (delta, r) != (exp_delta, exp_r) or len(ps) != r + 1:
        raise CacheError(f"record for m={m} has inconsistent structure fields")
    for p, raw in zip(ps, parts[3:]):
        if f"{p.numerator}/{p.denominator}" != raw:
            raise CacheError(f"record for m={m} has a coefficient not in lowest terms: {raw}")
    shift = m % 2
    den = mpz(1)
    for p in ps:
        den = gmpy2.lcm(den, p.denominator)
    nums = [0] * (r + 1)
    for n, p in enumerate(ps):
        j = (top - 2 * n - shift) // 2
        nums[j] = p.numerator * (den // p.denominator)
    return m, CoeffForm.reduced(shift, nums, den)


def save(cache: CoeffCache, path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(HEADER + "\n")
        for m, form in enumerate(cache.forms):
            fh.write(format_record(m, form) + "\n")
    os.replace(tmp, path)


def load(path) -> CoeffCache:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CacheError(f"cannot read cache {path}: {exc}") from exc
    lines = text.splitlines()
    if lines and not text.endswith("\n"):
        lines.pop()  # partial record from an interrupted append
    if not lines or not lines[0].startswith("# dp3-coefficient-cache"):
        raise CacheError(f"{path} is not a dp3 coefficient cache")
    header = lines[0]
    if f"format={FORMAT_VERSION};" not in header:
        raise CacheError(f"{path}: unsupported cache format ({header})")
    forms = []
    for line in lines[1:]:
        if not line.strip():
            continue
        m, form = parse_record(line)
        if m != len(forms):
            raise CacheError(f"{path}: records out of order at m={m}")
        forms.append(form)
    if len(forms) < 2:
        raise CacheError(f"{path}: cache must hold at least c_0 and c_1")
    return CoeffCache(forms=forms, meta={"format": FORMAT_VERSION, "convention": CONVENTION})
