import cmath
import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from dp3.cache import CacheCorruptionError, CoeffCache, CoeffForm
from dp3.coeffs import (
    bound_Rm, check_degree, check_estimate, check_parity, check_positive, coeff_table, compute_cm,
    expected_degree, first_sum_converted, first_sum_direct, numeric_coefficients,
    recurrence_residual, reference_coefficients, revalidate,
)
from dp3.exact import RationalPoly

# the printed table c_2 .. c_9, ascending powers of c1
PRINTED = {
    2: [F(4, 3)],
    3: [0, F(4, 3)],
    4: [F(16, 15), 0, F(4, 9)],
    5: [0, F(206, 135)],
    6: [F(256, 315), 0, F(512, 675)],
    7: [0, F(1336, 945), 0, F(4, 27)],
    8: [F(4864, 8505), 0, F(10768, 11025)],
    9: [0, F(253774, 212625), 0, F(1936, 6075)],
}


@pytest.fixture(scope="module")
def small():
    return compute_cm(60)


@pytest.fixture(scope="module")
def reference():
    return reference_coefficients(40)


def test_printed_table(small):
    for m, coeffs in PRINTED.items():
        assert small.poly(m) == RationalPoly(coeffs), m


def test_first_entries(small):
    assert small.poly(0) == RationalPoly([1])
    assert small.poly(1) == RationalPoly.variable()


def test_engine_matches_reference_recurrence(small, reference):
    for m in range(41):
        assert small.poly(m) == reference[m], m


def test_reference_residual_vanishes(reference):
    for m in range(2, 41):
        assert recurrence_residual(m, reference).is_zero()


def test_converted_first_sum(small):
    c = small.polys(60)
    for m in range(2, 61):
        assert first_sum_direct(m, c) == first_sum_converted(m, c), m


@pytest.mark.parametrize("m, entries", [
    (4, [(0, F(4, 9)), (1, F(16, 15))]),
    (2, [(0, F(4, 3))]),
    (7, [(0, F(4, 27)), (1, F(1336, 945))]),
])
def test_coeff_table_examples(small, m, entries):
    t = coeff_table(m, small)
    assert t.entries == entries
    assert t.to_poly() == small.poly(m)


def test_coeff_table_structure(cache300):
    for m in range(0, 301):
        t = coeff_table(m, cache300)
        powers = [t.power(n) for n, _ in t.entries]
        assert all(p >= 0 and p % 2 == m % 2 for p in powers)
        assert all(a - b == 2 for a, b in zip(powers, powers[1:]))
        assert t.to_poly() == cache300.poly(m)


def test_coeff_table_missing(small):
    with pytest.raises(KeyError):
        coeff_table(61, small)


@pytest.mark.parametrize("m", [1, 5, 8])
def test_parity_examples(small, m):
    assert check_parity(m, small)


@pytest.mark.parametrize("m, deg", [(0, 0), (7, 3), (9, 3)])
def test_degree_examples(small, m, deg):
    assert expected_degree(m) == deg
    assert check_degree(m, small)


def test_parity_degree_positivity_to_300(cache300):
    for m in range(2, 301):
        assert check_parity(m, cache300), m
        assert check_degree(m, cache300), m
        assert check_positive(m, cache300), m
        assert cache300.poly(m).degree < m


def test_parity_detects_a_planted_error():
    c = compute_cm(6)
    c.forms[5] = CoeffForm(0, [1, 1], 1)  # even powers in an odd slot
    assert not check_parity(5, c)
    assert not check_degree(4, CoeffCache(forms=c.forms[:4] + [CoeffForm(0, [1], 1)]))


def test_bound_values():
    assert bound_Rm(8, 1.04, 12) == pytest.approx(0.9922344425, abs=1e-9)
    assert bound_Rm(7, 1.04, 12) == pytest.approx(1.064756992, abs=1e-8)
    assert bound_Rm(8, 1.04, 12 / 1.04) == pytest.approx(0.9974290608, abs=1e-9)


def test_bound_formula_by_hand():
    m, a, C2 = 10, 1.2, 20.0
    z2, z3 = math.pi ** 2 / 6, math.pi ** 2 / 3
    expected = (m + 1) / (m - 1) * a * (z2 - 1 + 4 * (z3 + 2) * (z3 + 1) * a / (C2 * (m + 1) ** 2))
    assert bound_Rm(m, a, C2) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("args", [(1, 1.04, 12), (8, 0.9, 12), (8, 1.04, 0)])
def test_bound_preconditions(args):
    with pytest.raises(ValueError):
        bound_Rm(*args)


def test_estimate_examples(small):
    C = math.sqrt(12)
    assert check_estimate(2, 0, 1.04, C * 1.0000001, small).ok
    assert check_estimate(7, 0, 1.04, C * 1.0000001, small).ok
    assert check_estimate(0, 0.3, 1.04, C * 1.0000001, small).ok
    with pytest.raises(ValueError):
        check_estimate(7, 10, 1.04, C, small)


def test_estimate_holds_for_admissible_constants(small):
    rng = random.Random(7)
    for _ in range(20):
        c1 = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        alpha = 1.04
        C = max(math.sqrt(12 / alpha), 4 * abs(c1) / alpha)
        report = check_estimate(60, c1, alpha, C, small)
        assert report.ok, report.violations[:3]


def test_resume_and_corruption_detection(tmp_path):
    path = tmp_path / "c.txt"
    cache = CoeffCache.open(path)
    compute_cm(20, cache)
    again = CoeffCache.open(path)
    compute_cm(30, again, validate="full")
    assert again.forms == compute_cm(30).forms
    bad = CoeffCache.open(path)
    f = bad.forms[17]
    bad.forms[17] = CoeffForm(f.shift, [x + 1 for x in f.nums], f.den)
    with pytest.raises(CacheCorruptionError) as err:
        revalidate(bad)
    assert err.value.index == 17
    with pytest.raises(CacheCorruptionError):
        compute_cm(31, bad, validate="full")


def test_compute_cm_preconditions():
    with pytest.raises(ValueError):
        compute_cm(1)
    with pytest.raises(ValueError):
        compute_cm(5, validate="sometimes")


def test_progress_hook():
    seen = []
    compute_cm(12, progress=lambda m, dt, form: seen.append(m))
    assert seen == list(range(2, 13))


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_evaluation_homomorphism(c1):
    """Exact polynomials evaluated at c1 agree with the recurrence run at c1."""
    exact = compute_cm(40)
    direct = numeric_coefficients(c1, 40)
    for m in range(41):
        p = exact.poly(m)
        scale = max(p.evaluate_abs(c1), 1e-300)
        assert abs(p(c1) - direct[m]) <= 1e-12 * scale, m


def test_numeric_coefficients_match_partial_sum():
    c1 = 0.4 - 0.2j
    exact = compute_cm(40)
    x = 0.05
    via_exact = sum(exact.poly(m)(c1) * x ** m for m in range(41))
    via_num = sum(c * x ** m for m, c in enumerate(numeric_coefficients(c1, 40)))
    assert cmath.isclose(via_exact, via_num, rel_tol=1e-12)
