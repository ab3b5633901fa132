from fractions import Fraction as F

import pytest

from dp3.cache import structure
from dp3.coeffs import compute_cm
from dp3.genfun import (
    A_closed, A_series, RationalFunctionExpr, check_column, column_value, generating_index,
    homogeneous_solution, p_m0_closed, p_m1_closed, verify_genfun_ode, verify_sgf_equation,
)
from dp3.series import RationalSeries

PRINTED_A0 = {1: F(1), 4: F(4, 9), 7: F(4, 27), 10: F(32, 729), 13: F(80, 6561), 16: F(64, 19683),
              19: F(448, 531441)}
PRINTED_A1 = {0: F(1), 3: F(4, 3), 6: F(512, 675), 9: F(1936, 6075), 12: F(6272, 54675),
              15: F(18496, 492075), 18: F(2048, 177147)}
PRINTED_A2 = {2: F(4, 3), 5: F(206, 135), 8: F(10768, 11025), 11: F(1174888, 2480625),
              14: F(290816, 1488375), 17: F(14567072, 200930625)}


@pytest.mark.parametrize("n, printed, top", [(0, PRINTED_A0, 19), (1, PRINTED_A1, 18), (2, PRINTED_A2, 17)])
def test_printed_expansions(n, printed, top):
    s = A_series(n, top + 1)
    assert {k: s[k] for k in range(top + 1) if s[k]} == printed


def test_A1_printed_product_form():
    """(2z^3+45)(4z^6-252z^3-405) / (25 (2z^3-9)^3), expanded independently."""
    N = 30
    num = RationalSeries([45, 0, 0, 2], prec=N) * RationalSeries([-405, 0, 0, -252, 0, 0, 4], prec=N)
    den = RationalSeries([-9, 0, 0, 2], prec=N) ** 3 * 25
    assert (num / den).coefficients() == A_series(1, N).coefficients()


def test_A2_printed_form():
    N = 30
    z = RationalSeries.z(N)
    poly = RationalSeries([-1638792, 0, 0, -436509, 0, 0, -14112, 0, 0, 340], prec=N)
    quotient = z * z * poly * 162 / (RationalSeries([-9, 0, 0, 2], prec=N) ** 4 * 30625)
    expected = z ** 5 * F(-8, 16875) + z * z * F(1108, 91875) - quotient
    n = min(expected.prec, N)
    assert expected.coefficients(0, n) == A_series(2, N).coefficients(0, n)


def test_A0_closed_form():
    s = A_series(0, 25)
    direct = RationalSeries.z(25) / RationalSeries([1, 0, 0, F(-2, 9)], prec=25) ** 2
    assert s.coefficients() == direct.coefficients()


def test_A4_starts_at_z6():
    s = A_series(4, 12)
    assert s.val == 6


def test_untranscribed_index():
    with pytest.raises(ValueError, match="closed form not transcribed"):
        A_closed(6)


def test_canonical_basis():
    for n in range(6):
        expr = A_closed(n)
        assert all(j >= 0 and e >= 0 for j, e in expr.terms)
        assert expr.canonical().series(30).coefficients() == expr.series(30).coefficients()
    assert RationalFunctionExpr({(2, 0): F(3)}).polynomial_part() == {2: F(3)}


def test_homogeneous_term_is_excluded():
    """Adding the single-valued kernel would move the z^4 coefficient of A_1 off zero."""
    h = homogeneous_solution(10)
    assert h[1] != 0 and h[4] != 0
    a1 = A_series(1, 10)
    assert a1[3] == F(4, 3) and a1[6] == F(512, 675) and a1[4] == 0 and a1[1] == 0


@pytest.mark.parametrize("n", range(5))
def test_hierarchy(n):
    res = verify_genfun_ode(n, 30)
    assert res.prec >= 30
    assert res.is_zero()


def test_hierarchy_n5_not_available():
    assert verify_genfun_ode(5, 30) is None
    with pytest.raises(ValueError):
        verify_genfun_ode(1, 5)


def test_hierarchy_detects_a_wrong_transcription(monkeypatch):
    import dp3.genfun as g
    real = g.A_series

    def perturbed(n, order):
        s = real(n, order)
        if n == 3:
            s = s + RationalSeries.z(order, 10) * F(1, 1000)
        return s

    monkeypatch.setattr(g, "A_series", perturbed)
    assert not g.verify_genfun_ode(3, 30).is_zero()


def test_full_equation_through_eps5():
    for r in verify_sgf_equation(30, K=5):
        assert r.is_zero()


def test_generating_index():
    assert [generating_index(m, 0) for m in (0, 1, 2)] == [1, 0, 2]
    assert [generating_index(m, 1) for m in (3, 4, 5)] == [4, 3, 5]


@pytest.mark.parametrize("m, value", [(4, F(4, 9)), (5, F(206, 135)), (6, F(512, 675)), (0, F(1)), (2, F(4, 3))])
def test_p_m0_examples(m, value):
    assert p_m0_closed(m) == value


@pytest.mark.parametrize("m, value", [(4, F(16, 15)), (12, F(4788251008, 4862521125)),
                                      (14, F(44744664088576, 51771262417875))])
def test_p_m1_examples(m, value):
    assert p_m1_closed(m) == value


def test_p_m1_range():
    for m in (0, 1, 2, 3, 5):  # r_m = 0: no second coefficient
        with pytest.raises(ValueError):
            p_m1_closed(m)


@pytest.fixture(scope="module")
def c120():
    return compute_cm(120)


def test_closed_columns_match_recurrence(c120):
    for m in range(121):
        assert p_m0_closed(m) == column_value(m, 0, c120), m
        if structure(m)[2] >= 1:
            assert p_m1_closed(m) == column_value(m, 1, c120), m


def test_closed_forms_match_series():
    series = {k: A_series(k, 41) for k in range(6)}
    for m in range(41):
        assert p_m0_closed(m) == series[generating_index(m, 0)][m]
        if structure(m)[2] >= 1:
            assert p_m1_closed(m) == series[generating_index(m, 1)][m]


@pytest.mark.parametrize("j, M", [(0, 9), (1, 14), (0, 2), (0, 120), (1, 120)])
def test_check_column(c120, j, M):
    rep = check_column(j, c120.truncated(M), M + 1)
    assert rep.ok and rep.checked == list(range(M + 1))


def test_check_column_csv(c120):
    rep = check_column(0, c120.truncated(5), 6)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "m,p_m0_recurrence,p_m0_closed,match"
    assert lines[3] == "2,4/3,4/3,1"


def test_check_column_reports_mismatch(c120):
    from dp3.cache import CoeffForm
    bad = c120.truncated(10)
    bad.forms[7] = CoeffForm(1, [1, 1], 1)
    rep = check_column(0, bad, 11)
    assert [m for m, _, _ in rep.mismatches] == [7]
