import json

import pytest
from hypothesis import given, strategies as st

from dp3.cache import CoeffForm
from dp3.coeffs import compute_cm
from dp3.fence import (
    KNOWN_SHAPE_EXCEPTIONS, a_constructive, a_seq, atilde_constructive, atilde_seq, b_seq, btilde,
    btilde_floor_sum, check_area_relations, content_profile, content_val2, even_fence_walk,
    fence_area, fence_area_walk, l_tower, m_tower, odd_fence_walk, r_tower, right_tower_x, s2,
    verify_fence, z_even_formula, z_formula, z_odd_formula,
)


def test_a_examples():
    assert [a_seq(n) for n in (1, 8, 50)] == [2, 5, 3]
    assert [a_seq(n) for n in range(1, 9)] == [2, 3, 2, 4, 2, 3, 2, 5]


def test_atilde_examples():
    assert [atilde_seq(n) for n in (1, 8, 12)] == [1, 4, 3]
    assert [atilde_seq(n) for n in range(1, 9)] == [1, 2, 1, 3, 1, 2, 1, 4]


def test_btilde_examples():
    assert [btilde(k) for k in range(11)] == [0, 1, 3, 4, 7, 8, 10, 11, 15, 16, 18]


def test_b_examples():
    assert [b_seq(k) for k in range(11)] == [0, 2, 5, 7, 11, 13, 16, 18, 23, 25, 28]


def test_towers_match_printed_lists():
    assert [l_tower(k) for k in range(1, 17)] == [5, 9, 5, 7, 5, 13, 5, 7, 5, 9, 5, 7, 5, 11, 5, 7]
    assert [r_tower(k) for k in range(1, 17)] == [9, 7, 13, 7, 9, 7, 11, 7, 9, 7, 17, 7, 9, 7, 11, 7]
    assert [m_tower(k) for k in range(1, 16)] == [0, 1, 0, 2, 0, 1, 0, 3, 0, 1, 0, 2, 0, 1, 0]


def test_first_r15():
    assert min(k for k in range(1, 1000) if r_tower(k) == 15) == 27


def test_sequence_cross_definitions_to_1e5():
    N = 10 ** 5
    a = a_constructive(N)
    assert all(a[n - 1] == a_seq(n) for n in range(1, N + 1))
    at = atilde_constructive(N)
    assert all(at[n - 1] == atilde_seq(n) for n in range(1, N + 1))
    total = 0
    for k in range(1, N + 1):
        total += atilde_seq(k)
        assert total == btilde(k)
    assert all(btilde(k) == btilde_floor_sum(k) for k in range(0, N + 1, 997))


def test_interleaving():
    for j in range(1, 500):
        assert atilde_seq(2 * j - 1) == 1
        assert atilde_seq(2 * j) == a_seq(j)


@given(st.integers(min_value=0, max_value=10 ** 12))
def test_partial_sums_of_a(k):
    # b_k = sum a_l = 2k + nu2(k!) + ... ; checked through its Legendre form on small k elsewhere
    assert b_seq(k) == btilde(k) + k


def test_partial_sums_of_a_directly():
    total = 0
    for k in range(1, 5000):
        total += a_seq(k)
        assert total == b_seq(k)


def test_rejects_bad_arguments():
    for f in (a_seq, atilde_seq, r_tower, l_tower, m_tower):
        with pytest.raises(ValueError):
            f(0)
    for f in (btilde, b_seq):
        with pytest.raises(ValueError):
            f(-1)
    with pytest.raises(ValueError):
        z_odd_formula(4)
    with pytest.raises(ValueError):
        z_even_formula(5)
    with pytest.raises(ValueError):
        fence_area(0)


@pytest.mark.parametrize("n, z", [(793, 4), (795, 6), (797, 5), (799, 6), (33, 1)])
def test_odd_formula_examples(n, z):
    assert z_odd_formula(n).value == z


@pytest.mark.parametrize("n, z", [(794, 268), (796, 266), (798, 275), (800, 268), (22, 10), (2, 2), (4, 2), (6, 8)])
def test_even_formula_examples(n, z):
    assert z_even_formula(n).value == z


def test_798_uses_right_tower_17():
    p = z_even_formula(798)
    assert p.tower == r_tower(17) == 9
    assert "r tower" in p.rule
    assert right_tower_x(17) == 798


def test_sticks_at_powers_of_two():
    for n in range(5, 14):
        assert z_odd_formula(2 ** n + 1).value == 1


def test_every_even_index_has_exactly_one_rule():
    for n in range(8, 5000, 2):
        p = z_even_formula(n)
        assert p.value >= 1


def test_walks_equal_formulas_to_1e4():
    odd = odd_fence_walk(10 ** 4)
    assert all(odd[n] == z_odd_formula(n).value for n in range(3, 10 ** 4 + 1, 2))
    even = even_fence_walk(10 ** 4)
    assert all(even[n] == z_even_formula(n).value for n in range(2, 10 ** 4 + 1, 2))


def test_odd_walk_start():
    z = odd_fence_walk(17)
    assert z[1] == 0 and z[15] == 3 and z[17] == 1


def test_fence_areas():
    assert [fence_area(n)[0] for n in range(1, 8)] == [5, 6, 18, 44, 104, 240, 544]
    assert fence_area(3) == (18, 10)
    assert fence_area(4) == (44, 28)
    assert fence_area(1) == (5, None)
    assert all(fence_area(n)[0] == fence_area_walk(n) for n in range(1, 12))
    assert check_area_relations(20)


def test_area_recurrence_by_hand():
    for n in range(3, 20):
        assert fence_area(n + 1)[0] == 2 ** n + 2 * fence_area(n)[0]


def test_content_examples():
    c = compute_cm(9)
    assert [content_val2(m, c) for m in (2, 6, 9)] == [2, 8, 1]
    with pytest.raises(ValueError):
        content_val2(1, c)


def test_small_range_report():
    rep = verify_fence((2, 9), compute_cm(9))
    assert [e.computed for e in rep.entries] == [2, 2, 2, 1, 8, 2, 4, 1]
    assert rep.ok and not rep.mismatches


def test_report_to_200(cache300):
    rep = verify_fence((2, 200), cache300)
    assert rep.mismatches == []
    assert rep.ok


def test_content_shape_to_300(cache300):
    """Content is 2^z with no other prime in the numerator, except the single known case."""
    odd = {m: content_profile(m, cache300)[1] for m in range(2, 301)}
    assert {m: o for m, o in odd.items() if o != 1} == KNOWN_SHAPE_EXCEPTIONS == {5: 103}
    assert all(content_profile(m, cache300)[0] >= 1 for m in range(2, 301))


def test_content_of_c5_by_hand():
    # c_5 = (206/135) c1 and 206 = 2 * 103
    assert content_profile(5, compute_cm(5)) == (1, 103)


def test_report_json_schema(cache300):
    rep = verify_fence([2, 3, 4], cache300)
    doc = json.loads(rep.to_json())
    assert set(doc) == {"range", "entries", "mismatches", "shape_violations", "elapsed_seconds"}
    assert set(doc["entries"][0]) == {"m", "computed", "predicted", "rule", "match"}
    assert doc["range"] == [2, 4] and doc["mismatches"] == 0


def test_mismatch_is_reported_not_raised():
    c = compute_cm(9)
    c.forms[7] = CoeffForm(1, [7, 3], 1)
    rep = verify_fence((2, 9), c)
    assert [e.m for e in rep.mismatches] == [7]
    assert not rep.ok


def test_unexpected_odd_content_fails_report():
    c = compute_cm(9)
    c.forms[8] = CoeffForm(0, [6, 10], 1)  # content 2, odd part 1 -> fine on shape, z mismatch
    c.forms[9] = CoeffForm(1, [2 * 3 * 16, 2 * 3 * 4], 1)  # odd factor 3
    rep = verify_fence((2, 9), c)
    assert [e.m for e in rep.unexpected_shape_violations] == [9]


def test_range_beyond_cache():
    with pytest.raises(KeyError):
        verify_fence((2, 20), compute_cm(9))


def test_z_formula_dispatch():
    assert z_formula(9).rule.startswith("odd")
    assert z_formula(10).rule.startswith("regular")
    assert s2(0b1011) == 3
