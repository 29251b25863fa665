import random
from decimal import Decimal, getcontext
from fractions import Fraction
from itertools import combinations

import pytest

from ramseyforge.errors import DomainError, PreconditionError, RefusedTooLarge
from ramseyforge.relcore import constant_relation, is_indiscernible, max_indiscernible
from ramseyforge.stepup import (
    BaseSeq,
    base_sequence_e3,
    behrend_construction,
    behrend_set,
    build_bt,
    check_robustness_bt,
    delta_index,
    delta_val,
    digits_to_mask,
    e3,
    e3_zero_triples,
    explicit_ek,
    find_3ap,
    mask_to_digits,
    min_valid_T,
    step_up_analytic,
    step_up_semantic,
    witness,
)


def has_3ap(xs):
    xs = sorted(xs)
    return any(x + z == 2 * y for x, y, z in combinations(xs, 3))


def test_e3_examples():
    E = e3()
    assert E(1, 2, 3) is True
    assert E(1, 3, 4) is False
    for n in range(2, 21):
        assert is_indiscernible([2**i for i in range(n + 1)], E) is True


@pytest.mark.parametrize("m", [3, 8, 50, 81, 243, 729])
def test_behrend_is_3ap_free(m):
    X = behrend_set(m)
    assert not has_3ap(X) and all(1 <= x <= m for x in X)
    assert len(X) >= 2


def test_behrend_growth_constant():
    r = behrend_construction(3**6)
    assert r.measured_D > 0
    assert len(r.elements) == 64
    assert behrend_construction.__wrapped__(3**6).measured_D == r.measured_D


def test_base_sequence_e3():
    a = base_sequence_e3(4)
    assert len(a) >= 4 and a.values[-1] <= 16
    assert not has_3ap(a.values) and not e3_zero_triples(a.values)


def test_delta_examples():
    assert delta_index((1, 0, 1), (1, 1, 1)) == 2
    assert delta_index((0, 0, 0), (0, 0, 1)) == 3
    b, c = (1, 0, 0, 1), (0, 1, 1, 1)
    assert delta_index(b, c) == delta_index(c, b) == 3
    a = BaseSeq((1, 3, 9))
    assert delta_val(a, (1, 0, 1), (1, 1, 1)) == 3
    assert delta_val(a, (0, 0, 0), (0, 0, 1)) == 9
    with pytest.raises(DomainError):
        delta_index((1, 0), (1, 0))
    assert mask_to_digits(digits_to_mask((1, 0, 1, 1)), 4) == (1, 0, 1, 1)


def test_base_seq_validation():
    with pytest.raises(DomainError):
        BaseSeq((3, 2))
    with pytest.raises(DomainError):
        BaseSeq(())


def test_build_bt_examples():
    assert build_bt((1, 2), 10).values == (0, 10, 100, 110)
    bt = build_bt((1, 2), 2)
    assert bt.values == (0, 2, 4, 6) and bt.eq1 and bt.order_consistent
    assert len(build_bt((1, 2, 3), 10)) == 8
    assert bt.digits(4) == (0, 1) and bt.delta_val(2, 6) == 2
    with pytest.raises(DomainError):
        bt.mask_of(5)


def _eq1_brute(bt):
    idx = {v: m for v, m in zip(bt.values, bt.masks)}
    return all((idx[b] ^ idx[c]).bit_length() != (idx[c] ^ idx[d]).bit_length() for b, c, d in combinations(bt.values, 3))


def _eps_brute(a, T, eps):
    getcontext().prec = 60
    bt = build_bt(a, T)
    lt = Decimal(T).ln()
    e = Decimal(eps.numerator) / Decimal(eps.denominator)
    for b, c in combinations(bt.values, 2):
        d = bt.delta_val(b, c)
        if not abs(Decimal(d) - Decimal(c - b).ln() / lt) < e:
            return False
    return True


def test_min_valid_T_examples():
    T = min_valid_T((1, 2), Fraction(1, 2))
    bt = build_bt((1, 2), T)
    assert bt.valid and _eq1_brute(bt) and _eps_brute((1, 2), T, Fraction(1, 2))
    for t2 in (2 * T, 4 * T):
        assert _eps_brute((1, 2), t2, Fraction(1, 2))
    if T > 2:
        assert not _eps_brute((1, 2), T // 2, Fraction(1, 2))
    assert min_valid_T((1,), Fraction(1, 3)) == 2
    with pytest.raises(RefusedTooLarge):
        min_valid_T(tuple(range(1, 15)))
    with pytest.raises(DomainError):
        min_valid_T((1, 2), 0)


def test_robustness_check():
    bt = build_bt((1, 2), 10)
    assert check_robustness_bt(bt) == (not has_3ap(bt.values))
    assert check_robustness_bt(build_bt((5,), 2))
    assert find_3ap([0, 2, 4]) == (0, 2, 4)


def test_semantic_clause_one():
    a = BaseSeq((1, 3, 9))
    T = min_valid_T(a)
    bt = build_bt(a, T)
    up = step_up_semantic(e3(), bt)
    # deltas (1, 3, 9): increasing and 1 + 9 - 6 >= 0
    t = (0, T, T + T**3, T + T**3 + T**9)
    assert up(*t) is True


def test_semantic_clause_three():
    a = BaseSeq((1, 3, 9))
    bt = build_bt(a, min_valid_T(a))
    T = bt.T
    up = step_up_semantic(constant_relation(3, False), bt)
    # deltas (1, 3, 1): a local maximum in the middle
    assert up(0, T, T**3, T**3 + T) is True


def test_semantic_rejects_foreign_and_unsorted():
    bt = build_bt((1, 3, 9), 4)
    up = step_up_semantic(e3(), bt)
    with pytest.raises(DomainError):
        up(0, 1, 2, 3)
    with pytest.raises(PreconditionError):
        up(4, 0, 64, 68)


def test_explicit_e4_example():
    E4 = explicit_ek(4)
    assert E4(0, 2, 8, 64) is True
    with pytest.raises(PreconditionError):
        E4(0, 2, 2, 64)
    with pytest.raises(DomainError):
        explicit_ek(7)


def test_explicit_matches_integer_identity():
    # increasing differences: E4 holds iff d1*d3 >= d2^2
    E4 = explicit_ek(4)
    rng = random.Random(3)
    for _ in range(300):
        d = sorted(rng.sample(range(1, 200), 3))
        xs = (0, d[0], d[0] + d[1], d[0] + d[1] + d[2])
        assert E4(*xs) is (d[0] * d[2] >= d[1] ** 2)


def test_explicit_is_T_free():
    E4 = explicit_ek(4)
    a2, a16 = step_up_analytic(e3(), 2), step_up_analytic(e3(), 16)
    rng = random.Random(11)
    for _ in range(300):
        xs = sorted(rng.sample(range(10**6), 4))
        v = E4(*xs)
        assert v is not None and v == a2(*xs) == a16(*xs)


@pytest.mark.parametrize("k,base", [(3, (1, 2, 4)), (3, (1, 2, 4, 5)), (4, (0, 4, 16, 20))])
def test_three_evaluators_agree(k, base):
    a = BaseSeq(base)
    T = min_valid_T(a)
    bt = build_bt(a, T)
    E = explicit_ek(k)
    sem, ana, exp = step_up_semantic(E, bt), step_up_analytic(E, T), explicit_ek(k + 1)
    for t in combinations(bt.values, k + 1):
        v = sem(*t)
        assert v is not None and v == ana(*t) == exp(*t)


def test_analytic_on_rationals():
    up = step_up_analytic(e3(), 4)
    assert up(0, Fraction(1, 2), 2, 9) is explicit_ek(4)(0, Fraction(1, 2), 2, 9)


def test_witness_levels():
    E, seq, rep = witness(3, 4)
    assert E.arity == 3 and seq == list(base_sequence_e3(4).values)
    E, seq, rep = witness(4, 4, base_len=5)
    assert E.arity == 4 and len(seq) == 32 and rep.measured["tower_shape"]
    assert rep.measured["claimed_bounds"] == [6, 11]
    assert rep.verified


def test_witness_refusals():
    with pytest.raises(RefusedTooLarge) as info:
        witness(5, 4)
    assert info.value.achievable["k"] == 4
    with pytest.raises(RefusedTooLarge):
        witness(7, 3)
    with pytest.raises(DomainError):
        witness(2, 3)


def test_step_up_soundness_small():
    # base with no E3-indiscernible subsequence of length 4 -> no E4-indiscernible of length 2*4-1
    base = (1, 2, 4, 5)
    n = max_indiscernible(list(base), e3()).length + 1
    bt = build_bt(base, min_valid_T(base))
    rep = max_indiscernible(list(bt.values), explicit_ek(4))
    assert rep.exhaustive and rep.length < 2 * n - 1
