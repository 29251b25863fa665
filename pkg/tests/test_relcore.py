from fractions import Fraction
from itertools import combinations

import pytest

from ramseyforge.errors import ArityError, DomainError, RefusedTooLarge, UndeterminedPattern
from ramseyforge.relcore import (
    KRelation,
    SetFamily,
    constant_relation,
    dual_family,
    find_avoiding_coloring,
    format_sequence,
    is_indiscernible,
    log_iter,
    max_indiscernible,
    parse_sequence,
    ramsey_exact,
    random_relation,
    read_sequence,
    sauer_check,
    shatter_function,
    table_relation,
    tower,
    truth_pattern,
    vc_dimension,
    write_sequence,
)
from ramseyforge.stepup import e3

E3 = e3()


def brute_max(s, E):
    for L in range(len(s), E.arity - 1, -1):
        for c in combinations(s, L):
            if is_indiscernible(list(c), E) is True:
                return L
    return len(s)


def test_indiscernible_examples():
    assert is_indiscernible([5, 1, 9], E3) is True
    assert is_indiscernible([1, 2, 4, 8], E3) is True
    assert is_indiscernible([1, 2, 3, 5], E3) is True
    assert is_indiscernible([1, 2, 4, 5], E3) is False
    with pytest.raises(ArityError):
        is_indiscernible([1, 2], E3)


def test_indiscernible_undetermined():
    E = KRelation(2, lambda x, y: None if y == 3 else True)
    assert is_indiscernible([1, 2, 3], E) is None
    F = KRelation(2, lambda x, y: None if y == 3 else x == 1)
    assert is_indiscernible([1, 2, 3, 4], F) is False


def test_max_indiscernible_examples():
    s = list(range(1, 17))
    rep = max_indiscernible(s, E3)
    assert rep.exhaustive and rep.verified and rep.length == 5
    assert max_indiscernible(list(range(10)), constant_relation(3)).length == 10


def test_max_indiscernible_budget_flag():
    rep = max_indiscernible(list(range(1, 65)), E3, budget_nodes=5)
    assert not rep.exhaustive and rep.verified


@pytest.mark.parametrize("seed", range(6))
def test_max_indiscernible_matches_brute_force(seed):
    import random

    rng = random.Random(seed)
    k = 2 + seed % 3
    s = sorted(rng.sample(range(100), 9))
    E = random_relation(k, seed)
    rep = max_indiscernible(s, E)
    assert rep.exhaustive and rep.length == brute_max(s, E)


def test_ramsey_exact_values():
    assert ramsey_exact(2, 3, 10) == 6
    for k in range(1, 5):
        assert ramsey_exact(k, k, 10) == k
    assert ramsey_exact(2, 3, 5) is None
    with pytest.raises(RefusedTooLarge):
        ramsey_exact(2, 4, 20)


def test_avoiding_coloring_of_five_points():
    col = find_avoiding_coloring(2, 3, 5)
    assert col is not None
    for tri in combinations(range(5), 3):
        assert len({col[p] for p in combinations(tri, 2)}) == 2


def test_vc_examples():
    singles = SetFamily.from_sets(3, [{1}, {2}, {3}])
    power = SetFamily.from_sets(3, [set(c) for r in range(4) for c in combinations([1, 2, 3], r)])
    assert vc_dimension(singles) == 1
    assert vc_dimension(power) == 3
    assert vc_dimension(SetFamily(3, ())) == -1
    assert shatter_function(power, 2) == 4
    assert sauer_check(singles) and sauer_check(power)
    with pytest.raises(RefusedTooLarge):
        vc_dimension(SetFamily(30, (1,)))
    with pytest.raises(DomainError):
        SetFamily(2, (8,))


def test_truth_patterns():
    assert truth_pattern(8, [(1, 2), (1, 4)], E3) == (1, 1)
    assert truth_pattern(8, [], E3) == ()
    assert truth_pattern(3, [(1, 2)], constant_relation(3)) == (1,)
    bad = KRelation(2, lambda x, y: None)
    with pytest.raises(UndeterminedPattern):
        truth_pattern(1, [(0,)], bad)
    fam = dual_family([8, 9, 3], [(1, 2), (1, 4)], E3)
    assert fam.universe == 2 and fam.sets[0] == 0b11


def test_table_relation():
    E = table_relation(2, {(1, 2): True})
    assert E(1, 2) is True and E(2, 1) is False


def test_towers():
    assert tower(1, 7) == 7
    assert tower(3, 2) == 16
    assert log_iter(2, 16) == 2
    assert log_iter(1, Fraction(1, 4)) == -2
    with pytest.raises(RefusedTooLarge):
        tower(4, 40)


def test_sequence_roundtrip(tmp_path):
    seq = [1, -3, Fraction(7, 3), 2**200]
    for fmt in ("csv", "json"):
        assert parse_sequence(format_sequence(seq, fmt), fmt) == seq
    path = tmp_path / "s.json"
    write_sequence(path, seq)
    assert read_sequence(path) == seq
    with pytest.raises(DomainError):
        parse_sequence("[1.5]", "json")
    with pytest.raises(DomainError):
        parse_sequence("abc\n", "csv")


def test_random_relation_is_deterministic():
    a, b = random_relation(3, 11), random_relation(3, 11)
    assert all(a(*t) == b(*t) for t in combinations(range(8), 3))
