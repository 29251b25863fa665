import random
from fractions import Fraction

import pytest

from ramseyforge.errors import DomainError, ShortInput
from ramseyforge.padic import (
    PAdicValue,
    ValBall,
    apply_transform,
    ball_refine,
    distinct_valuation_points,
    is_linearly_n_growing,
    linear_growing_extract,
    smallest_ball,
    valuation,
    valuation_chain,
)


def test_valuation_examples():
    assert valuation(12, 2) == 2
    assert valuation(Fraction(1, 9), 3) == -2
    assert valuation(7, 5) == 0
    with pytest.raises(DomainError):
        valuation(0, 2)
    with pytest.raises(DomainError):
        valuation(5, 4)


def test_padic_value_factorization():
    x = PAdicValue(3, Fraction(-54, 5))
    assert x.v == 3 and x.unit == Fraction(-2, 5)
    assert x.q == 3**x.v * x.unit
    with pytest.raises(DomainError):
        PAdicValue(2, 0)


def test_ball_membership():
    B = ValBall(Fraction(1), 3, 2)
    assert 9 in B and 1 in B and 5 not in B


def test_ball_refine_two_points():
    alpha, r = ball_refine([0, 1], ValBall(Fraction(0), 0, 2))
    inside = [a for a in (0, 1) if a in ValBall(alpha, r, 2)]
    assert r == 1 and len(inside) == 1


def test_ball_refine_even_points():
    A = [0, 2, 4, 6]
    assert smallest_ball(A, 2).radius == 1
    alpha, r = ball_refine(A, ValBall(Fraction(0), 0, 2))
    assert r == 2 and sum(a in ValBall(alpha, r, 2) for a in A) == 2


def test_ball_refine_errors():
    with pytest.raises(DomainError):
        ball_refine([3], ValBall(Fraction(0), 0, 2))
    with pytest.raises(DomainError):
        ball_refine([1, 3], ValBall(Fraction(0), 1, 2))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_ball_refine_double_inequality(p):
    rng = random.Random(p)
    for _ in range(200):
        A = list({Fraction(rng.randrange(-999, 999), p ** rng.randint(0, 2)) for _ in range(rng.randint(2, 64))})
        if len(A) < 2:
            continue
        ball = smallest_ball(A, p)
        alpha, r = ball_refine(A, ball)
        inside = sum(a in ValBall(alpha, r, p) for a in A)
        assert len(A) <= p * inside and inside < len(A)


def test_distinct_valuation_points_example():
    alpha, pts, chain = distinct_valuation_points([1, 2, 3, 4], 2, 2)
    vals = [valuation(alpha - a, 2) for a in pts]
    assert len(set(vals)) == 2 and chain.sandwich_ok([Fraction(x) for x in (1, 2, 3, 4)], 2)
    alpha, pts, _ = distinct_valuation_points([5, 9], 1, 3)
    assert len(pts) == 1
    with pytest.raises(DomainError):
        distinct_valuation_points([1, 2, 3], 2, 2)


@pytest.mark.parametrize("p", [2, 3])
def test_distinct_valuations_random(p):
    rng = random.Random(10 + p)
    for _ in range(100):
        k = rng.randint(1, 4)
        A = rng.sample(range(10**6), 2 * p ** (k - 1))
        alpha, pts, chain = distinct_valuation_points(A, k, p)
        vals = [valuation(alpha - a, p) for a in pts]
        assert len(set(vals)) == k
        assert all(x < y for x, y in zip(chain.radii, chain.radii[1:]))
        for i, v in enumerate(vals):
            assert chain.radii[i] <= v < chain.radii[i + 1]


def test_valuation_chain_terminal_point():
    ch = valuation_chain([0, 1, 2, 3, 4, 5, 6, 7], 2)
    assert len(ch.points) == 4 and len(set(ch.valuations)) == 4


def test_linear_growth_predicate():
    assert is_linearly_n_growing([4, 2**9], 2, 2) is False
    assert is_linearly_n_growing([8, 2**7], 2, 2) is True
    assert is_linearly_n_growing([PAdicValue(3, 81), PAdicValue(3, 3**13)], 3) is True
    with pytest.raises(DomainError):
        is_linearly_n_growing([0, 8], 2, 2)


def test_transforms():
    steps = [("scale", 3), ("invert",), ("shift", 5)]
    assert apply_transform(steps, 2) == Fraction(1, 6) + 5
    assert apply_transform([("scale_inv", 4)], 8) == Fraction(1, 2)
    assert apply_transform([("const", 7)], 99) == 7
    with pytest.raises(DomainError):
        apply_transform([("rotate", 1)], 1)


def test_identity_fast_path():
    s = [2, 2**5, 2**27, 2**60]
    r = linear_growing_extract(s, 2, 2, 2)
    assert r.case == "identity" and r.steps == []
    assert is_linearly_n_growing(r.growing, 2, 2) and r.embeds(s)


def test_constant_case():
    s = [7] * 16
    r = linear_growing_extract(s, 2, 3, 2)
    assert r.case == "constant" and r.embeds(s)
    assert all(apply_transform(r.steps, g) == 7 for g in r.growing)


def test_general_case_verified_or_short():
    rng = random.Random(4)
    for i in range(20):
        p = (2, 3, 5)[i % 3]
        s = [rng.randint(1, 10**6) for _ in range(300)]
        try:
            r = linear_growing_extract(s, p, 2, 2)
        except ShortInput as e:
            r = e.partial
            assert e.achieved == len(r.growing) < 2
        assert r.trace["growing_verified"] and r.trace["embedding_verified"]
        assert r.embeds(s)
        assert all(r.trace.get("bookkeeping", {}).values())


def test_stride_for_larger_n():
    rng = random.Random(8)
    s = [rng.randint(1, 10**9) for _ in range(2000)]
    try:
        r = linear_growing_extract(s, 2, 2, 5)
    except ShortInput as e:
        r = e.partial
    assert r.trace["growing_verified"] and r.trace["embedding_verified"]
    if r.case == "general":
        assert r.trace["stride"] == 3


def test_mirrored_orientation_embeds_reversed():
    rng = random.Random(24)
    s = [rng.randint(1, 10**6) for _ in range(60)]
    r = linear_growing_extract(s, 2, 2, 2)
    assert r.orientation == "reversed" and r.trace["doubling_variant"] == "mirrored"
    assert r.indices[0] > r.indices[1]
    (op, c), (op2, alpha) = r.steps
    assert (op, op2) == ("scale_inv", "shift")
    for g, i in zip(r.growing, r.indices):
        assert c / g + alpha == s[i - 1]
    assert [valuation(g, 2) for g in r.growing] == [3, 7]
