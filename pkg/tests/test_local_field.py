from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confspace.local_field import (
    Ball, PAdicNumber, PrecisionError, balls_disjoint, coerce_point, distance_exponent,
    haar_volume, padic_abs, padic_add, padic_mul, power,
)

P = PAdicNumber

primes = st.sampled_from([2, 3, 5, 7])
rationals = st.fractions(max_denominator=500).filter(lambda q: abs(q) < 10**6)


def vabs(q: Fraction, p: int) -> Fraction:
    """|q|_p by factoring out powers of p."""
    if q == 0:
        return Fraction(0)
    v, a, b = 0, q.numerator, q.denominator
    while a % p == 0:
        a //= p
        v += 1
    while b % p == 0:
        b //= p
        v -= 1
    return power(p, -v)


def test_abs_examples():
    assert padic_abs(P.from_int(5, 5)) == Fraction(1, 5)
    assert padic_abs(P.zero(3)) == 0
    assert padic_abs(P.from_fraction(Fraction(10, 9), 3)) == 9


def test_arithmetic_examples():
    x = P.from_int(7, 3)
    assert x + P.zero(3) == x
    three = padic_add(P.from_int(1, 3), P.from_int(2, 3))
    assert three.to_fraction() == 3
    assert padic_abs(three) == Fraction(1, 3)
    six = padic_mul(P.from_int(2, 5), P.from_int(3, 5))
    assert six.to_fraction() == 6
    assert padic_abs(six) == 1


def test_haar_volume_examples():
    assert haar_volume(Ball.with_radius((P.zero(3),), 1)) == 1
    assert haar_volume(Ball.with_radius((P.zero(3),), Fraction(1, 9))) == Fraction(1, 9)
    assert haar_volume(Ball.with_radius((P.zero(2), P.zero(2)), Fraction(1, 2))) == Fraction(1, 4)


def test_text_round_trip():
    x = P.from_fraction(Fraction(-7, 12), 3)
    assert P.parse(x.to_text()) == x
    assert P.parse("3:0:").is_zero
    assert P.parse("3:1:21").to_fraction() == 3 * 2 + 9 * 1


def test_mixed_primes_rejected():
    with pytest.raises(ValueError):
        P.from_int(1, 3) + P.from_int(1, 5)


def test_radius_outside_value_group():
    with pytest.raises(ValueError):
        Ball.with_radius((P.zero(3),), Fraction(1, 2))


def test_short_center_rejected_for_small_ball():
    with pytest.raises(PrecisionError):
        Ball((P.from_digits(3, 0, [1]),), 5)


@given(primes, rationals)
def test_abs_matches_factoring(p, q):
    assert padic_abs(P.from_fraction(q, p)) == vabs(q, p)


@given(primes, rationals, rationals)
def test_field_operations_agree_with_rationals(p, a, b):
    x, y = P.from_fraction(a, p), P.from_fraction(b, p)
    assert (x + y).congruent(P.from_fraction(a + b, p))
    assert (x * y).congruent(P.from_fraction(a * b, p))
    assert padic_abs(x * y) == padic_abs(x) * padic_abs(y)


@given(primes, rationals, rationals)
def test_strong_triangle(p, a, b):
    x, y = P.from_fraction(a, p), P.from_fraction(b, p)
    assert padic_abs(x + y) <= max(padic_abs(x), padic_abs(y))


@settings(max_examples=50)
@given(primes, st.integers(-3, 3), rationals, rationals, st.integers(-3, 3))
def test_ball_dichotomy(p, j1, a, b, j2):
    b1 = Ball((P.from_fraction(a, p),), j1)
    b2 = Ball((P.from_fraction(b, p),), j2)
    if b1.intersects(b2):
        assert b1.contains_ball(b2) or b2.contains_ball(b1)
    else:
        assert balls_disjoint([b1, b2])


@settings(max_examples=25)
@given(st.sampled_from([2, 3]), st.integers(1, 2), st.integers(-2, 2))
def test_children_partition(p, k, j):
    ball = Ball(coerce_point([0] * k, p), j)
    kids = list(ball.children())
    assert len(kids) == p**k
    assert balls_disjoint(kids)
    assert sum(haar_volume(c) for c in kids) == haar_volume(ball)
    rng = np.random.default_rng(p * 100 + k * 10 + j)
    for x in ball.sample(rng, 30):
        assert sum(x in c for c in kids) == 1


def test_samples_stay_in_ball():
    ball = Ball((P.from_int(4, 3),), 2)
    pts = ball.sample(np.random.default_rng(1), 500)
    assert all(x in ball for x in pts)
    assert all(distance_exponent(x, ball.center) is None
               or distance_exponent(x, ball.center) >= 2 for x in pts)
