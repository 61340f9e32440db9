import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from confspace.config import FiniteConfig
from confspace.local_field import Ball, PAdicNumber, coerce_point
from confspace.space import (
    Box, PointSpace, delta_metric, diagonal_distance, make_exhaustion, matching_metric,
    point_distance, product_metric, region_contains,
)


def pp(*xs, p=3):
    return tuple(coerce_point([x], p) for x in xs)


def test_product_metric_examples():
    assert product_metric(((0.0,), (0.0,)), ((3.0,), (4.0,))) == 7
    x = pp(0, 1)
    assert product_metric(x, x) == 0
    assert product_metric(pp(0, 1), pp(9, 1)) == Fraction(1, 9)


def test_diagonal_distance_examples():
    assert diagonal_distance(((0.0,), (2.0,))) == pytest.approx(2.0)
    assert diagonal_distance(((1.0,), (1.0,), (5.0,))) == 0
    assert diagonal_distance(pp(0, 3)) == Fraction(1, 3)


def test_delta_metric_examples():
    x, y = ((0.0,), (2.0,)), ((0.0,), (4.0,))
    assert delta_metric(x, y) == pytest.approx(0.25)
    assert delta_metric(x, x) == 0
    assert delta_metric(pp(0, 1), pp(0, 3)) == 1


def test_matching_metric_examples():
    g = FiniteConfig([(0.0,), (10.0,)])
    assert matching_metric(g, FiniteConfig([(1.0,), (11.0,)])) == 2
    assert matching_metric(g, g) == 0
    a = FiniteConfig([(0.0,), (1.0,), (2.0,)])
    b = FiniteConfig([(2.1,), (0.1,), (1.1,)])
    assert matching_metric(a, b) == pytest.approx(0.3)


def test_exhaustion_examples():
    ex = make_exhaustion(PointSpace.padic(3), 3)
    assert [b.radius for b in ex.levels] == [1, 3, 9]
    assert ex.clopen
    assert len(make_exhaustion(PointSpace.real(), 1)) == 1
    ex = make_exhaustion(PointSpace.real(), 2, [1.0, 2.0])
    assert ex[0] == Box.interval(-1, 1) and ex[1] == Box.interval(-2, 2)
    assert region_contains(ex[1], ex[0])


def test_exhaustion_must_nest():
    with pytest.raises(ValueError):
        make_exhaustion(PointSpace.real(), 2, [2.0, 1.0])


def test_delta_metric_needs_two_points():
    with pytest.raises(ValueError):
        delta_metric(((0.0,),), ((1.0,),))


def test_matching_size_mismatch():
    with pytest.raises(ValueError):
        matching_metric(FiniteConfig([(0.0,)]), FiniteConfig([(0.0,), (1.0,)]))


reals = st.integers(-5000, 5000).map(lambda k: k / 100)
ints = st.integers(-200, 200)


@settings(max_examples=60)
@given(st.integers(2, 4).flatmap(
    lambda n: st.tuples(*[st.lists(ints, min_size=n, max_size=n, unique=True)] * 3)))
def test_padic_metrics_are_ultrametric(rows):
    x, y, z = (pp(*r) for r in rows)
    for m in (product_metric, delta_metric):
        assert m(x, z) <= max(m(x, y), m(y, z))
        assert m(x, y) == m(y, x)
    assert delta_metric(x, y) <= 1


@settings(max_examples=60)
@given(st.lists(reals, min_size=2, max_size=4, unique=True),
       st.lists(reals, min_size=2, max_size=4, unique=True))
def test_matching_bounded_by_product_metric(a, b):
    n = min(len(a), len(b))
    x, y = [(t,) for t in a[:n]], [(t,) for t in b[:n]]
    gx, gy = FiniteConfig(x), FiniteConfig(y)
    d = matching_metric(gx, gy)
    assert d <= product_metric(x, y) + 1e-9
    best = min(sum(abs(x[i][0] - y[s[i]][0]) for i in range(n))
               for s in itertools.permutations(range(n)))
    assert d == pytest.approx(best, abs=1e-9)


@settings(max_examples=40)
@given(ints, ints)
def test_point_distance_is_abs(a, b):
    d = point_distance(coerce_point([a], 3), coerce_point([b], 3))
    assert d == (0 if a == b else Fraction(1, 3) ** _v3(a - b))


def _v3(n):
    v = 0
    while n % 3 == 0:
        n //= 3
        v += 1
    return v


def test_space_points():
    s = PointSpace.padic(5, 2)
    x = s.point([PAdicNumber.parse("5:0:1"), PAdicNumber.parse("5:1:2")])
    assert x[1].to_fraction() == 10
    assert Ball(s.origin(), 0) is not None
    assert PointSpace.real(2).point([1, 2]) == (1.0, 2.0)
