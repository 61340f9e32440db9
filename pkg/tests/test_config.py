from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confspace.config import (
    CollisionError, FiniteConfig, PermutationCocycle, cocycle, count, counting_neighborhood,
    cross_section, restrict, union,
)
from confspace.local_field import Ball, PAdicNumber, coerce_point
from confspace.space import Box, matching_metric
from confspace.transform import Identity, build_ball_permutation, compose

P = PAdicNumber


def pc(*xs, p=3):
    return FiniteConfig(coerce_point([x], p) for x in xs)


def rc(*xs):
    return FiniteConfig((float(x),) for x in xs)


def test_count_examples():
    assert count(FiniteConfig.empty(), Box.interval(0, 2)) == 0
    assert count(rc(0.5, 1.5, 2.5), Box.interval(0, 2)) == 2
    assert count(pc(0, 1, 9), Ball.with_radius((P.zero(3),), Fraction(1, 3))) == 2


def test_set_operations():
    g = rc(0.5, 1.5)
    assert union(g, FiniteConfig.empty()) == g
    assert restrict(g, Box.interval(0, 1)) == rc(0.5)
    h = rc(3, 4, 5)
    assert len(union(g, h)) == len(g) + len(h)
    with pytest.raises(CollisionError):
        union(g, rc(0.5))


def test_configs_are_sets():
    assert rc(2, 5) == rc(5, 2)
    with pytest.raises(CollisionError):
        rc(1, 1)
    assert FiniteConfig.from_json(rc(1, 2).to_json()) == rc(1, 2)


def test_cross_section_examples():
    assert cross_section(rc(5, 2)) == ((2.0,), (5.0,))
    assert cross_section(FiniteConfig.empty()) == ()
    s = cross_section(pc(1, 3))
    assert [x[0].to_fraction() for x in s] == [3, 1]


def _swap01():
    return build_ball_permutation([Ball(coerce_point([0], 3), 1),
                                   Ball(coerce_point([1], 3), 1)], [1, 0])


def test_cocycle_examples():
    g = pc(0, 1)
    assert cocycle(Identity(), g).is_identity
    s = cocycle(_swap01(), g)
    assert s.perm == (1, 0) and s.sign() == -1
    assert str(s) == "(1 2)"


def test_permutation_algebra():
    s = PermutationCocycle((1, 2, 0))
    t = PermutationCocycle((1, 0, 2))
    assert (s * s * s).is_identity
    assert (s * s.inverse()).is_identity
    assert (s * t).sign() == s.sign() * t.sign()
    assert s.act("abc") == ("b", "c", "a")
    with pytest.raises(ValueError):
        PermutationCocycle((0, 0, 1))


def _random_swap(rng):
    depth = int(rng.integers(1, 3))
    kids = [(0,)]
    for _ in range(depth):
        kids = [k + (d,) for k in kids for d in range(3)]
    i, j = rng.choice(len(kids), 2, replace=False)
    centers = []
    for k in (kids[i], kids[j]):
        centers.append(sum(d * 3**n for n, d in enumerate(k[1:])))
    balls = [Ball(coerce_point([c], 3), depth) for c in centers]
    return build_ball_permutation(balls, [1, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_cocycle_law(seed):
    rng = np.random.default_rng(seed)
    psi, phi = _random_swap(rng), _random_swap(rng)
    pts = rng.choice(81, size=4, replace=False).tolist()
    g = pc(*pts)
    both = compose(psi, phi)
    lhs = cocycle(both, g)
    pre = FiniteConfig(psi.apply_inverse(x) for x in g)
    assert lhs == cocycle(psi, g) * cocycle(phi, pre)


def test_counting_neighborhood_example():
    g = pc(0, 1)
    nb = counting_neighborhood(g, 1)
    assert nb.eta == Fraction(1, 3)
    assert all(b.radius == Fraction(1, 81) for b in nb.balls)  # open radius 1/27
    assert nb(g)
    moved = pc(81, 1 + 2 * 81)
    assert nb(moved)
    assert matching_metric(g, moved) < 1
    assert not nb(pc(0, 2))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 3**5), min_size=1, max_size=4, unique=True),
       st.integers(-3, 2), st.integers(0, 10**6))
def test_counting_neighborhood_is_within_eps(pts, k, seed):
    g = pc(*pts)
    eps = Fraction(3) ** k
    nb = counting_neighborhood(g, eps)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        moved = FiniteConfig(b.sample(rng, 1)[0] for b in nb.balls)
        assert nb(moved)
        assert matching_metric(g, moved) < eps
