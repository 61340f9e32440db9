import math

import pytest

from confspace.kakutani import (
    canned_sequences, classify_terms, hellinger_affinity, hellinger_distance_sq,
    kakutani_dichotomy,
)
from confspace.local_field import Ball, coerce_point
from confspace.measure import GaussianProduct, Haar, Lebesgue, PAdicGaussian
from confspace.space import Box


def normal(a):
    return GaussianProduct.normal(a, 1.0)


def test_affinity_examples():
    assert hellinger_affinity(normal(0), normal(0)) == pytest.approx(1, abs=1e-12)
    assert hellinger_affinity(normal(0), normal(2)) == pytest.approx(math.exp(-4 / 8), abs=1e-9)
    u1 = Lebesgue.uniform(Box.interval(0, 1))
    u2 = Lebesgue.uniform(Box.interval(2, 3))
    assert hellinger_affinity(u1, u2) == 0


@pytest.mark.parametrize("a", [0.1, 0.7, 1.5, 3.0])
def test_affinity_closed_form_shift(a):
    assert hellinger_affinity(normal(0), normal(a)) == pytest.approx(math.exp(-a * a / 8),
                                                                    abs=1e-9)


def test_distance_and_affinity_agree():
    r = hellinger_distance_sq(normal(0), normal(1))
    assert r.affinity == pytest.approx(1 - r.distance_sq, abs=1e-12)


def test_padic_affinity():
    ball = Ball(coerce_point([0], 3), 0)
    h = Haar.uniform(ball)
    assert hellinger_affinity(h, h) == 1
    g = PAdicGaussian(3, 1.0)
    assert 0 < hellinger_affinity(g, PAdicGaussian(3, 4.0)) < 1
    assert hellinger_affinity(g, g) == pytest.approx(1, abs=1e-12)


def test_dichotomy_examples():
    r = kakutani_dichotomy(lambda k: (normal(0), normal(0)))
    assert r.verdict == "EQUIVALENT" and r.partial_products[-1] == pytest.approx(1)
    assert kakutani_dichotomy(lambda k: (normal(0), normal(2.0**-k))).verdict == "EQUIVALENT"
    assert kakutani_dichotomy(lambda k: (normal(0), normal(k**-0.5))).verdict == "SINGULAR"


def test_classify_terms_rules():
    assert classify_terms([0.0] * 50).verdict == "EQUIVALENT"
    assert classify_terms([0.5] * 50).verdict == "SINGULAR"
    assert classify_terms([0.5 / k for k in range(1, 201)]).verdict == "SINGULAR"
    assert classify_terms([0.5 / k**2 for k in range(1, 201)]).verdict == "EQUIVALENT"


def test_canned_set():
    seqs = canned_sequences()
    assert len(seqs) == 20
    assert {"lambda_k", "eta_k"} <= {s.family for s in seqs}
    assert {s.expected for s in seqs} == {"EQUIVALENT", "SINGULAR"}
