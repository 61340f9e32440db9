import math

import numpy as np
import pytest

from confspace.config import FiniteConfig, PermutationCocycle as S
from confspace.local_field import Ball, coerce_point
from confspace.measure import Haar, Lebesgue
from confspace.poisson import FixedCountLaw, PoissonLaw, poisson_sample
from confspace.rep import (
    DictionaryFunction, RepOperator, SymmetricGroupRep, apply_U, apply_Vq,
    homomorphism_check, mc_inner_product, sign_twist, spherical_discriminator,
    spherical_inner_product, unitarity_check,
)
from confspace.space import Box
from confspace.transform import Identity, build_ball_permutation, build_piecewise_affine

UNIT = Ball(coerce_point([0], 3), 0)
HAAR = PoissonLaw(Haar.uniform(UNIT), UNIT, 4.0)
B0, B1, B2 = (Ball(coerce_point([c], 3), 1) for c in (0, 1, 2))
SWAP01 = build_ball_permutation([B0, B1], [1, 0])
SWAP_DEEP = build_ball_permutation([Ball(coerce_point([2], 3), 2),
                                    Ball(coerce_point([8], 3), 2)], [1, 0])
LEB = PoissonLaw(Lebesgue(), Box.interval(-1, 4))
STRETCH = build_piecewise_affine([0, 1, 3], [0, 2, 3])
FLOW_LIKE = build_piecewise_affine([-1, 0.5, 2], [-1, -0.2, 2])


def pc(*xs):
    return FiniteConfig(coerce_point([x], 3) for x in xs)


def test_apply_U_examples():
    f = DictionaryFunction.count(B0)
    g = pc(1, 4, 9)
    assert apply_U(RepOperator(HAAR, Identity()), f, g) == f(g)
    # the swap moves 1 and 4 into B0
    assert apply_U(RepOperator(HAAR, SWAP01), f, g) == 2
    one = DictionaryFunction.constant(1.0)
    h = FiniteConfig([(0.5,), (2.5,)])
    assert apply_U(RepOperator(LEB, STRETCH), one, h) == pytest.approx(1.0)
    assert apply_U(RepOperator(LEB, STRETCH), one, FiniteConfig([(0.5,)])) == \
        pytest.approx(math.sqrt(0.5))


def test_apply_Vq_examples():
    f = DictionaryFunction.count(B0)
    g = pc(0, 1)
    sign = SymmetricGroupRep(2, "sign")
    assert apply_Vq(RepOperator(HAAR, Identity(), sign), f, g) == f(g)
    pre = FiniteConfig(SWAP01.apply_inverse(x) for x in g)
    assert apply_Vq(RepOperator(HAAR, SWAP01, sign), f, g) == -f(pre)
    triv = SymmetricGroupRep(2, "trivial")
    h = FiniteConfig([(0.5,), (2.5,)])
    for psi in (STRETCH, FLOW_LIKE):
        assert apply_Vq(RepOperator(LEB, psi, triv), f_real, h) == \
            pytest.approx(apply_U(RepOperator(LEB, psi), f_real, h))


def f_real(g):
    return sum(x[0] for x in g)


def test_sign_twist():
    assert sign_twist(SWAP01, pc(0, 1)) == -1
    assert sign_twist(SWAP01, pc(0, 2)) == 1


def test_permutation_matrices():
    q = SymmetricGroupRep(3, "permutation_matrices")
    s, t = S((1, 2, 0)), S((1, 0, 2))
    assert np.array_equal(q.matrix(s * t), q.matrix(s) @ q.matrix(t))
    assert int(round(np.linalg.det(q.matrix(s)))) == s.sign()


def test_mc_inner_product_examples():
    one = DictionaryFunction.constant(1.0)
    e = mc_inner_product(one, one, LEB, 1000, 1)
    assert e.value == 1 and e.stderr == 0
    law = PoissonLaw(Lebesgue(), Box.interval(0, 1))
    e = mc_inner_product(DictionaryFunction.count_indicator(Box.interval(0, 1), 0), one,
                         law, 20000, 2)
    assert e.within(math.exp(-1))
    law = PoissonLaw(Lebesgue(), Box.interval(0, 2))
    e = mc_inner_product(DictionaryFunction.count(Box.interval(0, 2)), one, law, 20000, 3)
    assert e.within(2.0)


def _dictionary(region):
    return [DictionaryFunction.constant(1.0), DictionaryFunction.count(region),
            DictionaryFunction.count_indicator(region, 1),
            DictionaryFunction.region_weight(region, 0.5)]


def test_unitarity():
    assert unitarity_check(RepOperator(LEB, Identity()), _dictionary(Box.interval(0, 2)),
                           500, 1).passed
    rep = unitarity_check(RepOperator(HAAR, SWAP01), _dictionary(B0), 500, 2)
    assert rep.passed and rep.verdict == "EXACT"
    rep = unitarity_check(RepOperator(LEB, STRETCH), _dictionary(Box.interval(0.5, 2.5)),
                          20000, 3)
    assert rep.passed


def test_homomorphism():
    d = _dictionary(B0)
    assert homomorphism_check(SWAP01, Identity(), HAAR, d, 300, 4).passed
    assert homomorphism_check(SWAP01, SWAP_DEEP, HAAR, d, 300, 5).passed
    assert homomorphism_check(SWAP_DEEP, SWAP01, HAAR, d, 300, 5).passed
    r = homomorphism_check(STRETCH, FLOW_LIKE, LEB, _dictionary(Box.interval(0, 2)), 300, 6)
    assert r.passed


@pytest.mark.parametrize("kind", ["sign", "permutation_matrices"])
def test_homomorphism_twisted(kind):
    q = SymmetricGroupRep(2, kind)
    law = FixedCountLaw(HAAR.base, UNIT, 2)
    vec = DictionaryFunction.vector(lambda g: np.arange(1, q.dim + 1, dtype=float) *
                                    len(g), q.dim)
    f = vec if kind == "permutation_matrices" else DictionaryFunction.count(B0)
    assert homomorphism_check(SWAP01, SWAP_DEEP, law, [f], 300, 7, q=q).passed
    rlaw = FixedCountLaw(LEB.base, LEB.window, 2)
    rf = DictionaryFunction.vector(lambda g: np.array([x[0] for x in
                                                       sorted(g)][:q.dim]), q.dim) \
        if kind == "permutation_matrices" else DictionaryFunction.constant(1.0)
    assert homomorphism_check(STRETCH, FLOW_LIKE, rlaw, [rf], 300, 8, q=q).passed


def test_spherical_inner_product_padic_exact():
    e = spherical_inner_product(HAAR, SWAP01, 200, 9)
    assert e.value == 1 and e.stderr == 0


def test_discriminator():
    maps = [("stretch", STRETCH)]
    assert spherical_discriminator(LEB, 1.0, 1.0, maps, 500, 1)["verdict"] == \
        "EQUAL_INTENSITIES"
    d = spherical_discriminator(LEB, 1.0, 2.0, maps, 20000, 2)
    assert d["verdict"] == "SEPARATED" and d["witness"] == "stretch"
    c = 2 * math.sqrt(2) - 3
    assert d["estimate"] == pytest.approx(abs(math.exp(c) - math.exp(2 * c)), abs=1e-9)
    d = spherical_discriminator(HAAR, 1.0, 2.0, [("swap", SWAP01)], 200, 3)
    assert d["verdict"] == "NO_WITNESS"


def test_haar_configurations_in_window():
    rng = np.random.default_rng(0)
    g = poisson_sample(HAAR, rng)
    assert all(x in UNIT for x in g)
