import math

import numpy as np
import pytest

from confspace.config import FiniteConfig
from confspace.local_field import Ball, coerce_point
from confspace.measure import Haar, Lebesgue
from confspace.poisson import (
    PoissonLaw, change_of_variables_check, circ_sample, consistency_check, count_law_affinity,
    count_probability, count_samples, poisson_goodness_of_fit, poisson_sample, rho_poisson,
    scaling_singularity_evidence, spawn_generators, spherical_function, superpose,
)
from confspace.space import Box
from confspace.transform import Identity, build_ball_permutation, build_piecewise_affine

LEB = Lebesgue()
UNIT = Ball(coerce_point([0], 3), 0)
STRETCH = build_piecewise_affine([0, 1, 3], [0, 2, 3])
# exp(∫(ρ^½ - 1) dm) with ρ = 1/2 on (0,2) and 2 on (2,3)
U_STRETCH = math.exp(2 * math.sqrt(2) - 3)


def test_zero_mass_gives_empty():
    law = PoissonLaw(LEB, Box.interval(0, 1), 0.0)
    rng = np.random.default_rng(0)
    assert all(len(poisson_sample(law, rng)) == 0 for _ in range(100))


def test_count_mean_and_variance():
    law = PoissonLaw(LEB, Box.interval(0, 3), 1.5)
    mu, n = law.mass, 10**5
    c = count_samples(law, [Box.interval(0, 3)], spawn_generators(1)[0], n)[:, 0]
    assert abs(c.mean() - mu) <= 3 * math.sqrt(mu / n)
    assert abs(c.var(ddof=1) - mu) <= 3 * math.sqrt((mu + 2 * mu * mu) / n)


def test_count_probability_examples():
    w = Box.interval(0, 4)
    law = PoissonLaw(LEB, w)
    assert count_probability(PoissonLaw(LEB, w, 0.0), [w], [0]) == 1
    assert count_probability(law, [Box.interval(0, 2)], [3]) == pytest.approx(
        8 * math.exp(-2) / 6, rel=1e-15)
    assert count_probability(law, [Box.interval(0, 1), Box.interval(2, 3)], [0, 1]) == \
        pytest.approx(math.exp(-2), rel=1e-15)
    with pytest.raises(ValueError):
        count_probability(law, [Box.interval(0, 2), Box.interval(1, 3)], [0, 0])


def test_consistency_lebesgue():
    law = PoissonLaw(LEB, Box.interval(-2, 2))
    rep = consistency_check(law, Box.interval(-1, 1), 20000, 3)
    assert rep.inner_mass == 2
    assert rep.passed


def test_consistency_same_window():
    law = PoissonLaw(LEB, Box.interval(-1, 1))
    assert consistency_check(law, Box.interval(-1, 1), 5000, 4).restricted_gof_p > 1e-3


def test_superpose():
    w = Box.interval(0, 2)
    law = PoissonLaw(LEB, w, 1.0)
    assert superpose(law, PoissonLaw(LEB, w, 0.0)) is law
    both = superpose(law, PoissonLaw(Lebesgue.uniform(w), w, 3.0))
    assert both.mass == pytest.approx(5.0)
    rng = np.random.default_rng(5)
    counts = np.array([len(poisson_sample(both, rng)) for _ in range(20000)])
    assert poisson_goodness_of_fit(counts, 5.0) > 1e-3


def test_zero_circ_is_poisson():
    law = PoissonLaw(LEB, Box.interval(0, 2))
    rng = np.random.default_rng(6)
    counts = np.array([len(circ_sample(0, law, rng)) for _ in range(20000)])
    assert poisson_goodness_of_fit(counts, 2.0) > 1e-3
    assert len(circ_sample(3, law, rng)) >= 3


def test_rho_poisson():
    law = PoissonLaw(LEB, Box.interval(-1, 4))
    assert rho_poisson(law, STRETCH, FiniteConfig.empty()) == 1
    assert rho_poisson(law, STRETCH, FiniteConfig([(0.5,)])) == pytest.approx(0.5)
    assert rho_poisson(law, STRETCH, FiniteConfig([(0.5,), (2.5,), (-0.5,)])) == \
        pytest.approx(1.0)
    haar = PoissonLaw(Haar.uniform(UNIT), UNIT, 5.0)
    swap = build_ball_permutation([Ball(coerce_point([1], 3), 1),
                                   Ball(coerce_point([2], 3), 1)], [1, 0])
    rng = np.random.default_rng(7)
    for _ in range(200):
        assert rho_poisson(haar, swap, poisson_sample(haar, rng)) == 1


def test_spherical_function_examples():
    law = PoissonLaw(LEB, Box.interval(-1, 4))
    assert spherical_function(law, Identity()).value == 1
    assert spherical_function(law, STRETCH).value == pytest.approx(U_STRETCH, abs=1e-9)
    mc = spherical_function(law, STRETCH, "monte_carlo", 20000, 8)
    assert abs(mc.value - U_STRETCH) <= 3 * mc.stderr
    haar = PoissonLaw(Haar.uniform(UNIT), UNIT, 2.0)
    swap = build_ball_permutation([Ball(coerce_point([0], 3), 1),
                                   Ball(coerce_point([1], 3), 1)], [1, 0])
    assert spherical_function(haar, swap).value == 1


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scaling_law(lam):
    law = PoissonLaw(LEB, Box.interval(-1, 4))
    u = spherical_function(law, STRETCH).value
    assert abs(spherical_function(law.scaled(lam), STRETCH).value - u**lam) <= 1e-6


def test_change_of_variables():
    law = PoissonLaw(LEB, Box.interval(-1, 4))
    region = Box.interval(0.5, 2.5)
    d, se, z = change_of_variables_check(law, STRETCH, lambda g: sum(x in region for x in g),
                                         20000, 9)
    assert abs(z) <= 3


def test_support_outside_window_rejected():
    law = PoissonLaw(LEB, Box.interval(0, 2))
    with pytest.raises(ValueError):
        spherical_function(law, STRETCH)


def test_scaling_evidence_equal_intensities():
    wins = [Box.interval(-n, n) for n in range(1, 6)]
    rep = scaling_singularity_evidence(LEB, wins, 1.0, 1.0, 200, 1)
    assert all(lv.affinity == pytest.approx(1.0) for lv in rep.levels)


def test_scaling_evidence_one_vs_two():
    wins = [Box.interval(-n / 2, n / 2) for n in range(1, 41)]
    rep = scaling_singularity_evidence(LEB, wins, 1.0, 2.0, 500, 2)
    aff = [lv.affinity for lv in rep.levels]
    assert [lv.base_mass for lv in rep.levels] == list(range(1, 41))
    # Poisson(n) vs Poisson(2n): affinity exp(-n (sqrt 2 - 1)^2 / 2)
    ratio = math.exp(-(math.sqrt(2) - 1) ** 2 / 2)
    for n, a in enumerate(aff, 1):
        assert a == pytest.approx(ratio**n, rel=1e-9)
        assert a == pytest.approx(count_law_affinity(n, 2 * n), rel=1e-12)
    assert rep.verdict == "SINGULAR"
