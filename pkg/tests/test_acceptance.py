"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line (collected in the terminal
summary) before asserting, with the tolerances and runtime budgets pinned
here.  Suites are driven through the same compile/run path as the CLI, at
the sizes the criteria require.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import norm

from confspace.cli import main
from confspace.local_field import Ball, coerce_point
from confspace.measure import GaussianProduct, Haar, gaussian_shift_factor, rho_factor
from confspace.suites import ExperimentSpec, compile_spec, run_suite
from confspace.transform import random_ball_permutation

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"


def load(name: str, samples: int | None = None, **params) -> dict:
    doc = json.loads((EXPERIMENTS / f"{name}.json").read_text())
    if samples is not None:
        doc["samples"] = samples
    doc["params"] = {**doc.get("params", {}), **params}
    return doc


def run(doc: dict):
    exp = compile_spec(ExperimentSpec.model_validate(doc))
    t0 = time.perf_counter()
    res = run_suite(exp)
    return res, time.perf_counter() - t0


def checks(res, prefix: str) -> list:
    return [c for c in res.checks if c.name.startswith(prefix)]


@pytest.fixture(scope="module")
def spherical():
    return run(load("spherical"))


def test_c01_ultrametric(criterion):
    res, secs = run(load("metrics_padic", triples=10**5, oracle_pairs=0))
    rows = {c.name: c for c in checks(res, "strong_inequality")}
    names = {"strong_inequality[padic_abs]", "strong_inequality[delta_metric]",
             "strong_inequality[matching_metric]"}
    exact = set(rows) == names and all(c.value == 0 and "100000 triples" in c.detail
                                       for c in rows.values())
    ok = criterion(1, "strong triangle inequality, 1e5 triples per metric", exact and secs < 30,
                   f"violations {[c.value for c in rows.values()]}, {secs:.1f} s of 30 s")
    assert ok


def test_c02_assignment_oracle(criterion):
    res, secs = run(load("metrics_padic", triples=1, oracle_pairs=1000, oracle_max_n=7))
    rows = checks(res, "assignment_oracle")
    exact = len(rows) == 2 and all(c.value == 0 for c in rows)
    ok = criterion(2, "matching metric equals brute force, n <= 7, sum and max",
                   exact and secs < 60,
                   f"mismatches {[c.value for c in rows]}, {secs:.1f} s of 60 s")
    assert ok


def test_c03_poisson_identity(criterion):
    doc = load("poisson_identity", samples=10**5)
    doc["params"] = {"regions": doc["params"]["regions"]}
    res, secs = run(doc)
    exact = checks(res, "exact_value")
    events = checks(res, "joint_event")
    good = len(doc["params"]["regions"]) == 3 and len(exact) == 2 and events and \
        all(c.passed for c in exact + events)
    worst = max(abs(float(c.detail.split("=")[1])) for c in events)
    ok = criterion(3, "joint count frequencies over 3 regions within 3 sigma",
                   good and secs < 60, f"{len(events)} events, worst |z| {worst:.2f}, "
                                       f"{secs:.1f} s of 60 s")
    assert ok


def test_c04_consistency(criterion):
    res, secs = run(load("consistency", top=12))
    rows = checks(res, "restriction")
    good = rows and all(c.passed and c.value > 1e-3 for c in rows)
    ok = criterion(4, "restricted law matches inner law, chi-square p > 1e-3",
                   good and secs < 60,
                   f"p-values {[round(c.value, 4) for c in rows]}, {secs:.1f} s of 60 s")
    assert ok


def test_c05_superposition(criterion):
    doc = load("poisson_identity", samples=10**5)
    doc["params"] = {"regions": doc["params"]["regions"][:1], "superpose_intensity": 1.5,
                     "events": [[0]]}
    res, secs = run(doc)
    rows = checks(res, "superposition") + checks(res, "superpose_mass")
    good = len(rows) == 3 and all(c.passed for c in rows)
    ok = criterion(5, "union-of-samples counts match Poisson(m1 + m2) within 3 sigma",
                   good and secs < 30, f"{secs:.1f} s of 30 s")
    assert ok


def test_c06_ball_permutations_preserve_haar(criterion):
    window = Ball(coerce_point([0], 3), 0)
    haar = Haar.uniform(window)
    rng = np.random.default_rng(6)
    bad = total = 0
    for _ in range(20):
        psi = random_ball_permutation(rng, window, int(rng.integers(1, 4)),
                                      int(rng.integers(2, 4)))
        for x in haar.sample(rng, window, 500):
            r = rho_factor(haar, psi, x)
            total += 1
            bad += not (r == 1 and not isinstance(r, float))
    ok = criterion(6, "rho == 1 exactly for random p-adic ball permutations",
                   bad == 0 and total == 10**4, f"{bad} of {total} points off")
    assert ok


SETTINGS = [(0.5, 1.0), (-0.3, 2.0), (1.0, 3.0), (0.2, 0.5), (-0.8, 4.0)]


def _histogram_deviation(z: float, lam: float, n: int = 10**6, bins: int = 10) -> float:
    """Worst relative gap between shifted/unshifted bin frequencies and the factor."""
    rng = np.random.default_rng([7, int(1000 * lam), int(1000 * abs(z))])
    base = GaussianProduct((lam,))
    sd = float(base.sd[0])
    a = base.sample_array(rng, None, n)[:, 0]
    b = GaussianProduct((lam,), (z,)).sample_array(rng, None, n)[:, 0]
    # equal-mass bins over the central 95% of the unshifted law
    edges = sd * norm.ppf(np.linspace(0.025, 0.975, bins + 1))
    ca, _ = np.histogram(a, edges)
    cb, _ = np.histogram(b, edges)
    worst = 0.0
    for i, (lo, hi) in enumerate(zip(edges, edges[1:])):
        t = lo + (np.arange(400) + 0.5) * (hi - lo) / 400
        w = base.density_array(t[:, None])
        f = np.array([gaussian_shift_factor([z], [x], [lam]) for x in t])
        want = float((f * w).sum() / w.sum())
        worst = max(worst, abs(cb[i] / ca[i] / want - 1))
    return worst


def test_c07_gaussian_factor(criterion):
    devs = [_histogram_deviation(z, lam) for z, lam in SETTINGS]
    exact = gaussian_shift_factor([1.0], [0.0], [1.0]) == math.exp(-1)
    ok = criterion(7, "Gaussian shift factor vs density ratios within 5%, exp(-1) exact",
                   max(devs) < 0.05 and exact,
                   f"worst deviation {max(devs):.4f}, exp(-1) exact: {exact}")
    assert ok


def test_c08_kakutani(criterion):
    res, secs = run(load("kakutani"))
    rows = checks(res, "classify")
    undecided = checks(res, "no_undecided")[0].value
    good = len(rows) == 20 and all(c.passed for c in rows) and undecided == 0
    ok = criterion(8, "20 canned sequences classified, none UNDECIDED", good and secs < 60,
                   f"{sum(c.passed for c in rows)}/20 agree, {undecided} undecided, "
                   f"{secs:.1f} s of 60 s")
    assert ok


def test_c09_spherical_function(criterion, spherical):
    res, _ = spherical
    mc = checks(res, "quadrature_vs_mc")
    scale = checks(res, "scaling_law")
    inner = checks(res, "inner_product_vs_u")
    lambdas = {c.name.split("lambda=")[1].rstrip("]") for c in scale}
    good = len(mc) == 5 and len(inner) == 5 and len(scale) == 10 and \
        lambdas == {"0.5", "2"} and all(c.passed for c in mc + scale + inner)
    worst = max(abs(c.value - c.target) for c in scale)
    ok = criterion(9, "quadrature vs Monte Carlo, u^lambda scaling, <U f0, f0> = u",
                   good, f"5 maps, worst scaling deviation {worst:.2e}")
    assert ok


def test_c10_scaling_singularity(criterion, spherical):
    res, secs = spherical
    verdict = checks(res, "scaling_verdict")[0]
    floor = checks(res, "affinity_below_floor")[0]
    witness = checks(res, "witness_separation")[0]
    good = verdict.value == "SINGULAR" and floor.passed and witness.passed and secs < 120
    ok = criterion(10, "count-law affinity < 1e-6 by window mass 40, SINGULAR, witness",
                   good, f"verdict {verdict.value}, affinity at mass 40 {floor.value:.4g}, "
                         f"witness gap {witness.value:.4g} vs {witness.tolerance:.3g}, "
                         f"{secs:.1f} s of 120 s")
    assert ok


def test_c11_representation_algebra(criterion):
    res_p, _ = run(load("representation_padic"))
    res_r, _ = run(load("representation_real"))
    hom_p = checks(res_p, "homomorphism")
    hom_r = checks(res_r, "homomorphism")
    signs = checks(res_p, "sign_twist")
    good = hom_p and hom_r and signs and \
        all(c.passed and c.tolerance == "exact" for c in hom_p) and \
        all(c.passed and c.tolerance == "tol=1e-09" for c in hom_r) and \
        all(c.value == -1 for c in signs)
    ok = criterion(11, "homomorphism and cocycle laws, sign twist -1",
                   good, f"{len(hom_p)} exact p-adic, {len(hom_r)} real at 1e-9, "
                         f"sign twists {[c.value for c in signs]}")
    assert ok


SMALL_RUNS = {
    "metrics_padic": dict(triples=200, oracle_pairs=20),
    "metrics_real": dict(triples=200, oracle_pairs=20),
    "poisson_identity": {},
    "consistency": {},
    "kakutani": dict(sequences=["gauss-shift-k^-0.5", "gauss-shift-geometric"]),
    "spherical": dict(evidence_levels=8, evidence_samples=200, witness_samples=500),
    "representation_padic": dict(ball_permutations=2, ball_points=50, twist_samples=50,
                                 discriminator_samples=200),
    "representation_real": dict(twist_samples=50, discriminator_samples=200),
}


def test_c12_determinism(criterion, tmp_path, capsys):
    same = []
    for name, params in SMALL_RUNS.items():
        doc = load(name, samples=300, **params)
        spec = tmp_path / f"{name}.json"
        spec.write_text(json.dumps(doc))
        outs = []
        for k in range(2):
            out = tmp_path / f"{name}_{k}"
            main(["run", str(spec), "--out", str(out), "--shards", "2"])
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        same.append(outs[0] == outs[1] and "report.json" in outs[0])
    capsys.readouterr()
    ok = criterion(12, "byte-identical reports on re-run", all(same),
                   f"{sum(same)}/{len(same)} suites identical")
    assert ok
