"""Window-restricted Poisson measures: sampling, count laws, consistency,
superposition, the product quasi-invariance factor and spherical functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats

from .config import CollisionError, FiniteConfig, count, restrict, union
from .kakutani import EQUIVALENT, classify_terms
from .local_field import DEFAULT_PRECISION, Ball, _pad, haar_volume
from .measure import Haar, MeasureModel, SumMeasure, rho_factor, rho_factor_array
from .space import Box, region_contains, regions_disjoint
from .transform import BallPermutation, Composite, Identity, Transformation, Translation

# total-probability tail for truncated count sums
COUNT_TAIL = 1e-12
# how often a colliding configuration is redrawn before giving up
MAX_REDRAWS = 100


def spawn_generators(seed: int, shards: int = 1) -> list[np.random.Generator]:
    """Independent per-shard generators derived from one seed."""
    if shards < 1:
        raise ValueError("shards must be >= 1")
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(shards)]


def split_count(total: int, shards: int) -> list[int]:
    return [total // shards + (i < total % shards) for i in range(shards)]


@dataclass(frozen=True, eq=False)
class PoissonLaw:
    """``P_{K, λm}``: Poisson(λ m(K)) many i.i.d. points of ``m_K / m(K)``."""

    base: MeasureModel
    window: object
    intensity: float = 1.0

    def __post_init__(self):
        if not self.intensity >= 0:
            raise ValueError("intensity must be nonnegative")
        m = float(self.base.mass(self.window))
        if not math.isfinite(m):
            raise ValueError("the window must have finite mass")
        object.__setattr__(self, "_base_mass", m)

    @property
    def base_mass(self) -> float:
        return self._base_mass

    @property
    def mass(self) -> float:
        return self.intensity * self._base_mass

    def region_mass(self, region) -> float:
        return self.intensity * float(self.base.mass(region))

    def scaled(self, factor: float) -> PoissonLaw:
        return PoissonLaw(self.base, self.window, self.intensity * factor)

    def with_window(self, window) -> PoissonLaw:
        return PoissonLaw(self.base, window, self.intensity)


def _draw_points(law: PoissonLaw, rng: np.random.Generator, n: int) -> list[tuple]:
    return law.base.sample(rng, law.window, n)


def poisson_sample(law: PoissonLaw, rng: np.random.Generator) -> FiniteConfig:
    """One configuration of ``law``; a colliding draw is redrawn."""
    mean = law.mass
    if mean == 0:
        return FiniteConfig.empty()
    for _ in range(MAX_REDRAWS):
        n = int(rng.poisson(mean))
        try:
            return FiniteConfig(_draw_points(law, rng, n))
        except CollisionError:
            continue
    raise CollisionError("repeated collisions; the base measure looks atomic")


def poisson_samples(law: PoissonLaw, rng: np.random.Generator, size: int) -> list[FiniteConfig]:
    return [poisson_sample(law, rng) for _ in range(size)]


def sample_point_arrays(law: PoissonLaw, rng: np.random.Generator, size: int
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised draw of ``size`` real configurations.

    Returns ``(counts, points)`` with the points of configuration ``i`` at
    rows ``offsets[i]:offsets[i+1]`` where ``offsets = cumsum([0, *counts])``.
    """
    if law.base.is_padic:
        raise TypeError("array sampling is for real base spaces")
    counts = rng.poisson(law.mass, size=size)
    total = int(counts.sum())
    pts = law.base.sample_array(rng, law.window, total) if total else \
        np.empty((0, law.base.dim))
    return counts, pts


def count_samples(law: PoissonLaw, regions: Sequence, rng: np.random.Generator,
                  size: int) -> np.ndarray:
    """Counts ``N_{B_i}`` of ``size`` sampled configurations, shape ``(size, l)``."""
    if law.base.is_padic:
        out = np.zeros((size, len(regions)), dtype=np.int64)
        for s in range(size):
            g = poisson_sample(law, rng)
            out[s] = [count(g, r) for r in regions]
        return out
    counts, pts = sample_point_arrays(law, rng, size)
    owner = np.repeat(np.arange(size), counts)
    out = np.empty((size, len(regions)), dtype=np.int64)
    for i, r in enumerate(regions):
        inside = r.contains_array(pts) if len(pts) else np.zeros(0, bool)
        out[:, i] = np.bincount(owner[inside], minlength=size)
    return out


# --------------------------------------------------------------------------
# exact count law
# --------------------------------------------------------------------------

def poisson_pmf(mean: float, n: int) -> float:
    if mean == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mean) - mean - math.lgamma(n + 1))


def count_cutoff(mean: float, tail: float = COUNT_TAIL) -> int:
    """Smallest ``N`` with ``P(Poisson(mean) > N) < tail``."""
    n = int(mean)
    while stats.poisson.sf(n, mean) >= tail:
        n += 1
    return n


def _check_regions(law: PoissonLaw, regions: Sequence) -> None:
    if not regions_disjoint(list(regions)):
        raise ValueError("regions overlap")
    for r in regions:
        if not region_contains(law.window, r):
            raise ValueError("region is not inside the window")


def count_probability(law: PoissonLaw, regions: Sequence, counts: Sequence[int]) -> float:
    """``prod_i m(B_i)^{n_i} exp(-m(B_i)) / n_i!`` for disjoint ``B_i``."""
    if len(regions) != len(counts):
        raise ValueError("one count per region")
    _check_regions(law, regions)
    return math.prod(poisson_pmf(law.region_mass(r), int(n)) for r, n in zip(regions, counts))


# --------------------------------------------------------------------------
# consistency across nested windows
# --------------------------------------------------------------------------

def _pooled_chisquare(observed: np.ndarray, expected: np.ndarray) -> tuple[float, int]:
    """Chi-square after merging adjacent bins until each expects >= 5."""
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= 5:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp:
            obs[-1] += o_acc
            exp[-1] += e_acc
        else:
            obs.append(o_acc)
            exp.append(e_acc)
    obs, exp = np.array(obs), np.array(exp)
    dof = len(obs) - 1
    if dof < 1:
        return 0.0, 0
    return float(((obs - exp) ** 2 / exp).sum()), dof


def count_histogram(counts: np.ndarray, top: int = 12) -> np.ndarray:
    """Frequencies of counts ``0..top-1`` and ``>= top``."""
    return np.bincount(np.minimum(counts, top), minlength=top + 1)[: top + 1].astype(float)


def poisson_goodness_of_fit(counts: np.ndarray, mean: float, top: int = 12) -> float:
    """Chi-square p-value of observed counts against Poisson(mean) on 0..top."""
    obs = count_histogram(counts, top)
    probs = np.array([poisson_pmf(mean, n) for n in range(top)])
    probs = np.append(probs, max(0.0, 1.0 - probs.sum()))
    chi, dof = _pooled_chisquare(obs, probs * len(counts))
    return 1.0 if dof == 0 else float(stats.chi2.sf(chi, dof))


def two_sample_count_test(a: np.ndarray, b: np.ndarray, top: int = 12) -> float:
    """Chi-square homogeneity p-value of two count samples on 0..top."""
    ha, hb = count_histogram(a, top), count_histogram(b, top)
    keep = (ha + hb) > 0
    table = np.vstack([ha[keep], hb[keep]])
    if table.shape[1] < 2:
        return 1.0
    return float(stats.chi2_contingency(table, correction=False)[1])


def _pair_distances(configs: Sequence[FiniteConfig]) -> np.ndarray:
    from .space import point_distance
    out = []
    for g in configs:
        pts = g.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                out.append(float(point_distance(pts[i], pts[j])))
    return np.asarray(out)


@dataclass(frozen=True)
class ConsistencyReport:
    inner_mass: float
    restricted_gof_p: float
    direct_gof_p: float
    two_sample_p: float
    distance_p: float
    covariance: float
    covariance_z: float
    alpha: float = 1e-3

    @property
    def passed(self) -> bool:
        return min(self.restricted_gof_p, self.two_sample_p, self.distance_p) > self.alpha \
            and abs(self.covariance_z) < 3.0

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["passed"] = self.passed
        return d


def consistency_check(law: PoissonLaw, inner_window, samples: int, seed: int,
                      shards: int = 1, top: int = 12) -> ConsistencyReport:
    """Compare the outer law restricted to ``inner_window`` with the inner law.

    Count laws are compared by chi-square on ``0..top`` (against the exact
    Poisson law and two-sample), pairwise distances by a two-sample KS test
    (real) or a chi-square on distance exponents (p-adic).  Independence of
    counts inside and outside the inner window is checked by their
    covariance.
    """
    if not region_contains(law.window, inner_window):
        raise ValueError("inner window must lie inside the outer window")
    inner_law = law.with_window(inner_window)
    gens = spawn_generators(seed, shards)
    sizes = split_count(samples, shards)
    in_counts, out_counts, direct_counts = [], [], []
    restricted_cfgs, direct_cfgs = [], []
    keep_cfgs = min(samples, 4000)
    for rng, n in zip(gens, sizes):
        if law.base.is_padic:
            for _ in range(n):
                g = poisson_sample(law, rng)
                r = restrict(g, inner_window)
                in_counts.append(len(r))
                out_counts.append(len(g) - len(r))
                if len(restricted_cfgs) < keep_cfgs:
                    restricted_cfgs.append(r)
            for _ in range(n):
                h = poisson_sample(inner_law, rng)
                direct_counts.append(len(h))
                if len(direct_cfgs) < keep_cfgs:
                    direct_cfgs.append(h)
        else:
            counts, pts = sample_point_arrays(law, rng, n)
            owner = np.repeat(np.arange(n), counts)
            inside = inner_window.contains_array(pts) if len(pts) else np.zeros(0, bool)
            ci = np.bincount(owner[inside], minlength=n)
            in_counts.extend(ci.tolist())
            out_counts.extend((counts - ci).tolist())
            offs = np.concatenate([[0], np.cumsum(counts)])
            for i in range(min(n, keep_cfgs - len(restricted_cfgs))):
                sel = pts[offs[i]:offs[i + 1]]
                sel = sel[inner_window.contains_array(sel)] if len(sel) else sel
                restricted_cfgs.append(FiniteConfig._trusted([tuple(r) for r in sel.tolist()]))
            dcounts, dpts = sample_point_arrays(inner_law, rng, n)
            direct_counts.extend(dcounts.tolist())
            doffs = np.concatenate([[0], np.cumsum(dcounts)])
            for i in range(min(n, keep_cfgs - len(direct_cfgs))):
                direct_cfgs.append(FiniteConfig._trusted(
                    [tuple(r) for r in dpts[doffs[i]:doffs[i + 1]].tolist()]))
    in_counts = np.asarray(in_counts)
    out_counts = np.asarray(out_counts)
    direct_counts = np.asarray(direct_counts)
    mean = inner_law.mass
    p_restricted = poisson_goodness_of_fit(in_counts, mean, top)
    p_direct = poisson_goodness_of_fit(direct_counts, mean, top)
    p_two = two_sample_count_test(in_counts, direct_counts, top)

    da, db = _pair_distances(restricted_cfgs), _pair_distances(direct_cfgs)
    if len(da) < 2 or len(db) < 2:
        p_dist = 1.0
    elif law.base.is_padic:
        ea = np.round(-np.log(da) / math.log(law.base.prime)).astype(int)
        eb = np.round(-np.log(db) / math.log(law.base.prime)).astype(int)
        vals = np.union1d(ea, eb)
        table = np.vstack([[np.sum(ea == v) for v in vals], [np.sum(eb == v) for v in vals]])
        p_dist = 1.0 if table.shape[1] < 2 else float(stats.chi2_contingency(table, correction=False)[1])
    else:
        p_dist = float(stats.ks_2samp(da, db).pvalue)

    a = in_counts - in_counts.mean()
    b = out_counts - out_counts.mean()
    prod = a * b
    cov = float(prod.mean())
    se = float(prod.std(ddof=1)) / math.sqrt(len(prod)) if len(prod) > 1 else math.inf
    z = cov / se if se > 0 else 0.0
    return ConsistencyReport(mean, p_restricted, p_direct, p_two, p_dist, cov, z)


# --------------------------------------------------------------------------
# superposition and fixed-count laws
# --------------------------------------------------------------------------

def superpose(law1: PoissonLaw, law2: PoissonLaw) -> PoissonLaw:
    """The Poisson law with base ``λ1 m1 + λ2 m2`` on the shared window."""
    if law1.window != law2.window:
        raise ValueError("laws live on different windows")
    if law2.mass == 0:
        return law1
    if law1.mass == 0:
        return law2
    base = SumMeasure((law1.base, law2.base), (law1.intensity, law2.intensity))
    return PoissonLaw(base, law1.window, 1.0)


def convolve_samples(g1: FiniteConfig, g2: FiniteConfig) -> FiniteConfig:
    """``(γ1, γ2) ↦ γ1 ∪ γ2``."""
    return union(g1, g2)


@dataclass(frozen=True, eq=False)
class FixedCountLaw:
    """``m_n``: ``n`` i.i.d. points of ``m_K / m(K)``."""

    base: MeasureModel
    window: object
    n: int

    def sample(self, rng: np.random.Generator) -> FiniteConfig:
        for _ in range(MAX_REDRAWS):
            try:
                return FiniteConfig(self.base.sample(rng, self.window, self.n)) if self.n \
                    else FiniteConfig.empty()
            except CollisionError:
                continue
        raise CollisionError("repeated collisions; the base measure looks atomic")


def circ_sample(n: int, law: PoissonLaw, rng: np.random.Generator) -> FiniteConfig:
    """A draw of ``n ∘ P = P * m_n``: a Poisson sample plus ``n`` extra points."""
    extra = FixedCountLaw(law.base, law.window, n)
    for _ in range(MAX_REDRAWS):
        try:
            return convolve_samples(poisson_sample(law, rng), extra.sample(rng))
        except CollisionError:
            continue
    raise CollisionError("repeated collisions; the base measure looks atomic")


# --------------------------------------------------------------------------
# quasi-invariance factor and spherical function
# --------------------------------------------------------------------------

def _check_support(law: PoissonLaw, psi: Transformation) -> tuple:
    sup = psi.support
    if sup is None:
        raise ValueError("transformation is not compactly supported")
    win = law.window
    for r in sup:
        if isinstance(r, Box) and isinstance(win, Box):
            # axis maps report slabs; only the moving axis has finite bounds
            for i in range(r.dim):
                bounded = math.isfinite(r.lower[i]) or math.isfinite(r.upper[i])
                if bounded and (r.lower[i] < win.lower[i] or r.upper[i] > win.upper[i]):
                    raise ValueError("transformation support exceeds the window")
        elif not region_contains(win, r):
            raise ValueError("transformation support exceeds the window")
    return tuple(sup)


def rho_poisson(law: PoissonLaw, psi: Transformation, g: FiniteConfig):
    """``prod_{x in γ} ρ_m(ψ, x)``; 1 on the empty configuration."""
    out = 1
    for x in g:
        out = out * rho_factor(law.base, psi, x)
    return out


@dataclass(frozen=True)
class SphericalEstimate:
    value: float
    stderr: float
    mode: str
    samples: int = 0

    def to_json(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "mode": self.mode,
                "samples": self.samples}


def transformation_breakpoints(psi: Transformation) -> tuple:
    if isinstance(psi, Composite):
        inner = transformation_breakpoints(psi.inner)
        return tuple(transformation_breakpoints(psi.outer)) + \
            tuple(psi.outer.apply((t,))[0] for t in inner)
    return tuple(getattr(psi, "breakpoints", ()))


def _real_log_integral(law: PoissonLaw, psi: Transformation, support) -> tuple[float, float]:
    m = law.base
    if m.dim != 1:
        raise ValueError("quadrature mode is implemented for one-dimensional real bases")
    lo = min(r.lower[0] for r in support)
    hi = max(r.upper[0] for r in support)
    win = law.window
    if win is not None:
        lo, hi = max(lo, win.lower[0]), min(hi, win.upper[0])
    bps = sorted({t for t in transformation_breakpoints(psi) + tuple(m.breakpoints())
                  if lo < t < hi})

    def integrand(t: float) -> float:
        d = m.density1d(t)
        if d == 0:
            return 0.0
        r = float(rho_factor(m, psi, (t,)))
        return (math.sqrt(r) - 1.0) * d

    cuts = [lo, *bps, hi]
    vals, err = [], 0.0
    for a, b in zip(cuts, cuts[1:]):
        v, e = integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-12, limit=400)
        vals.append(v)
        err += e
    return math.fsum(vals), err


def _ball_image(psi: Transformation, b: Ball) -> Ball | None:
    """``ψ⁻¹(b)`` when the isometry maps ``b`` onto a ball.

    Centers are computed without truncation so that refinement below the
    space's working precision stays exact.
    """
    if isinstance(psi, Identity):
        return b
    prec = b.j + DEFAULT_PRECISION
    if isinstance(psi, Translation):
        return Ball(tuple(_pad(c, prec) - _pad(z, prec) for c, z in zip(b.center, psi.shift)),
                    b.j, prime=b.prime)
    if isinstance(psi, BallPermutation):
        for i, big in enumerate(psi.balls):
            if big.contains_ball(b):
                src = psi.balls[psi.perm.index(i)]
                return Ball(tuple(_pad(c, prec) - _pad(u, prec) + _pad(w, prec)
                                  for c, u, w in zip(b.center, big.center, src.center)),
                            b.j, prime=b.prime)
        if not any(big.intersects(b) for big in psi.balls):
            return b
        return None
    if isinstance(psi, Composite):
        a = _ball_image(psi.outer, b)
        return None if a is None else _ball_image(psi.inner, a)
    return None


def _padic_log_integral(law: PoissonLaw, psi: Transformation, support) -> tuple[float, float]:
    m = law.base
    if not psi.is_isometry:
        raise ValueError("p-adic quadrature needs an isometry")
    if isinstance(m, Haar) and m.support is None:
        return 0.0, 0.0  # ρ ≡ 1
    floor = 1e-22
    bound = m.density_bound()
    vals, err = [], 0.0
    stack = list(support)
    while stack:
        b = stack.pop()
        pre = _ball_image(psi, b)
        f = m.density_on_ball(b)
        g = m.density_on_ball(pre) if pre is not None else None
        vol = float(haar_volume(b))
        if f is not None and g is not None:
            if f:
                vals.append((math.sqrt(float(g) / float(f)) - 1.0) * float(f) * vol)
            elif g:
                raise ValueError("density vanishes where the image carries mass")
            continue
        if vol * bound < floor:
            err += 2 * vol * bound
            continue
        stack.extend(b.children())
    return math.fsum(vals), err


def spherical_function(law: PoissonLaw, psi: Transformation, mode: str = "quadrature",
                       samples: int = 20000, seed: int = 0, shards: int = 1) -> SphericalEstimate:
    """``u_{λm}(ψ) = exp(λ ∫ (ρ^{1/2} - 1) dm)``.

    ``quadrature`` integrates over the support of ψ; ``monte_carlo``
    averages ``prod_{x in γ} ρ^{1/2}(ψ, x)`` over sampled configurations.
    """
    support = _check_support(law, psi)
    if isinstance(psi, Identity) or not support:
        return SphericalEstimate(1.0, 0.0, mode, 0)
    if mode == "quadrature":
        if law.base.is_padic:
            v, e = _padic_log_integral(law, psi, support)
        else:
            v, e = _real_log_integral(law, psi, support)
        u = math.exp(law.intensity * v)
        return SphericalEstimate(u, u * law.intensity * e, mode, 0)
    if mode != "monte_carlo":
        raise ValueError(f"unknown mode {mode!r}")
    vals = monte_carlo_products(law, psi, samples, seed, shards)
    se = float(vals.std(ddof=1)) / math.sqrt(len(vals)) if len(vals) > 1 else math.inf
    return SphericalEstimate(float(vals.mean()), se, mode, len(vals))


def monte_carlo_products(law: PoissonLaw, psi: Transformation, samples: int, seed: int,
                         shards: int = 1) -> np.ndarray:
    """``prod_{x in γ} ρ^{1/2}(ψ, x)`` for sampled ``γ``, merged in shard order."""
    out = []
    for rng, n in zip(spawn_generators(seed, shards), split_count(samples, shards)):
        if law.base.is_padic:
            for _ in range(n):
                g = poisson_sample(law, rng)
                out.append(math.sqrt(float(rho_poisson(law, psi, g))))
        else:
            counts, pts = sample_point_arrays(law, rng, n)
            if len(pts):
                logs = 0.5 * np.log(rho_factor_array(law.base, psi, pts))
                owner = np.repeat(np.arange(n), counts)
                out.append(np.exp(np.bincount(owner, weights=logs, minlength=n)))
            else:
                out.append(np.ones(n))
    if law.base.is_padic:
        return np.asarray(out, dtype=float)
    return np.concatenate(out) if out else np.zeros(0)


def change_of_variables_check(law: PoissonLaw, psi: Transformation,
                              f: Callable[[FiniteConfig], float], samples: int,
                              seed: int) -> tuple[float, float, float]:
    """Estimate ``E[f(ψ⁻¹γ) ρ(ψ,γ)] - E[f(γ)]``; returns (difference, stderr, z)."""
    _check_support(law, psi)
    rng = spawn_generators(seed)[0]
    lhs, rhs = [], []
    for _ in range(samples):
        g = poisson_sample(law, rng)
        pre = FiniteConfig(psi.apply_inverse(x) for x in g)
        lhs.append(float(f(pre)) * float(rho_poisson(law, psi, g)))
        rhs.append(float(f(g)))
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    diff = lhs - rhs
    se = float(diff.std(ddof=1)) / math.sqrt(samples)
    d = float(diff.mean())
    return d, se, (d / se if se > 0 else 0.0)


# --------------------------------------------------------------------------
# scaling singularity evidence
# --------------------------------------------------------------------------

def count_law_hellinger_sq(mean1: float, mean2: float) -> float:
    """Squared Hellinger distance of Poisson(mean1) and Poisson(mean2) by summation."""
    if mean1 == mean2:
        return 0.0
    top = count_cutoff(max(mean1, mean2))
    ks = np.arange(top + 1)
    l1 = stats.poisson.logpmf(ks, mean1) if mean1 > 0 else np.where(ks == 0, 0.0, -np.inf)
    l2 = stats.poisson.logpmf(ks, mean2) if mean2 > 0 else np.where(ks == 0, 0.0, -np.inf)
    d = np.exp(0.5 * l1) - np.exp(0.5 * l2)
    return float(0.5 * math.fsum((d * d).tolist()))


def count_law_affinity(mean1: float, mean2: float) -> float:
    return 1.0 - count_law_hellinger_sq(mean1, mean2)


@dataclass(frozen=True)
class LevelEvidence:
    level: int
    base_mass: float
    affinity: float
    affinity_closed_form: float
    llr_mean: float
    llr_var: float
    llr_mean_exact: float
    llr_var_exact: float


@dataclass(frozen=True)
class ScalingReport:
    lambda1: float
    lambda2: float
    levels: tuple
    verdict: str
    rule: str
    final_affinity: float
    affinity_floor: float
    witness: dict | None = None

    @property
    def affinity_below_floor(self) -> bool:
        return self.final_affinity < self.affinity_floor

    def rows(self) -> list[dict]:
        return [dict(vars(lv)) for lv in self.levels]


def scaling_singularity_evidence(base: MeasureModel, windows: Sequence, lambda1: float,
                                 lambda2: float, samples: int, seed: int,
                                 witness: Transformation | None = None,
                                 witness_samples: int = 20000,
                                 affinity_floor: float = 1e-6) -> ScalingReport:
    """Evidence that ``P_{λ1 m}`` and ``P_{λ2 m}`` are mutually singular.

    Along nested windows ``K_n``: the Hellinger affinity of the two count
    laws, and the mean and variance of the count log-likelihood ratio under
    ``P_{λ1 m}`` (both grow linearly in ``m(K_n)``).  Counts on the disjoint
    shells ``K_n minus K_{n-1}`` are independent, so the per-shell affinities
    feed the product-measure dichotomy, which gives the verdict.  An optional
    ``witness`` map compares ``u_{λ1 m}`` and ``u_{λ2 m}`` by Monte Carlo.
    """
    if lambda1 <= 0 or lambda2 <= 0:
        raise ValueError("intensities must be positive")
    masses = [float(base.mass(w)) for w in windows]
    if any(b < a for a, b in zip(masses, masses[1:])):
        raise ValueError("windows must be nested with nondecreasing mass")
    rng = spawn_generators(seed)[0]
    levels = []
    for i, (w, mk) in enumerate(zip(windows, masses), start=1):
        aff = count_law_affinity(lambda1 * mk, lambda2 * mk)
        closed = math.exp(-mk * (math.sqrt(lambda1) - math.sqrt(lambda2)) ** 2 / 2)
        law = PoissonLaw(base, w, lambda1)
        n = count_samples(law, [w], rng, samples)[:, 0] if samples else np.zeros(0)
        if lambda1 == lambda2:
            llr = np.zeros(len(n))
        else:
            llr = n * math.log(lambda1 / lambda2) - (lambda1 - lambda2) * mk
        llr_mean_exact = mk * (lambda1 * math.log(lambda1 / lambda2) - lambda1 + lambda2)
        llr_var_exact = mk * lambda1 * math.log(lambda1 / lambda2) ** 2
        levels.append(LevelEvidence(
            i, mk, aff, closed,
            float(llr.mean()) if len(llr) else math.nan,
            float(llr.var(ddof=1)) if len(llr) > 1 else math.nan,
            llr_mean_exact, llr_var_exact))
    if lambda1 == lambda2:
        verdict, rule = EQUIVALENT, "equal intensities"
    else:
        shells = np.diff([0.0, *masses])
        hsq = [count_law_hellinger_sq(lambda1 * s, lambda2 * s) for s in shells]
        res = classify_terms(hsq)
        verdict, rule = res.verdict, res.rule
    wit = None
    if witness is not None:
        wlaw = PoissonLaw(base, windows[-1], 1.0)
        q = spherical_function(wlaw, witness, "quadrature")
        e1 = spherical_function(wlaw.scaled(lambda1), witness, "monte_carlo",
                                witness_samples, seed + 1)
        e2 = spherical_function(wlaw.scaled(lambda2), witness, "monte_carlo",
                                witness_samples, seed + 2)
        gap = abs(e1.value - e2.value)
        combined = 3 * math.hypot(e1.stderr, e2.stderr)
        wit = {"u_m": q.value, "u_lambda1_exact": q.value ** lambda1,
               "u_lambda2_exact": q.value ** lambda2,
               "u_lambda1_mc": e1.value, "u_lambda1_stderr": e1.stderr,
               "u_lambda2_mc": e2.value, "u_lambda2_stderr": e2.stderr,
               "gap": gap, "combined_3sigma": combined, "separated": gap > combined}
    return ScalingReport(lambda1, lambda2, tuple(levels), verdict, rule,
                         levels[-1].affinity if levels else 1.0, affinity_floor, wit)
