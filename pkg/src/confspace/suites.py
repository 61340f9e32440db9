"""Experiment specifications and the six verification suites.

An experiment file is a JSON document validated by :class:`ExperimentSpec`.
Each suite turns a validated spec into a :class:`SuiteResult`: a list of
named checks (asserted or soft), headline verdicts and plot-ready tables.
Suite-specific knobs live under ``params`` and are validated by the
suite's own parameter model.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import FiniteConfig, cross_section
from .kakutani import UNDECIDED, canned_sequences, kakutani_dichotomy
from .local_field import Ball, PAdicNumber, _make, _valuation_int, padic_abs
from .measure import MeasureModel, measure_from_json, rho_factor
from .poisson import (
    PoissonLaw, FixedCountLaw, circ_sample, consistency_check, convolve_samples,
    count_probability, count_samples, poisson_pmf, poisson_sample,
    scaling_singularity_evidence, spawn_generators, spherical_function, split_count,
    superpose,
)
from .rep import (
    DictionaryFunction, RepOperator, SymmetricGroupRep, homomorphism_check,
    sign_twist, spherical_discriminator, spherical_inner_product, unitarity_check,
)
from .space import (
    Box, PointSpace, delta_metric, make_exhaustion, matching_metric, point_distance,
    region_from_json, regions_disjoint,
)
from .transform import Transformation, random_ball_permutation, transformation_from_json

SCHEMA_TAG = "confspace-experiment/1"
SUITES = ("metrics", "poisson_identity", "consistency", "kakutani", "spherical",
          "representation")


class SpecError(ValueError):
    """A semantic problem in an experiment file, anchored at a JSON path."""

    def __init__(self, path: tuple, message: str):
        super().__init__(message)
        self.path = tuple(path)
        self.message = message


# --------------------------------------------------------------------------
# schema
# --------------------------------------------------------------------------

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpaceSpec(_Strict):
    kind: Literal["real", "padic"]
    dim: int = Field(1, ge=1, le=3)
    prime: int | None = Field(None, ge=2)
    absprec: int = Field(24, ge=4, le=64)


class TransformationSpec(_Strict):
    name: str = Field(min_length=1)
    ast: dict[str, Any]


class ExperimentSpec(_Strict):
    """A self-contained, re-runnable experiment description."""

    schema_tag: Literal["confspace-experiment/1"] = Field(alias="schema")
    suite: Literal["metrics", "poisson_identity", "consistency", "kakutani",
                   "spherical", "representation"]
    seed: int = Field(ge=0, description="mandatory; there is no wall-clock seeding")
    space: SpaceSpec
    measure: dict[str, Any] | None = None
    windows: list[dict[str, Any]] = Field(default_factory=list)
    transformations: list[TransformationSpec] = Field(default_factory=list)
    lambdas: list[float] = Field(default_factory=lambda: [1.0, 2.0])
    samples: int = Field(10000, ge=1)
    params: dict[str, Any] = Field(default_factory=dict)


class MetricsParams(_Strict):
    """Metric axioms on random triples and the brute-force assignment oracle."""

    triples: int = Field(2000, ge=1, description="random triples per metric")
    tuple_size: int = Field(3, ge=2, description="points per tuple or configuration")
    oracle_pairs: int = Field(200, ge=0, description="configuration pairs per mode")
    oracle_max_n: int = Field(7, ge=1, le=8, description="largest configuration size")
    digits: int = Field(4, ge=1, description="p-adic digits per random unit")
    valuation_range: int = Field(2, ge=0, description="valuations drawn from [-r, r]")


class PoissonIdentityParams(_Strict):
    """Joint count events over disjoint regions against the product formula."""

    regions: list[dict[str, Any]] = Field(description="disjoint regions inside windows[0]")
    events: list[list[int]] | None = Field(
        None, description="count vectors; default every vector with total <= 2")
    superpose_intensity: float | None = Field(
        None, gt=0, description="second intensity for the superposition check")
    circ_n: int | None = Field(None, ge=1, description="fixed count for the n-circ-P check")


class ConsistencyParams(_Strict):
    """Restriction of the outer-window law to each inner window."""

    top: int = Field(12, ge=1, description="count bins 0..top, the last one pooled")


class KakutaniParams(_Strict):
    """Canned product-measure sequences through the Hellinger dichotomy."""

    cutoff: int = Field(200, ge=8)
    threshold: float = Field(1e-3, gt=0, lt=1)
    sequences: list[str] | None = Field(None, description="subset of canned names")


class SphericalParams(_Strict):
    """Spherical function by quadrature and Monte Carlo, scaling law and evidence."""

    scaling_lambdas: list[float] = Field(default_factory=lambda: [0.5, 2.0])
    scaling_tol: float = Field(1e-6, gt=0)
    mc_floor: float = Field(1e-3, ge=0, description="absolute floor next to 3 sigma")
    evidence: bool = True
    evidence_levels: int = Field(40, ge=2, description="nested windows K_1..K_L")
    evidence_step: float = Field(0.5, gt=0, description="real: K_n = [-n s, n s]^k")
    evidence_samples: int = Field(4000, ge=0, description="count draws per level")
    affinity_floor: float = Field(1e-6, gt=0)
    witness: str | None = Field(None, description="transformation name; default the first")
    witness_samples: int = Field(20000, ge=2)


class DictionaryEntry(_Strict):
    kind: Literal["constant", "count", "count_indicator", "region_weight", "power_sum"]
    value: float = 1.0
    k: int = 0
    degree: int = 1
    region: dict[str, Any] | None = None


class SignTwistSpec(_Strict):
    transformation: str
    config: list[Any]
    expected: int = -1


class RepresentationParams(_Strict):
    """Unitarity, homomorphism, cocycle twisting and the discriminator."""

    dictionary: list[DictionaryEntry] | None = None
    pairs: list[tuple[str, str]] | None = Field(
        None, description="(psi, phi) names; default consecutive transformations")
    twist_kinds: list[Literal["trivial", "sign", "permutation_matrices"]] = Field(
        default_factory=lambda: ["sign", "permutation_matrices"])
    twist_n: int = Field(2, ge=1, description="configuration size for V^q checks")
    twist_samples: int = Field(500, ge=2)
    sign_twists: list[SignTwistSpec] = Field(default_factory=list)
    ball_permutations: int = Field(0, ge=0, description="random p-adic ball swaps to test")
    ball_points: int = Field(500, ge=1, description="Haar points per ball permutation")
    ball_depth: int = Field(2, ge=1)
    discriminator: bool = True
    discriminator_samples: int = Field(5000, ge=2)
    expect_discriminator: Literal["SEPARATED", "NO_WITNESS", "NOT_SEPARATED",
                                  "EQUAL_INTENSITIES"] | None = None


PARAMS = {
    "metrics": MetricsParams,
    "poisson_identity": PoissonIdentityParams,
    "consistency": ConsistencyParams,
    "kakutani": KakutaniParams,
    "spherical": SphericalParams,
    "representation": RepresentationParams,
}

SUITE_DOCS = {
    "metrics": "ultrametric and triangle inequalities for point, delta and matching "
               "metrics; matching metric against brute-force permutation minima",
    "poisson_identity": "joint count frequencies over disjoint regions vs the exact "
                        "product law; optional superposition and n-circ-P checks",
    "consistency": "law of the outer window restricted to each inner window vs the "
                   "inner law (chi-square, two-sample, distances, covariance)",
    "kakutani": "canned product-measure sequences classified EQUIVALENT/SINGULAR; "
                "trajectory CSV of partial products",
    "spherical": "u_m(psi) by quadrature and Monte Carlo, u_{lambda m} = u_m^lambda, "
                 "<U f0, f0>, and scaling singularity evidence with a witness",
    "representation": "unitarity, homomorphism and cocycle checks, sign twists, "
                      "ball-permutation measure preservation, spherical discriminator",
}


def spec_json_schema() -> dict:
    """The experiment schema plus per-suite parameter schemas as one document."""
    return {
        "schema": SCHEMA_TAG,
        "experiment": ExperimentSpec.model_json_schema(by_alias=True),
        "suites": {name: {"doc": SUITE_DOCS[name],
                          "params": PARAMS[name].model_json_schema()}
                   for name in SUITES},
    }


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    soft: bool = False
    value: Any = None
    target: Any = None
    tolerance: Any = None
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "soft": self.soft,
                "value": self.value, "target": self.target, "tolerance": self.tolerance,
                "detail": self.detail}


@dataclass
class SuiteResult:
    checks: list[Check] = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)

    def add(self, *args, **kw) -> Check:
        c = Check(*args, **kw)
        self.checks.append(c)
        return c

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.soft and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures


# --------------------------------------------------------------------------
# compiling a spec into library objects
# --------------------------------------------------------------------------

@dataclass
class Experiment:
    spec: ExperimentSpec
    params: BaseModel
    space: PointSpace
    measure: MeasureModel | None
    windows: list
    transformations: list  # (name, Transformation)

    def named(self, name: str, path: tuple) -> Transformation:
        for n, t in self.transformations:
            if n == name:
                return t
        raise SpecError(path, f"no transformation named {name!r}")

    def require_measure(self) -> MeasureModel:
        if self.measure is None:
            raise SpecError(("suite",), f"suite {self.spec.suite!r} needs a measure")
        return self.measure

    def require_windows(self, k: int) -> list:
        if len(self.windows) < k:
            raise SpecError(("windows",), f"suite {self.spec.suite!r} needs at least "
                                          f"{k} window(s)")
        return self.windows


def _guard(path: tuple, fn: Callable, *args):
    try:
        return fn(*args)
    except SpecError:
        raise
    except (ValueError, KeyError, TypeError, ArithmeticError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise SpecError(path, msg) from exc


def compile_spec(spec: ExperimentSpec) -> Experiment:
    """Build the space, measure, windows and maps; :class:`SpecError` on failure."""
    params = _guard(("params",), PARAMS[spec.suite].model_validate, spec.params)
    s = spec.space
    if s.kind == "padic" and s.prime is None:
        raise SpecError(("space", "kind"), "a p-adic space needs a prime")
    space = _guard(("space",), PointSpace, s.kind, s.dim, s.prime if s.kind == "padic" else None,
                   s.absprec)
    measure = None
    if spec.measure is not None:
        measure = _guard(("measure",), measure_from_json, spec.measure)
        if measure.is_padic != space.is_padic:
            raise SpecError(("measure", "kind"), "measure does not live on the space")
    windows = [_guard(("windows", i), region_from_json, w) for i, w in enumerate(spec.windows)]
    for i, w in enumerate(windows):
        if isinstance(w, Ball) != space.is_padic:
            raise SpecError(("windows", i), "window does not live on the space")
    maps, seen = [], set()
    for i, t in enumerate(spec.transformations):
        if t.name in seen:
            raise SpecError(("transformations", i, "name"), f"duplicate name {t.name!r}")
        seen.add(t.name)
        maps.append((t.name, _guard(("transformations", i, "ast"),
                                    transformation_from_json, t.ast)))
    return Experiment(spec, params, space, measure, windows, maps)


def run_suite(exp: Experiment, shards: int = 1) -> SuiteResult:
    return RUNNERS[exp.spec.suite](exp, shards)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


class _Draws:
    """Random points drawn from pre-generated buffers (much faster than scalar draws)."""

    CHUNK = 4096

    def __init__(self, rng: np.random.Generator, space: PointSpace, digits: int = 4,
                 vrange: int = 2):
        self.rng, self.space = rng, space
        self.digits, self.vrange = digits, vrange
        self._buf: list = []

    def _refill(self) -> None:
        r, n = self.rng, self.CHUNK
        if self.space.is_padic:
            p = self.space.prime
            # a small digit budget makes equal distances, hence ultrametric ties, common
            self._buf = list(zip(r.random(n).tolist(),
                                 r.integers(1, p ** self.digits, n).tolist(),
                                 r.integers(-self.vrange, self.vrange + 1, n).tolist(),
                                 r.integers(0, 4, n).tolist()))
        else:
            self._buf = list(zip(r.normal(size=n).tolist(), r.integers(0, 4, n).tolist()))
        self._buf.reverse()

    def _next(self):
        if not self._buf:
            self._refill()
        return self._buf.pop()

    def coord(self, depth: int = 0):
        """One coordinate; ``depth`` levels smaller than a fresh draw."""
        if self.space.is_padic:
            u, n, v, _ = self._next()
            p = self.space.prime
            if u < 0.05:
                return PAdicNumber.zero(p)
            w = _valuation_int(n, p)
            val = v + depth + w
            prec = self.space.absprec - val
            # built directly in the space's truncated form
            return _make(p, val, (n // p**w) % p**prec, prec)
        g, _ = self._next()
        return g * 10.0 ** (-depth)

    def point(self) -> tuple:
        return tuple(self.coord() for _ in range(self.space.dim))

    def near(self, x: tuple) -> tuple:
        """A perturbation of ``x`` at a random scale (sometimes none)."""
        depth = self._next()[-1]
        if depth == 0:
            return x
        # sums of truncated coordinates stay truncated, so equal values compare equal
        return tuple(c + self.coord(depth) for c in x)

    def tuple_(self, n: int) -> list[tuple]:
        while True:
            pts = [self.point() for _ in range(n)]
            if len(set(pts)) == n:
                return pts

    def near_tuple(self, xs: list[tuple]) -> list[tuple]:
        while True:
            pts = [self.near(x) for x in xs]
            if len(set(pts)) == len(pts):
                return pts


def _z(value: float, target: float, se: float) -> float:
    return (value - target) / se if se > 0 else (0.0 if value == target else math.inf)


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

def _triangle_rows(exp: Experiment, par: MetricsParams) -> list[tuple]:
    space = exp.space
    rows = []
    ultra = space.is_padic
    n = par.tuple_size

    def point_triple(d: _Draws):
        x = d.point()
        return [x, d.near(x), d.near(x)]

    def tuples(d: _Draws):
        # nearby tuples give nontrivial delta values; fresh ones mostly give 1
        x = d.tuple_(n)
        y = d.near_tuple(x)
        return [x, y, d.near_tuple(y if d.coord() != 0 else x)]

    def configs(d: _Draws):
        x, y, z = tuples(d)
        return [FiniteConfig(x), FiniteConfig(y[::-1]), FiniteConfig(z)]

    cases = [("point_distance", point_triple, point_distance),
             ("delta_metric", tuples, delta_metric),
             ("matching_metric", configs, matching_metric)]
    if space.is_padic:
        cases[0] = ("padic_abs", point_triple,
                    lambda x, y: max(padic_abs(a - b) for a, b in zip(x, y)))
    for stream, (name, draw, metric) in enumerate(cases):
        d = _Draws(_rng(exp.spec.seed, 1, stream), space, par.digits, par.valuation_range)
        bad, ties = 0, 0
        for _ in range(par.triples):
            x, y, z = draw(d)
            dxz, dxy, dyz = metric(x, z), metric(x, y), metric(y, z)
            if ultra:
                ok = dxz <= max(dxy, dyz)
                ties += dxy == dyz
            else:
                ok = dxz <= (dxy + dyz) * (1 + 1e-12) + 1e-300
            bad += not ok
        rows.append((name, "strong" if ultra else "triangle", par.triples, bad, ties))
    return rows


def _brute_force(cost: list[list], mode: str):
    n = len(cost)
    best = None
    for perm in itertools.permutations(range(n)):
        entries = [cost[i][perm[i]] for i in range(n)]
        v = math.fsum(entries) if mode == "sum" else max(entries)
        if best is None or v < best:
            best = v
    return best


def oracle_rows(seed: int, pairs: int, max_n: int, prime: int = 3,
                dim: int = 1) -> list[tuple]:
    """Matching metric against an exhaustive permutation search, both modes."""
    rows = []
    for stream, mode in enumerate(("sum", "max")):
        rng = _rng(seed, 2, stream)
        mismatches = 0
        sizes = [0] * (max_n + 1)
        space = PointSpace.real(dim) if mode == "sum" else PointSpace.padic(prime, dim)
        d = _Draws(rng, space)
        for n in rng.integers(1, max_n + 1, pairs).tolist():
            sizes[n] += 1
            a = d.tuple_(n)
            b = d.near_tuple(a) if d.coord() != 0 else d.tuple_(n)
            fast = matching_metric(FiniteConfig(a), FiniteConfig(b))
            cost = [[point_distance(u, v) for v in b] for u in a]
            mismatches += fast != _brute_force(cost, mode)
        rows.append((mode, pairs, max_n, mismatches, " ".join(map(str, sizes[1:]))))
    return rows


def run_metrics(exp: Experiment, shards: int) -> SuiteResult:
    par: MetricsParams = exp.params
    res = SuiteResult()
    tri = _triangle_rows(exp, par)
    for name, kind, count, bad, ties in tri:
        res.add(f"{kind}_inequality[{name}]", bad == 0, value=bad, target=0, tolerance=0,
                detail=f"{count} triples, {ties} ties")
    orc = oracle_rows(exp.spec.seed, par.oracle_pairs, par.oracle_max_n,
                      exp.space.prime or 3, exp.space.dim) if par.oracle_pairs else []
    for mode, count, max_n, bad, sizes in orc:
        res.add(f"assignment_oracle[{mode}]", bad == 0, value=bad, target=0, tolerance=0,
                detail=f"{count} pairs, n <= {max_n}, sizes {sizes}")
    res.verdicts["metric_table"] = "PASS" if res.passed else "FAIL"
    res.tables["metrics"] = (("metric", "inequality", "triples", "violations", "ties"), tri)
    if orc:
        res.tables["assignment_oracle"] = (
            ("mode", "pairs", "max_n", "mismatches", "pairs_per_n"), orc)
    return res


# --------------------------------------------------------------------------
# Poisson identity
# --------------------------------------------------------------------------

def exact_value_checks() -> list[tuple[str, float, float]]:
    """Worked count probabilities on unit-intensity Lebesgue windows."""
    from .measure import Lebesgue
    leb = Lebesgue(1)
    w = Box.interval(0.0, 2.0)
    law = PoissonLaw(leb, w)
    one = count_probability(law, [w], [3])
    two = count_probability(law, [Box.interval(0.0, 1.0), Box.interval(1.0, 2.0)], [0, 1])
    return [("P(N=3), m(B)=2", one, 8 * math.exp(-2) / 6),
            ("P(N1=0,N2=1), m(B1)=m(B2)=1", two, math.exp(-2))]


def _count_draws(law: PoissonLaw, regions: list, seed: int, stream: int, samples: int,
                 shards: int) -> np.ndarray:
    parts = []
    for rng, n in zip(spawn_generators(seed + 7919 * stream, shards),
                      split_count(samples, shards)):
        if n:
            parts.append(count_samples(law, regions, rng, n))
    return np.concatenate(parts) if parts else np.zeros((0, len(regions)), dtype=np.int64)


def _union_counts(law1: PoissonLaw, law2: PoissonLaw, seed: int, samples: int,
                  shards: int) -> np.ndarray:
    out = []
    for rng, n in zip(spawn_generators(seed, shards), split_count(samples, shards)):
        for _ in range(n):
            out.append(len(convolve_samples(poisson_sample(law1, rng),
                                            poisson_sample(law2, rng))))
    return np.asarray(out)


def _histogram_checks(res: SuiteResult, name: str, counts: np.ndarray, pmf: Callable,
                      mean: float, var: float) -> list[tuple]:
    n = len(counts)
    rows = []
    worst = 0.0
    top = int(counts.max()) if n else 0
    for k in range(top + 1):
        p = pmf(k)
        se = math.sqrt(p * (1 - p) / n)
        if p < 5.0 / n:
            continue  # too rare for a normal approximation
        freq = float(np.mean(counts == k))
        z = _z(freq, p, se)
        worst = max(worst, abs(z))
        rows.append((name, k, freq, p, se, z))
    res.add(f"{name}_histogram", worst <= 3.0, value=worst, target=0.0, tolerance=3.0,
            detail="max |z| over count bins")
    m = float(counts.mean())
    z = _z(m, mean, math.sqrt(var / n))
    res.add(f"{name}_mean", abs(z) <= 3.0, value=m, target=mean, tolerance="3 sigma",
            detail=f"z={z:.3f}")
    return rows


def run_poisson_identity(exp: Experiment, shards: int) -> SuiteResult:
    par: PoissonIdentityParams = exp.params
    base = exp.require_measure()
    window = exp.require_windows(1)[0]
    law = PoissonLaw(base, window, exp.spec.lambdas[0] if exp.spec.lambdas else 1.0)
    regions = [_guard(("params", "regions", i), region_from_json, r)
               for i, r in enumerate(par.regions)]
    if not regions:
        raise SpecError(("params", "regions"), "at least one region is required")
    if not regions_disjoint(regions):
        raise SpecError(("params", "regions"), "regions must be pairwise disjoint")
    events = par.events
    if events is None:
        events = [list(v) for v in itertools.product(range(3), repeat=len(regions))
                  if sum(v) <= 2]
    for i, e in enumerate(events):
        if len(e) != len(regions) or min(e) < 0:
            raise SpecError(("params", "events", i), "one nonnegative count per region")
    res = SuiteResult()
    for label, got, want in exact_value_checks():
        res.add(f"exact_value[{label}]", abs(got - want) <= 1e-15 * want, value=got,
                target=want, tolerance=1e-15)
    counts = _count_draws(law, regions, exp.spec.seed, 0, exp.spec.samples, shards)
    n = len(counts)
    rows, worst = [], 0.0
    for e in events:
        p = _guard(("params", "events"), count_probability, law, regions, e)
        freq = float(np.mean(np.all(counts == np.asarray(e), axis=1)))
        se = math.sqrt(p * (1 - p) / n)
        z = _z(freq, p, se)
        worst = max(worst, abs(z))
        rows.append((" ".join(map(str, e)), freq, p, se, z))
        res.add(f"joint_event[{','.join(map(str, e))}]", abs(z) <= 3.0, value=freq,
                target=p, tolerance="3 sigma", detail=f"z={z:.3f}")
    means = [law.region_mass(r) for r in regions]
    for i, mu in enumerate(means):
        m, v = float(counts[:, i].mean()), float(counts[:, i].var(ddof=1))
        z = _z(m, mu, math.sqrt(mu / n))
        res.add(f"region_mean[{i}]", abs(z) <= 3.0, value=m, target=mu,
                tolerance="3 sigma", detail=f"z={z:.3f}, variance {v:.6g}")
    if len(regions) > 1:
        c = np.corrcoef(counts.T)
        off = float(np.max(np.abs(c[~np.eye(len(regions), dtype=bool)])))
        res.add("independence_correlation", off <= 3.0 / math.sqrt(n), value=off,
                target=0.0, tolerance=3.0 / math.sqrt(n), detail="max |corr| between regions")
    res.tables["joint_events"] = (("event", "frequency", "probability", "stderr", "z"), rows)
    hist_rows = []
    if par.superpose_intensity is not None:
        other = PoissonLaw(base, window, par.superpose_intensity)
        total = law.mass + other.mass
        sup = superpose(law, other)
        uc = _union_counts(law, other, exp.spec.seed + 1, exp.spec.samples, shards)
        hist_rows += _histogram_checks(res, "superposition", uc,
                                       lambda k: poisson_pmf(total, k), total, total)
        res.add("superpose_mass", math.isclose(sup.mass, total, rel_tol=1e-12),
                value=sup.mass, target=total, tolerance=1e-12)
    if par.circ_n is not None:
        k0 = par.circ_n
        out = []
        for rng, m in zip(spawn_generators(exp.spec.seed + 2, shards),
                          split_count(exp.spec.samples, shards)):
            out.extend(len(circ_sample(k0, law, rng)) for _ in range(m))
        cc = np.asarray(out)
        hist_rows += _histogram_checks(res, "n_circ_P", cc,
                                       lambda k: poisson_pmf(law.mass, k - k0) if k >= k0 else 0.0,
                                       law.mass + k0, law.mass)
    if hist_rows:
        res.tables["count_histograms"] = (
            ("check", "count", "frequency", "probability", "stderr", "z"), hist_rows)
    res.verdicts["poisson_identity"] = "PASS" if res.passed else "FAIL"
    return res


# --------------------------------------------------------------------------
# consistency
# --------------------------------------------------------------------------

def run_consistency(exp: Experiment, shards: int) -> SuiteResult:
    par: ConsistencyParams = exp.params
    base = exp.require_measure()
    windows = exp.require_windows(2)
    outer = windows[-1]
    law = PoissonLaw(base, outer, exp.spec.lambdas[0] if exp.spec.lambdas else 1.0)
    res = SuiteResult()
    rows = []
    for i, inner in enumerate(windows[:-1]):
        rep = _guard(("windows", i), consistency_check, law, inner, exp.spec.samples,
                     exp.spec.seed + i, shards, par.top)
        d = rep.to_json()
        rows.append((i, d["inner_mass"], d["restricted_gof_p"], d["direct_gof_p"],
                     d["two_sample_p"], d["distance_p"], d["covariance_z"], d["passed"]))
        pmin = min(rep.restricted_gof_p, rep.two_sample_p, rep.distance_p)
        res.add(f"restriction[{i}]", pmin > rep.alpha, value=pmin, target=f"> {rep.alpha:g}",
                tolerance=rep.alpha, detail="min of restricted, two-sample, distance p-values")
        res.add(f"independence[{i}]", abs(rep.covariance_z) < 3.0, value=rep.covariance_z,
                target=0.0, tolerance=3.0, detail="inside/outside count covariance z")
        res.add(f"direct_gof[{i}]", rep.direct_gof_p > rep.alpha, soft=True,
                value=rep.direct_gof_p, target=f"> {rep.alpha:g}", tolerance=rep.alpha,
                detail="sampler sanity on the inner window itself")
    res.tables["consistency"] = (("inner_index", "inner_mass", "restricted_gof_p",
                                  "direct_gof_p", "two_sample_p", "distance_p",
                                  "covariance_z", "passed"), rows)
    res.verdicts["consistency"] = "CONSISTENT" if res.passed else "INCONSISTENT"
    return res


# --------------------------------------------------------------------------
# Kakutani
# --------------------------------------------------------------------------

def run_kakutani(exp: Experiment, shards: int) -> SuiteResult:
    par: KakutaniParams = exp.params
    seqs = canned_sequences()
    if par.sequences is not None:
        names = {s.name: s for s in seqs}
        for i, n in enumerate(par.sequences):
            if n not in names:
                raise SpecError(("params", "sequences", i), f"unknown canned sequence {n!r}")
        seqs = [names[n] for n in par.sequences]
    res = SuiteResult()
    traj, summary = [], []
    undecided = 0
    for s in seqs:
        r = kakutani_dichotomy(s.pair, cutoff=par.cutoff, threshold=par.threshold)
        undecided += r.verdict == UNDECIDED
        res.add(f"classify[{s.name}]", r.verdict == s.expected, value=r.verdict,
                target=s.expected, detail=r.rule)
        res.verdicts[s.name] = r.verdict
        summary.append((s.name, s.family, s.criterion, s.expected, r.verdict, r.rule,
                        r.tail_exponent, r.limit_estimate))
        traj.extend((s.name, k, pp, ls) for k, pp, ls in r.trajectory_rows())
    res.add("no_undecided", undecided == 0, value=undecided, target=0)
    res.tables["kakutani_summary"] = (("sequence", "family", "criterion", "expected",
                                       "verdict", "rule", "tail_exponent",
                                       "limit_estimate"), summary)
    res.tables["kakutani_trajectory"] = (("sequence", "k", "partial_product",
                                          "log_partial_sum"), traj)
    return res


# --------------------------------------------------------------------------
# spherical function
# --------------------------------------------------------------------------

def _evidence_windows(exp: Experiment, par: SphericalParams) -> list:
    if exp.space.is_padic:
        return list(make_exhaustion(exp.space, par.evidence_levels).levels)
    return list(make_exhaustion(exp.space, par.evidence_levels,
                                [par.evidence_step * (k + 1)
                                 for k in range(par.evidence_levels)]).levels)


def run_spherical(exp: Experiment, shards: int) -> SuiteResult:
    par: SphericalParams = exp.params
    base = exp.require_measure()
    window = exp.require_windows(1)[0]
    lam = exp.spec.lambdas
    law = PoissonLaw(base, window, 1.0)
    seed, samples = exp.spec.seed, exp.spec.samples
    res = SuiteResult()
    rows = []
    if not exp.transformations:
        raise SpecError(("transformations",), "the spherical suite needs transformations")
    for idx, (name, psi) in enumerate(exp.transformations):
        path = ("transformations", idx)
        q = _guard(path, spherical_function, law, psi, "quadrature")
        mc = _guard(path, spherical_function, law, psi, "monte_carlo", samples,
                    seed + 10 * idx, shards)
        tol = max(3 * mc.stderr, par.mc_floor)
        res.add(f"quadrature_vs_mc[{name}]", abs(q.value - mc.value) <= tol, value=mc.value,
                target=q.value, tolerance=tol, detail=f"stderr {mc.stderr:.3g}")
        ip = spherical_inner_product(law, psi, samples, seed + 10 * idx + 1, shards)
        ok = ip.value == q.value if ip.stderr == 0 else abs(ip.value - q.value) <= 3 * ip.stderr
        res.add(f"inner_product_vs_u[{name}]", ok, value=ip.value, target=q.value,
                tolerance="3 sigma", detail=f"stderr {ip.stderr:.3g}")
        for s in par.scaling_lambdas:
            qs = spherical_function(law.scaled(s), psi, "quadrature")
            dev = abs(qs.value - q.value ** s)
            res.add(f"scaling_law[{name},lambda={s:g}]", dev <= par.scaling_tol, value=qs.value,
                    target=q.value ** s, tolerance=par.scaling_tol)
        rows.append((name, q.value, mc.value, mc.stderr, ip.value, ip.stderr))
    res.tables["spherical"] = (("psi", "u_quadrature", "u_monte_carlo", "mc_stderr",
                                "inner_product", "inner_product_stderr"), rows)
    if par.evidence:
        if len(lam) < 2:
            raise SpecError(("lambdas",), "scaling evidence needs two intensities")
        wname = par.witness or exp.transformations[0][0]
        witness = exp.named(wname, ("params", "witness"))
        wins = _evidence_windows(exp, par)
        rep = _guard(("params",), scaling_singularity_evidence, base, wins, lam[0], lam[1],
                     par.evidence_samples, seed + 1000, witness, par.witness_samples,
                     par.affinity_floor)
        res.verdicts["scaling"] = rep.verdict
        res.verdicts["scaling_rule"] = rep.rule
        res.add("scaling_verdict", rep.verdict == "SINGULAR", value=rep.verdict,
                target="SINGULAR", detail=rep.rule)
        res.add("affinity_below_floor", rep.affinity_below_floor, soft=True,
                value=rep.final_affinity, target=f"< {par.affinity_floor:g}",
                tolerance=par.affinity_floor,
                detail=f"count-law affinity at window mass {rep.levels[-1].base_mass:g}")
        worst = max(abs(lv.affinity - lv.affinity_closed_form) for lv in rep.levels)
        res.add("affinity_closed_form", worst <= 1e-9, value=worst, target=0.0,
                tolerance=1e-9, detail="summed vs closed-form Poisson affinity")
        if rep.witness is not None:
            w = rep.witness
            res.verdicts["witness"] = wname
            res.add("witness_separation", w["separated"], value=w["gap"],
                    target=f"> {w['combined_3sigma']:.6g}", tolerance=w["combined_3sigma"],
                    detail=f"witness {wname}")
        res.tables["scaling_evidence"] = (
            ("level", "base_mass", "affinity", "affinity_closed_form", "llr_mean", "llr_var",
             "llr_mean_exact", "llr_var_exact"),
            [tuple(r.values()) for r in rep.rows()])
    return res


# --------------------------------------------------------------------------
# representation
# --------------------------------------------------------------------------

def _dictionary(exp: Experiment, par: RepresentationParams, window) -> list:
    if par.dictionary is None:
        return [DictionaryFunction.constant(1.0), DictionaryFunction.count(window),
                DictionaryFunction.count_indicator(window, 1),
                DictionaryFunction.power_sum(1)]
    out = []
    for i, d in enumerate(par.dictionary):
        region = window
        if d.region is not None:
            region = _guard(("params", "dictionary", i, "region"), region_from_json, d.region)
        if d.kind == "constant":
            out.append(DictionaryFunction.constant(d.value))
        elif d.kind == "count":
            out.append(DictionaryFunction.count(region))
        elif d.kind == "count_indicator":
            out.append(DictionaryFunction.count_indicator(region, d.k))
        elif d.kind == "region_weight":
            out.append(DictionaryFunction.region_weight(region, d.value))
        else:
            out.append(DictionaryFunction.power_sum(d.degree))
    return out


def _coordinate_feature(x: tuple) -> float:
    c = x[0]
    if isinstance(c, PAdicNumber):
        return 0.0 if c.is_zero else float(padic_abs(c)) * (1 + c.digits[0])
    return math.tanh(c)


def _vector_function(n: int) -> DictionaryFunction:
    def fn(g: FiniteConfig):
        return [_coordinate_feature(x) for x in cross_section(g)]
    return DictionaryFunction.vector(fn, n, "ordered_features")


def run_representation(exp: Experiment, shards: int) -> SuiteResult:
    par: RepresentationParams = exp.params
    base = exp.require_measure()
    window = exp.require_windows(1)[0]
    law = PoissonLaw(base, window, 1.0)
    seed, samples = exp.spec.seed, exp.spec.samples
    res = SuiteResult()
    dictionary = _dictionary(exp, par, window)
    rows = []
    for idx, (name, psi) in enumerate(exp.transformations):
        rep = _guard(("transformations", idx), unitarity_check, RepOperator(law, psi),
                     dictionary, samples, seed + idx, shards)
        res.add(f"unitarity[{name}]", rep.passed, value=rep.estimate,
                target=0.0, tolerance="3 sigma", detail=f"worst stderr {rep.stderr:.3g}")
        rows.append(("unitarity", name, "", rep.passed, rep.estimate, rep.stderr))
    maps = exp.transformations
    pairs = par.pairs
    if pairs is None:
        pairs = [(maps[i][0], maps[i + 1][0]) for i in range(len(maps) - 1)]
    for i, (a, b) in enumerate(pairs):
        psi = exp.named(a, ("params", "pairs", i))
        phi = exp.named(b, ("params", "pairs", i))
        rep = homomorphism_check(psi, phi, law, dictionary, samples, seed + 100 + i,
                                 shards=shards)
        res.add(f"homomorphism_U[{a},{b}]", rep.passed, value=rep.estimate, target=0.0,
                tolerance=rep.verdict)
        rows.append(("homomorphism_U", a, b, rep.passed, rep.estimate, 0.0))
        fixed = FixedCountLaw(base, window, par.twist_n)
        for kind in par.twist_kinds:
            q = SymmetricGroupRep(par.twist_n, kind)
            dic = [_vector_function(par.twist_n)] if kind == "permutation_matrices" \
                else [DictionaryFunction.constant(1.0), DictionaryFunction.power_sum(1)]
            rep = homomorphism_check(psi, phi, fixed, dic, par.twist_samples,
                                     seed + 200 + i, q=q, shards=shards)
            res.add(f"homomorphism_V[{kind}][{a},{b}]", rep.passed, value=rep.estimate,
                    target=0.0, tolerance=rep.verdict,
                    detail="includes the cocycle law")
            rows.append((f"homomorphism_V_{kind}", a, b, rep.passed, rep.estimate, 0.0))
    for i, st in enumerate(par.sign_twists):
        psi = exp.named(st.transformation, ("params", "sign_twists", i, "transformation"))
        pts = [_guard(("params", "sign_twists", i, "config"), exp.space.point, _parse_point(x))
               for x in st.config]
        g = _guard(("params", "sign_twists", i, "config"), FiniteConfig, pts)
        s = sign_twist(psi, g)
        res.add(f"sign_twist[{st.transformation}]", s == st.expected, value=s,
                target=st.expected, tolerance=0)
    if par.ball_permutations:
        if not (exp.space.is_padic and isinstance(window, Ball)):
            raise SpecError(("params", "ball_permutations"), "ball permutations need a "
                                                             "p-adic window")
        rng = _rng(seed, 3)
        bad, total = 0, 0
        for _ in range(par.ball_permutations):
            psi = random_ball_permutation(rng, window, par.ball_depth,
                                          int(rng.integers(2, 5)), exp.space.absprec)
            for x in base.sample(rng, window, par.ball_points):
                total += 1
                bad += rho_factor(base, psi, x) != 1
        res.add("ball_permutation_rho_exact", bad == 0, value=bad, target=0, tolerance=0,
                detail=f"{par.ball_permutations} maps, {total} points")
    if par.discriminator and len(exp.spec.lambdas) >= 2 and maps:
        l1, l2 = exp.spec.lambdas[:2]
        disc = spherical_discriminator(law, l1, l2, maps, par.discriminator_samples,
                                       seed + 300, shards)
        res.verdicts["discriminator"] = disc["verdict"]
        res.verdicts["witness"] = disc["witness"]
        expect = par.expect_discriminator
        res.add("discriminator", disc["verdict"] == (expect or "SEPARATED"),
                soft=expect is None, value=disc["verdict"], target=expect or "SEPARATED",
                detail=f"witness {disc['witness']}, separation {disc['estimate']:.6g}")
        res.tables["discriminator"] = (
            ("psi", "u1_quadrature", "u2_quadrature", "u1_monte_carlo", "u1_stderr",
             "u2_monte_carlo", "u2_stderr", "separation", "combined_error"),
            [(r["psi"], r["u1_quadrature"], r["u2_quadrature"], r["u1_monte_carlo"],
              r["u1_stderr"], r["u2_monte_carlo"], r["u2_stderr"], r["separation"],
              r["combined_error"]) for r in disc["rows"]])
    res.tables["representation"] = (("check", "psi", "phi", "passed", "estimate",
                                     "stderr"), rows)
    return res


def _parse_point(x):
    if isinstance(x, str):
        return (PAdicNumber.parse(x),)
    if isinstance(x, list) and x and isinstance(x[0], str):
        return tuple(PAdicNumber.parse(c) for c in x)
    return x


RUNNERS = {
    "metrics": run_metrics,
    "poisson_identity": run_poisson_identity,
    "consistency": run_consistency,
    "kakutani": run_kakutani,
    "spherical": run_spherical,
    "representation": run_representation,
}
