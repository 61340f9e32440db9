"""Hellinger affinity of one-dimensional laws and the product-measure dichotomy.

Affinities are computed through the squared Hellinger distance
``h^2 = 1/2 ∫ (sqrt f - sqrt g)^2`` so that nearly equal laws do not lose
their distance to cancellation in ``1 - ∫ sqrt(fg)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .local_field import Ball, PAdicNumber, haar_volume
from .measure import GaussianProduct, Lebesgue, MeasureModel, PAdicGaussian, PAdicModel
from .space import Box

EQUIVALENT = "EQUIVALENT"
SINGULAR = "SINGULAR"
UNDECIDED = "UNDECIDED"

# quadrature tolerances (tighter than needed for the decision rules)
QUAD_EPSREL = 1e-12
QUAD_EPSABS = 1e-22
# p-adic refinement stops once a ball can carry at most this much mass
PADIC_MASS_FLOOR = 1e-22


@dataclass(frozen=True)
class HellingerResult:
    distance_sq: float
    error: float

    @property
    def affinity(self) -> float:
        return min(1.0, max(0.0, 1.0 - self.distance_sq))


def _check_probability(m: MeasureModel, region) -> None:
    try:
        mass = float(m.mass(region))
    except ValueError as exc:
        raise ValueError(f"not a probability: {exc}") from exc
    if not abs(mass - 1.0) < 1e-8:
        raise ValueError(f"not a probability on the region (mass {mass:.6g})")


def _merge(intervals: list[tuple[float, float]]) -> list[list[float]]:
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return out


def _real_hellinger(mu, nu, region: Box | None) -> HellingerResult:
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("Hellinger affinity is computed for one-dimensional laws")
    pieces = _merge([mu.effective_interval(), nu.effective_interval()])
    if region is not None:
        lo, hi = region.lower[0], region.upper[0]
        pieces = [[max(a, lo), min(b, hi)] for a, b in pieces if min(b, hi) > max(a, lo)]
    bps = sorted(set(mu.breakpoints()) | set(nu.breakpoints()))

    def integrand(t: float) -> float:
        d = math.sqrt(mu.density1d(t)) - math.sqrt(nu.density1d(t))
        return 0.5 * d * d

    total, err = [], 0.0
    for a, b in pieces:
        inner = [t for t in bps if a < t < b]
        cuts = [a, *inner, b]
        for lo, hi in zip(cuts, cuts[1:]):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                v, e = integrate.quad(integrand, lo, hi, epsabs=QUAD_EPSABS,
                                      epsrel=QUAD_EPSREL, limit=400)
            total.append(v)
            err += e
    return HellingerResult(math.fsum(total), err)


def _enclosing_ball(a: Ball, b: Ball) -> Ball:
    """Smallest ball containing both (nested or joined at their distance)."""
    if a.contains_ball(b):
        return a
    if b.contains_ball(a):
        return b
    from .local_field import distance_exponent
    e = distance_exponent(a.center, b.center)
    return Ball(a.center, min(e, a.j, b.j), prime=a.prime)


def _padic_hellinger(mu: PAdicModel, nu: PAdicModel, region: Ball | None) -> HellingerResult:
    if mu.prime != nu.prime:
        raise ValueError("laws live on different fields")
    top = region if region is not None else _enclosing_ball(mu.effective_ball(), nu.effective_ball())
    bound = mu.density_bound() + nu.density_bound()
    total, err = [], 0.0
    stack = [top]
    while stack:
        b = stack.pop()
        f, g = mu.density_on_ball(b), nu.density_on_ball(b)
        vol = float(haar_volume(b))
        if f is not None and g is not None:
            d = math.sqrt(float(f)) - math.sqrt(float(g))
            total.append(0.5 * d * d * vol)
            continue
        if vol * bound < PADIC_MASS_FLOOR:
            # density varies only near a special point; use the center value
            d = math.sqrt(float(mu.density(b.center))) - math.sqrt(float(nu.density(b.center)))
            total.append(0.5 * d * d * vol)
            err += vol * bound
            continue
        stack.extend(b.children())
    tails = sum(getattr(m, "tail_bound", 0.0) for m in (mu, nu))
    return HellingerResult(math.fsum(total), err + tails)


def hellinger_distance_sq(mu: MeasureModel, nu: MeasureModel, region=None) -> HellingerResult:
    """``1/2 ∫ (sqrt(dμ/dr) - sqrt(dν/dr))^2 dr`` with an error estimate."""
    _check_probability(mu, region)
    _check_probability(nu, region)
    if mu.kind != nu.kind:
        raise ValueError("laws live on different spaces")
    if mu.is_padic:
        return _padic_hellinger(mu, nu, region)
    return _real_hellinger(mu, nu, region)


def hellinger_affinity(mu: MeasureModel, nu: MeasureModel, region=None) -> float:
    """``∫ sqrt(dμ dν)`` in [0, 1]."""
    return hellinger_distance_sq(mu, nu, region).affinity


# --------------------------------------------------------------------------
# the dichotomy
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KakutaniResult:
    verdict: str
    rule: str
    partial_products: tuple
    log_partial_sums: tuple
    tail_exponent: float | None
    limit_estimate: float

    def trajectory_rows(self) -> list[tuple[int, float, float]]:
        return [(k + 1, p, s) for k, (p, s) in
                enumerate(zip(self.partial_products, self.log_partial_sums))]


# below this a per-coordinate term is indistinguishable from rounding noise
_NEGLIGIBLE = 1e-15


def classify_terms(hsq: Sequence[float], threshold: float = 1e-3,
                   stability: float = 1e-6, floor: float = -30.0) -> KakutaniResult:
    """Classify ``prod_k (1 - h_k^2)`` from the squared Hellinger distances.

    Decision order: a log partial sum below ``floor`` is SINGULAR; partial
    products varying by less than ``stability`` over the last quarter and
    ending above ``threshold`` are EQUIVALENT.  Otherwise the last quarter of
    the log-terms ``t_k = -log(1 - h_k^2)`` is fitted to ``k^-α``: ``α <= 1.02``
    means a divergent series (SINGULAR), ``α > 1.1`` a convergent one whose
    remainder ``t_K K/(α-1)`` is added before comparing with ``threshold``.
    """
    h = np.clip(np.asarray(hsq, dtype=float), 0.0, 1.0)
    if h.size < 8:
        raise ValueError("need at least 8 coordinates")
    with np.errstate(divide="ignore"):
        t = -np.log1p(-h)
    logsum = -np.cumsum(t)
    prods = np.exp(logsum)
    K = h.size
    q = slice(K - max(K // 4, 2), K)

    def result(verdict, rule, alpha=None, limit=None):
        return KakutaniResult(verdict, rule, tuple(prods.tolist()), tuple(logsum.tolist()),
                              alpha, float(prods[-1] if limit is None else limit))

    if logsum[-1] < floor:
        return result(SINGULAR, "log-sum floor", limit=0.0)
    tail = prods[q]
    if tail.max() - tail.min() < stability and prods[-1] > threshold:
        return result(EQUIVALENT, "stable partial products")

    ks = np.arange(1, K + 1)[q]
    tq = t[q]
    if tq.max() < _NEGLIGIBLE:
        verdict = EQUIVALENT if prods[-1] > threshold else UNDECIDED
        return result(verdict, "negligible tail")
    keep = tq >= _NEGLIGIBLE
    if keep.sum() < 4:
        # terms fall to zero inside the window: faster than any power
        return result(EQUIVALENT if prods[-1] > threshold else UNDECIDED, "vanishing tail")
    slope = np.polyfit(np.log(ks[keep]), np.log(tq[keep]), 1)[0]
    alpha = float(-slope)
    if alpha <= 1.02:
        return result(SINGULAR, "divergent tail", alpha, 0.0)
    if alpha > 1.1:
        remainder = float(tq[-1]) * K / (alpha - 1.0)
        limit = float(prods[-1]) * math.exp(-remainder)
        verdict = EQUIVALENT if limit > threshold else UNDECIDED
        return result(verdict, "convergent tail", alpha, limit)
    return result(UNDECIDED, "indeterminate tail", alpha)


def kakutani_dichotomy(pairs, cutoff: int = 200, threshold: float = 1e-3) -> KakutaniResult:
    """Decide equivalence of ``⊗μ_k`` and ``⊗ν_k`` from the first ``cutoff`` pairs.

    ``pairs`` is either a sequence of ``(μ_k, ν_k)`` or a callable ``k -> (μ_k, ν_k)``
    with ``k`` starting at 1.
    """
    if callable(pairs):
        seq = (pairs(k) for k in range(1, cutoff + 1))
    else:
        seq = list(pairs)[:cutoff]
    hsq = [hellinger_distance_sq(mu, nu).distance_sq for mu, nu in seq]
    return classify_terms(hsq, threshold)


# --------------------------------------------------------------------------
# canned sequences
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CannedSequence:
    name: str
    family: str
    summable: bool  # does sum_k a_k^2 converge?
    criterion: str
    pair: Callable[[int], tuple] = field(repr=False)

    @property
    def expected(self) -> str:
        return EQUIVALENT if self.summable else SINGULAR


def _shift(a: Callable[[int], float]):
    return lambda k: (GaussianProduct.normal(0.0, 1.0), GaussianProduct.normal(a(k), 1.0))


def _scale(b: Callable[[int], float]):
    return lambda k: (GaussianProduct.normal(0.0, 1.0), GaussianProduct.normal(0.0, 1.0 + b(k)))


def _lambda_family(a: Callable[[int], float], power: float = 1.5):
    # C_k exp(-x^2 s_k^2) dx with s_k = k^power
    def pair(k):
        s = float(k) ** power
        return GaussianProduct.with_precision(s), GaussianProduct.with_precision(s, a(k))
    return pair


def _eta_shift(val: Callable[[int], int | None], p: int = 3):
    def pair(k):
        v = val(k)
        y = PAdicNumber.zero(p) if v is None else PAdicNumber.from_int(1, p, prec=96).shift(v)
        return PAdicGaussian.eta(k, p), PAdicGaussian.eta(k, p, center=y)
    return pair


def _eta_scale(r: Callable[[int], float], p: int = 3):
    def pair(k):
        s = float(p) ** (2 * k)
        return PAdicGaussian(p, s), PAdicGaussian(p, s * r(k) ** 2)
    return pair


def _uniform_stretch(b: Callable[[int], float]):
    return lambda k: (Lebesgue.uniform(Box.interval(0.0, 1.0)),
                      Lebesgue.uniform(Box.interval(0.0, 1.0 + b(k))))


def canned_sequences() -> list[CannedSequence]:
    """Twenty product-measure pairs with known summability of ``sum a_k^2``."""
    C = CannedSequence
    return [
        C("gauss-identical", "gaussian-shift", True, "a_k = 0", _shift(lambda k: 0.0)),
        C("gauss-shift-geometric", "gaussian-shift", True, "a_k = 2^-k", _shift(lambda k: 2.0**-k)),
        C("gauss-shift-harmonic", "gaussian-shift", True, "a_k = 1/k", _shift(lambda k: 1.0 / k)),
        C("gauss-shift-k^-0.75", "gaussian-shift", True, "a_k = k^-0.75", _shift(lambda k: k**-0.75)),
        C("gauss-shift-slow-geometric", "gaussian-shift", True, "a_k = 2^(-k/4)",
          _shift(lambda k: 0.5 ** (k / 4))),
        C("gauss-shift-k^-0.5", "gaussian-shift", False, "a_k = 1/sqrt(k)", _shift(lambda k: k**-0.5)),
        C("gauss-shift-k^-0.25", "gaussian-shift", False, "a_k = k^-0.25", _shift(lambda k: k**-0.25)),
        C("gauss-shift-constant", "gaussian-shift", False, "a_k = 1", _shift(lambda k: 1.0)),
        C("gauss-scale-harmonic", "gaussian-scale", True, "sd ratio 1 + 1/k", _scale(lambda k: 1.0 / k)),
        C("gauss-scale-k^-0.25", "gaussian-scale", False, "sd ratio 1 + k^-0.25",
          _scale(lambda k: k**-0.25)),
        C("lambda-shift-k^-2.6", "lambda_k", True, "a_k s_k = k^-1.1",
          _lambda_family(lambda k: k**-2.6)),
        C("lambda-shift-k^-2", "lambda_k", False, "a_k s_k = k^-0.5",
          _lambda_family(lambda k: k**-2.0)),
        C("lambda-shift-k^-1.5", "lambda_k", False, "a_k s_k = 1",
          _lambda_family(lambda k: k**-1.5)),
        C("eta-identical", "eta_k", True, "y_k = 0", _eta_shift(lambda k: None)),
        C("eta-shift-deep", "eta_k", True, "|y_k| p^k = p^-k", _eta_shift(lambda k: 2 * k)),
        C("eta-shift-natural", "eta_k", False, "|y_k| p^k = 1", _eta_shift(lambda k: k)),
        C("eta-scale-harmonic", "eta_k", True, "scale ratio 1 + 1/k", _eta_scale(lambda k: 1.0 + 1.0 / k)),
        C("eta-scale-k^-0.25", "eta_k", False, "scale ratio 1 + k^-0.25",
          _eta_scale(lambda k: 1.0 + k**-0.25)),
        C("uniform-stretch-k^-2", "uniform", True, "length ratio 1 + k^-2",
          _uniform_stretch(lambda k: k**-2.0)),
        C("uniform-stretch-k^-0.5", "uniform", False, "length ratio 1 + k^-0.5",
          _uniform_stretch(lambda k: k**-0.5)),
    ]
