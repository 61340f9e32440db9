"""Base measures with densities and samplers, and quasi-invariance factors.

Real densities are taken against Lebesgue measure, p-adic ones against the
Haar measure normalised by ``v(B(0,1)) = 1``.  Haar densities are exact
Fractions so that factors of measure-preserving maps come out as exactly 1.
"""

from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .local_field import (DEFAULT_ABSPREC, DEFAULT_PRECISION, Ball, PAdicNumber, _pad,
                          haar_volume)
from .space import Box, RegionUnion, as_point

_LOG_MAX = math.log(sys.float_info.max)


class MeasureModel:
    """A nonatomic base measure on R^k or Q_p^k."""

    kind = "real"
    dim = 1

    def density(self, x):
        raise NotImplementedError

    def mass(self, region=None):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, region=None, size: int = 1) -> list[tuple]:
        """``size`` i.i.d. points from the normalised restriction to ``region``."""
        raise NotImplementedError

    @property
    def is_padic(self) -> bool:
        return self.kind == "padic"

    def is_probability(self, tol: float = 1e-9) -> bool:
        try:
            return abs(float(self.mass(None)) - 1.0) < tol
        except (ValueError, OverflowError):
            return False

    def to_json(self) -> dict:
        raise NotImplementedError


# --------------------------------------------------------------------------
# real models
# --------------------------------------------------------------------------

class RealModel(MeasureModel):
    kind = "real"

    def density_array(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def density(self, x) -> float:
        return float(self.density_array(np.asarray([as_point(x)], dtype=float))[0])

    def density1d(self, t: float) -> float:
        return float(self.density_array(np.array([[t]]))[0])

    def sample_array(self, rng: np.random.Generator, region=None, size: int = 1) -> np.ndarray:
        if isinstance(region, RegionUnion):
            masses = np.array([self.mass(r) for r in region.parts], dtype=float)
            which = rng.choice(len(masses), size=size, p=masses / masses.sum())
            out = np.empty((size, self.dim))
            for i, r in enumerate(region.parts):
                idx = np.flatnonzero(which == i)
                if idx.size:
                    out[idx] = self._sample_box(rng, r, idx.size)
            return out
        return self._sample_box(rng, region, size)

    def _sample_box(self, rng, box, size) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng, region=None, size=1) -> list[tuple]:
        return [tuple(r) for r in self.sample_array(rng, region, size).tolist()]

    def effective_interval(self) -> tuple[float, float]:
        """Interval outside which a 1-D density is negligible."""
        raise NotImplementedError

    def breakpoints(self) -> tuple:
        return ()


@dataclass(frozen=True, eq=False)
class Lebesgue(RealModel):
    """``scale`` times Lebesgue measure, optionally restricted to ``support``."""

    dim: int = 1
    scale: float = 1.0
    support: Box | None = None

    @classmethod
    def uniform(cls, box: Box) -> Lebesgue:
        """Normalised uniform law on a box."""
        return cls(box.dim, 1.0 / box.volume(), box)

    def density_array(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        if self.support is None:
            return np.full(len(pts), self.scale)
        return np.where(self.support.contains_array(pts), self.scale, 0.0)

    def mass(self, region=None) -> float:
        if region is None:
            if self.support is None:
                return math.inf
            return self.scale * self.support.volume()
        if isinstance(region, RegionUnion):
            return math.fsum(self.mass(r) for r in region.parts)
        if self.support is not None:
            region = region.intersection(self.support)
            if region is None:
                return 0.0
        return self.scale * region.volume()

    def density1d(self, t: float) -> float:
        if self.support is None:
            return self.scale
        return self.scale if self.support.lower[0] <= t <= self.support.upper[0] else 0.0

    def _sample_box(self, rng, box, size):
        if box is None:
            box = self.support
        elif self.support is not None:
            box = box.intersection(self.support)
        if box is None or not np.all(np.isfinite(box.lower + box.upper)):
            raise ValueError("sampling Lebesgue measure needs a bounded window")
        return rng.uniform(box.lower, box.upper, size=(size, self.dim))

    def effective_interval(self):
        if self.support is None:
            raise ValueError("unbounded Lebesgue measure has no effective interval")
        return self.support.lower[0], self.support.upper[0]

    def breakpoints(self):
        if self.support is None:
            return ()
        return (self.support.lower[0], self.support.upper[0])

    def to_json(self) -> dict:
        d = {"kind": "lebesgue", "parameters": {"dim": self.dim, "scale": self.scale}}
        if self.support is not None:
            d["parameters"]["support"] = self.support.to_json()
        return d


@dataclass(frozen=True, eq=False)
class GaussianProduct(RealModel):
    """Product Gaussian with density ``prod_l exp(-(x_l-a_l)^2/λ_l)/sqrt(πλ_l)``.

    This normalisation (variance ``λ_l/2``) is the one for which the shift
    factor is ``exp(sum (2 z_l x_l - z_l^2)/λ_l)``.
    """

    eigenvalues: tuple
    mean: tuple | None = None

    def __post_init__(self):
        ev = tuple(float(v) for v in np.atleast_1d(self.eigenvalues))
        if not ev or any(v <= 0 for v in ev):
            raise ValueError("eigenvalues must be positive")
        object.__setattr__(self, "eigenvalues", ev)
        mean = (0.0,) * len(ev) if self.mean is None else tuple(
            float(v) for v in np.atleast_1d(self.mean))
        if len(mean) != len(ev):
            raise ValueError("mean and eigenvalues differ in length")
        object.__setattr__(self, "mean", mean)

    @classmethod
    def normal(cls, mean: float = 0.0, sd: float = 1.0) -> GaussianProduct:
        """1-D law N(mean, sd^2)."""
        return cls((2.0 * sd * sd,), (mean,))

    @classmethod
    def with_precision(cls, s: float, mean: float = 0.0) -> GaussianProduct:
        """1-D law ``C exp(-(x-mean)^2 s^2) dx``."""
        return cls((1.0 / s**2,), (mean,))

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.eigenvalues) / 2.0)

    def density_array(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        lam = np.asarray(self.eigenvalues)
        q = ((pts - np.asarray(self.mean)) ** 2 / lam).sum(axis=1)
        return np.exp(-q) / math.prod(math.sqrt(math.pi * v) for v in self.eigenvalues)

    def density1d(self, t: float) -> float:
        lam = self.eigenvalues[0]
        return math.exp(-((t - self.mean[0]) ** 2) / lam) / math.sqrt(math.pi * lam)

    def _cdf_bounds(self, box):
        sd, mu = self.sd, np.asarray(self.mean)
        lo = ndtr((np.asarray(box.lower) - mu) / sd)
        hi = ndtr((np.asarray(box.upper) - mu) / sd)
        return lo, hi

    def mass(self, region=None) -> float:
        if region is None:
            return 1.0
        if isinstance(region, RegionUnion):
            return math.fsum(self.mass(r) for r in region.parts)
        lo, hi = self._cdf_bounds(region)
        return float(np.prod(hi - lo))

    def _sample_box(self, rng, box, size):
        sd, mu = self.sd, np.asarray(self.mean)
        if box is None:
            return mu + sd * rng.standard_normal((size, self.dim))
        lo, hi = self._cdf_bounds(box)
        u = lo + (hi - lo) * rng.random((size, self.dim))
        return mu + sd * ndtri(u)

    def effective_interval(self):
        sd = float(self.sd[0])
        return self.mean[0] - 40 * sd, self.mean[0] + 40 * sd

    def breakpoints(self):
        m, sd = self.mean[0], float(self.sd[0])
        return tuple(m + k * sd for k in (-8, -3, -1, 0, 1, 3, 8))

    def to_json(self) -> dict:
        return {"kind": "gaussian", "parameters": {"eigenvalues": list(self.eigenvalues),
                                                   "mean": list(self.mean)}}


# --------------------------------------------------------------------------
# p-adic models
# --------------------------------------------------------------------------

class PAdicModel(MeasureModel):
    kind = "padic"
    prime: int
    absprec: int = DEFAULT_ABSPREC

    def density_on_ball(self, ball: Ball):
        """Density value if constant on ``ball``, else ``None``."""
        raise NotImplementedError

    def density_bound(self) -> float:
        """Upper bound of the density."""
        raise NotImplementedError

    def effective_ball(self) -> Ball:
        """Ball outside which the mass is negligible (or zero)."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Haar(PAdicModel):
    """``scale`` times Haar measure on Q_p^k, optionally restricted to a ball."""

    prime: int
    dim: int = 1
    scale: Fraction = Fraction(1)
    support: Ball | None = None
    absprec: int = DEFAULT_ABSPREC

    def __post_init__(self):
        object.__setattr__(self, "scale", Fraction(self.scale))

    @classmethod
    def uniform(cls, ball: Ball, absprec: int = DEFAULT_ABSPREC) -> Haar:
        return cls(ball.prime, ball.dim, 1 / haar_volume(ball), ball, absprec)

    def density(self, x) -> Fraction:
        if self.support is None or x in self.support:
            return self.scale
        return Fraction(0)

    def density_on_ball(self, ball):
        if self.support is None or self.support.contains_ball(ball):
            return self.scale
        if not self.support.intersects(ball):
            return Fraction(0)
        return None

    def density_bound(self):
        return float(self.scale)

    def effective_ball(self):
        if self.support is None:
            raise ValueError("unrestricted Haar measure has infinite mass")
        return self.support

    def _clip(self, ball: Ball | None) -> Ball | None:
        if ball is None:
            return self.support
        if self.support is None:
            return ball
        if self.support.contains_ball(ball):
            return ball
        if ball.contains_ball(self.support):
            return self.support
        return None

    def mass(self, region=None):
        if isinstance(region, RegionUnion):
            return sum((self.mass(r) for r in region.parts), Fraction(0))
        b = self._clip(region)
        if b is None:
            if region is None:
                return math.inf
            return Fraction(0)
        return self.scale * haar_volume(b)

    def sample(self, rng, region=None, size=1):
        if isinstance(region, RegionUnion):
            masses = np.array([float(self.mass(r)) for r in region.parts])
            which = rng.choice(len(masses), size=size, p=masses / masses.sum())
            out = [None] * size
            for i, r in enumerate(region.parts):
                idx = np.flatnonzero(which == i)
                for k, pt in zip(idx, self.sample(rng, r, idx.size)):
                    out[k] = pt
            return out
        b = self._clip(region)
        if b is None:
            raise ValueError("sampling Haar measure needs a ball window inside the support")
        return [tuple(c.truncate(self.absprec) for c in pt)
                for pt in b.sample(rng, size, prec=max(self.absprec - b.j, 1))]

    def to_json(self) -> dict:
        d = {"kind": "haar", "parameters": {"prime": self.prime, "dim": self.dim,
                                            "scale": str(self.scale)}}
        if self.support is not None:
            d["parameters"]["support"] = {"center": [c.to_text() for c in self.support.center],
                                          "j": self.support.j}
        return d


def padic_gaussian_normalizer(s: float, p: int, shell_cutoff: int = 40,
                              tol: float = 1e-12) -> tuple[float, float]:
    """Return ``(F, tail)`` with ``F * ∫ exp(-|x|^2 s) v(dx) = 1``.

    The integral is an exact sum over valuation shells ``|x| = p**k``
    (Haar mass ``p**k (1 - 1/p)``), ``shell_cutoff`` shells either side of
    the natural scale ``p**(2k) s ≈ 1``; the ball inside the innermost shell
    is counted with density 1.  ``tail`` bounds the relative error.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    lp, ls = math.log(p), math.log(s)
    k0 = round(-ls / (2 * lp))
    lo, hi = k0 - shell_cutoff, k0 + shell_cutoff
    terms = [math.exp(-math.exp(2 * k * lp + ls) + k * lp) * (1 - 1 / p) for k in range(lo, hi + 1)]
    inner = p ** (lo - 1.0)
    z = math.fsum(terms) + inner
    inner_err = inner * -math.expm1(-math.exp(2 * (lo - 1) * lp + ls))
    a = 2 * (hi + 1) * lp + ls
    outer_err = math.exp(-math.exp(a) + (hi + 1) * lp) / max(1 - p * math.exp(-math.exp(a)), 1e-300) \
        if a < _LOG_MAX else 0.0
    tail = (inner_err + outer_err) / z
    if tail > tol:
        raise ValueError(f"shell_cutoff={shell_cutoff} leaves tail {tail:.3g} > {tol:g}")
    return 1.0 / z, tail


@dataclass(frozen=True, eq=False)
class PAdicGaussian(PAdicModel):
    """``F exp(-|x - center|^2 s) v(dx)`` on Q_p, normalised to a probability."""

    prime: int
    s: float
    center: PAdicNumber | None = None
    shell_cutoff: int = 40
    absprec: int = DEFAULT_ABSPREC
    dim = 1

    def __post_init__(self):
        if self.center is None:
            object.__setattr__(self, "center", PAdicNumber.zero(self.prime))
        F, tail = padic_gaussian_normalizer(self.s, self.prime, self.shell_cutoff)
        object.__setattr__(self, "normalizer", F)
        object.__setattr__(self, "tail_bound", tail)
        lp, ls = math.log(self.prime), math.log(self.s)
        object.__setattr__(self, "_k0", round(-ls / (2 * lp)))

    @classmethod
    def eta(cls, k: int, prime: int, **kw) -> PAdicGaussian:
        """Coordinate law ``F_k exp(-|y|^2 p^(2k)) v(dy)``."""
        return cls(prime, float(prime) ** (2 * k), **kw)

    def density_at_exponent(self, e: int | None) -> float:
        """Density at a point with ``|x - center| = p**-e`` (``None``: at the center)."""
        if e is None:
            return self.normalizer
        a = -2 * e * math.log(self.prime) + math.log(self.s)
        return self.normalizer * math.exp(-math.exp(a)) if a < _LOG_MAX else 0.0

    def density(self, x) -> float:
        x = as_point(x)
        from .local_field import _diff_val
        return self.density_at_exponent(_diff_val(x[0], self.center))

    def density_on_ball(self, ball):
        if self.center in ball:
            return None
        from .local_field import _diff_val
        return self.density_at_exponent(_diff_val(ball.center[0], self.center))

    def density_bound(self):
        return self.normalizer

    def _shell_range(self) -> range:
        return range(self._k0 - self.shell_cutoff, self._k0 + self.shell_cutoff + 1)

    def _shell_weights(self):
        p = self.prime
        ks = list(self._shell_range())
        w = [self.density_at_exponent(-k) * p**k * (1 - 1 / p) for k in ks]
        inner = self.normalizer * p ** (ks[0] - 1.0)
        return ks, w, inner

    def effective_ball(self):
        lp, ls = math.log(self.prime), math.log(self.s)
        k = self._k0
        while 2 * k * lp + ls < math.log(800.0):
            k += 1
        return Ball(self.center, -k, prime=self.prime)

    def mass(self, region=None):
        if region is None:
            return 1.0
        if isinstance(region, RegionUnion):
            return math.fsum(self.mass(r) for r in region.parts)
        v = self.density_on_ball(region)
        if v is not None:
            return v * float(haar_volume(region))
        # ball around the center: shells of radius <= p**-j plus the inner ball
        ks, w, inner = self._shell_weights()
        return math.fsum(wk for k, wk in zip(ks, w) if k <= -region.j) + \
            (inner if ks[0] - 1 <= -region.j else 0.0)

    def sample(self, rng, region=None, size=1):
        p = self.prime
        ks, w, inner = self._shell_weights()
        probs = np.array(w + [inner])
        probs /= probs.sum()
        out = []
        while len(out) < size:
            idx = rng.choice(len(probs), size=size, p=probs)
            for i in idx:
                if i == len(ks):
                    ball = Ball(self.center, 1 - ks[0], prime=p)
                    pt = ball.sample(rng, 1, prec=DEFAULT_PRECISION)[0]
                else:
                    k = ks[i]
                    digits = [int(rng.integers(1, p))] + \
                        [int(d) for d in rng.integers(0, p, size=DEFAULT_PRECISION - 1)]
                    pt = (self.center + PAdicNumber.from_digits(p, -k, digits),)
                pt = tuple(c.truncate(max(self.absprec, -ks[0] + 8)) for c in pt)
                if region is None or pt in region:
                    out.append(pt)
                    if len(out) == size:
                        break
        return out

    def to_json(self) -> dict:
        return {"kind": "padic_gaussian",
                "parameters": {"prime": self.prime, "s": self.s,
                               "center": self.center.to_text(),
                               "shell_cutoff": self.shell_cutoff}}


# --------------------------------------------------------------------------
# sums of measures (superposition intensities)
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SumMeasure(MeasureModel):
    """``sum_i w_i m_i`` over models on a common space."""

    components: tuple
    weights: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("need at least one component")
        if len({c.kind for c in comps}) != 1:
            raise ValueError("components live on different spaces")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def kind(self) -> str:
        return self.components[0].kind

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def density(self, x):
        return math.fsum(w * float(c.density(x)) for c, w in zip(self.components, self.weights))

    def density_array(self, pts):
        return sum(w * c.density_array(pts) for c, w in zip(self.components, self.weights))

    def mass(self, region=None):
        return math.fsum(w * float(c.mass(region)) for c, w in zip(self.components, self.weights))

    def sample(self, rng, region=None, size=1):
        masses = np.array([w * float(c.mass(region)) for c, w in zip(self.components, self.weights)])
        which = rng.choice(len(masses), size=size, p=masses / masses.sum())
        out = [None] * size
        for i, c in enumerate(self.components):
            idx = np.flatnonzero(which == i)
            if idx.size:
                for k, pt in zip(idx, c.sample(rng, region, idx.size)):
                    out[k] = pt
        return out

    def sample_array(self, rng, region=None, size=1):
        return np.asarray(self.sample(rng, region, size), dtype=float).reshape(size, self.dim)

    def to_json(self) -> dict:
        return {"kind": "sum", "parameters": {
            "components": [c.to_json() for c in self.components],
            "weights": list(self.weights)}}


# --------------------------------------------------------------------------
# quasi-invariance factors
# --------------------------------------------------------------------------

def rho_factor(m: MeasureModel, psi, x):
    """Radon–Nikodym factor ``m^ψ(dx)/m(dx)`` with ``m^ψ(E) = m(ψ⁻¹E)``.

    Equals ``density(ψ⁻¹x) |det D(ψ⁻¹)(x)| / density(x)``.
    """
    x = as_point(x)
    dx = m.density(x)
    if dx == 0:
        raise ValueError("density vanishes at x")
    y = psi.apply_inverse(x)
    return m.density(y) * psi.inverse_jacobian(x) / dx


def rho_factor_array(m: RealModel, psi, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float).reshape(len(pts), -1)
    dx = m.density_array(pts)
    if np.any(dx == 0):
        raise ValueError("density vanishes at a sample point")
    y = psi.apply_inverse_array(pts)
    return m.density_array(y) * psi.inverse_jacobian_array(pts) / dx


def gaussian_shift_log_factor(z: Sequence[float], x: Sequence[float],
                              eigenvalues: Sequence[float]) -> float:
    return math.fsum((2 * zl * xl - zl * zl) / lam for zl, xl, lam in zip(z, x, eigenvalues))


def gaussian_shift_factor(z: Sequence[float], x: Sequence[float],
                          eigenvalues: Sequence[float]) -> float:
    """``ν_z(dx)/ν(dx) = exp(sum_l (2 z_l x_l - z_l^2)/λ_l)`` for ``ν_z(B) = ν(B - z)``.

    Saturates at the largest float with a RuntimeWarning on overflow.
    """
    z, x, lam = np.atleast_1d(z), np.atleast_1d(x), np.atleast_1d(eigenvalues)
    if not (len(z) == len(x) == len(lam)):
        raise ValueError("z, x and eigenvalues must have equal length")
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive")
    a = gaussian_shift_log_factor(z, x, lam)
    if a > _LOG_MAX:
        warnings.warn("Gaussian shift factor overflowed; saturating", RuntimeWarning)
        return sys.float_info.max
    return math.exp(a)


def gaussian_j_norm_sq(z: Sequence[float], eigenvalues: Sequence[float]) -> float:
    """``|z|_J^2 = sum 2 z_l^2/λ_l``: squared shift in units of the standard deviation."""
    return math.fsum(2 * zl * zl / lam for zl, lam in zip(z, eigenvalues))


@dataclass(frozen=True)
class Diagnostic:
    estimate: float
    stderr: float
    moves_off: bool | None
    samples: int


def _image_disjoint(psi, window) -> bool | None:
    from .transform import Identity, Translation
    if isinstance(psi, Identity):
        return False
    if isinstance(psi, Translation):
        if isinstance(window, Ball):
            # ultrametric: B + z meets B iff |z| <= radius
            return max(abs(z) for z in psi.shift) > window.radius
        if isinstance(window, Box):
            moved = Box(tuple(a + z for a, z in zip(window.lower, psi.shift)),
                        tuple(b + z for b, z in zip(window.upper, psi.shift)))
            return not moved.overlaps(window)
    return None


def condition_2_8_ii_diagnostic(m: MeasureModel, psi, window, samples: int,
                                rng: np.random.Generator) -> Diagnostic:
    """Monte-Carlo estimate of ``∫_window |ρ^{1/2}(ψ,x) - 1|^2 m(dx)``.

    ``moves_off`` reports whether ``ψ(window) ∩ window = ∅`` when that is
    decidable for the map type.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    total = float(m.mass(window))
    if m.is_padic:
        vals = np.array([(math.sqrt(float(rho_factor(m, psi, x))) - 1.0) ** 2
                         for x in m.sample(rng, window, samples)])
    else:
        pts = m.sample_array(rng, window, samples)
        vals = (np.sqrt(rho_factor_array(m, psi, pts)) - 1.0) ** 2
    est = total * float(vals.mean())
    se = total * float(vals.std(ddof=1)) / math.sqrt(samples) if samples > 1 else math.inf
    return Diagnostic(est, se, _image_disjoint(psi, window), samples)


def measure_from_json(d: dict) -> MeasureModel:
    from .space import region_from_json
    kind, par = d["kind"], d.get("parameters", {})
    if kind == "lebesgue":
        sup = region_from_json(par["support"]) if par.get("support") else None
        return Lebesgue(int(par.get("dim", 1)), float(par.get("scale", 1.0)), sup)
    if kind == "gaussian":
        return GaussianProduct(tuple(par["eigenvalues"]), tuple(par["mean"]) if par.get("mean") else None)
    if kind == "haar":
        sup = par.get("support")
        ball = None
        if sup:
            ball = Ball(tuple(_pad(PAdicNumber.parse(c), int(sup["j"])) for c in sup["center"]),
                        int(sup["j"]), prime=int(par["prime"]))
        return Haar(int(par["prime"]), int(par.get("dim", 1)), Fraction(par.get("scale", "1")), ball)
    if kind == "padic_gaussian":
        center = PAdicNumber.parse(par["center"]) if par.get("center") else None
        return PAdicGaussian(int(par["prime"]), float(par["s"]), center,
                             int(par.get("shell_cutoff", 40)))
    if kind == "sum":
        return SumMeasure(tuple(measure_from_json(c) for c in par["components"]),
                          tuple(par["weights"]))
    raise ValueError(f"unknown measure kind {kind!r}")
