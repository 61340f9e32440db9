"""Invertible transformations of the base space.

Real maps act on one coordinate axis (piecewise-affine bijections and
closed-form flow steps) or translate; p-adic maps are ball permutations by
center translation and translations.  Every map knows its inverse and the
volume factor ``|det D(ψ⁻¹)(x)|`` needed for Radon–Nikodym factors.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .local_field import DEFAULT_ABSPREC, Ball, PAdicNumber, _pad, balls_disjoint
from .space import Box, as_point, region_from_json, region_to_json


class Transformation:
    """Base class; subclasses implement the point maps."""

    kind = "abstract"
    is_isometry = False

    def apply(self, x) -> tuple:
        raise NotImplementedError

    def apply_inverse(self, x) -> tuple:
        return self.inverse().apply(x)

    def inverse(self) -> Transformation:
        raise NotImplementedError

    def inverse_jacobian(self, x):
        """``|det D(ψ⁻¹)(x)|``."""
        raise NotImplementedError

    @property
    def support(self):
        """Regions outside which the map is the identity; ``None`` if unbounded."""
        return ()

    # vectorised real paths; p-adic maps fall back to loops
    def apply_array(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self.apply(tuple(r)) for r in np.asarray(pts)])

    def apply_inverse_array(self, pts: np.ndarray) -> np.ndarray:
        return self.inverse().apply_array(pts)

    def inverse_jacobian_array(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self.inverse_jacobian(tuple(r)) for r in np.asarray(pts)], dtype=float)

    def __matmul__(self, other: Transformation) -> Transformation:
        return compose(self, other)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Identity(Transformation):
    kind = "identity"
    is_isometry = True

    def apply(self, x) -> tuple:
        return as_point(x)

    def apply_inverse(self, x) -> tuple:
        return as_point(x)

    def inverse(self) -> Transformation:
        return self

    def inverse_jacobian(self, x):
        return 1

    def apply_array(self, pts):
        return np.array(pts, dtype=float)

    def apply_inverse_array(self, pts):
        return np.array(pts, dtype=float)

    def inverse_jacobian_array(self, pts):
        return np.ones(len(pts))

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": {}, "children": []}


# --------------------------------------------------------------------------
# real maps
# --------------------------------------------------------------------------

class _AxisMap(Transformation):
    """A map acting on coordinate ``axis`` only."""

    axis: int

    def _f(self, t: float) -> float:
        raise NotImplementedError

    def _f_array(self, t: np.ndarray) -> np.ndarray:
        return np.array([self._f(v) for v in t])

    def _inv_slope(self, t: float) -> float:
        raise NotImplementedError

    def _inv_slope_array(self, t: np.ndarray) -> np.ndarray:
        return np.array([self._inv_slope(v) for v in t])

    def apply(self, x) -> tuple:
        x = as_point(x)
        return x[:self.axis] + (self._f(x[self.axis]),) + x[self.axis + 1:]

    def inverse_jacobian(self, x) -> float:
        return self._inv_slope(as_point(x)[self.axis])

    def apply_array(self, pts):
        out = np.array(pts, dtype=float).reshape(len(pts), -1)
        out[:, self.axis] = self._f_array(out[:, self.axis])
        return out

    def inverse_jacobian_array(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(len(pts), -1)
        return self._inv_slope_array(pts[:, self.axis])

    def _slab(self, lo: float, hi: float, dim: int = 1):
        lower = [-math.inf] * dim
        upper = [math.inf] * dim
        lower[self.axis], upper[self.axis] = lo, hi
        return (Box(tuple(lower), tuple(upper)),)


@dataclass(frozen=True, eq=False)
class PiecewiseAffine(_AxisMap):
    """Continuous increasing piecewise-affine bijection, identity outside
    ``[knots[0], knots[-1]]`` (so the end knots must be fixed points)."""

    knots: tuple
    images: tuple
    axis: int = 0
    kind = "real_piecewise_affine"

    def __post_init__(self):
        k = tuple(float(v) for v in self.knots)
        im = tuple(float(v) for v in self.images)
        if len(k) != len(im) or len(k) < 2:
            raise ValueError("need matching knot and image lists of length >= 2")
        if any(b <= a for a, b in zip(k, k[1:])) or any(b <= a for a, b in zip(im, im[1:])):
            raise ValueError("knots and images must be strictly increasing")
        if k[0] != im[0] or k[-1] != im[-1]:
            raise ValueError("end knots must be fixed so the map is the identity outside")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "images", im)
        slopes = tuple((im[i + 1] - im[i]) / (k[i + 1] - k[i]) for i in range(len(k) - 1))
        object.__setattr__(self, "_slopes", slopes)

    @property
    def slopes(self) -> tuple:
        return self._slopes

    def _f(self, t: float) -> float:
        k = self.knots
        if t <= k[0] or t >= k[-1]:
            return t
        i = bisect.bisect_right(k, t) - 1
        return self.images[i] + (t - k[i]) * self._slopes[i]

    def _f_array(self, t):
        k = np.asarray(self.knots)
        inside = (t > k[0]) & (t < k[-1])
        i = np.clip(np.searchsorted(k, t, side="right") - 1, 0, len(k) - 2)
        val = np.asarray(self.images)[i] + (t - k[i]) * np.asarray(self._slopes)[i]
        return np.where(inside, val, t)

    def _inv_slope(self, t: float) -> float:
        im = self.images
        if t < im[0] or t >= im[-1]:
            return 1.0
        i = bisect.bisect_right(im, t) - 1
        return 1.0 / self._slopes[i]

    def _inv_slope_array(self, t):
        im = np.asarray(self.images)
        inside = (t >= im[0]) & (t < im[-1])
        i = np.clip(np.searchsorted(im, t, side="right") - 1, 0, len(im) - 2)
        return np.where(inside, 1.0 / np.asarray(self._slopes)[i], 1.0)

    def inverse(self) -> PiecewiseAffine:
        return PiecewiseAffine(self.images, self.knots, self.axis)

    def apply_inverse(self, x) -> tuple:
        return self.inverse().apply(x)

    def apply_inverse_array(self, pts):
        return self.inverse().apply_array(pts)

    @property
    def support(self):
        return self._slab(self.knots[0], self.knots[-1], self.axis + 1)

    @property
    def interval(self) -> tuple[float, float]:
        return self.knots[0], self.knots[-1]

    @property
    def breakpoints(self) -> tuple:
        return tuple(sorted(set(self.knots) | set(self.images)))

    def to_json(self) -> dict:
        return {"kind": self.kind, "children": [],
                "params": {"knots": list(self.knots), "images": list(self.images),
                           "axis": self.axis}}


@dataclass(frozen=True, eq=False)
class FlowStep(_AxisMap):
    """Time-1 map of the hat vector field ``v`` on ``[a, b]`` peaking at ``peak``.

    ``v(t) = speed*(t-a)/(peak-a)`` on ``[a, peak]`` and
    ``speed*(b-t)/(b-peak)`` on ``[peak, b]``; both pieces are linear, so the
    flow has a closed form and the inverse is the flow of ``-v``.
    """

    a: float
    peak: float
    b: float
    speed: float
    axis: int = 0
    kind = "real_flow_step"

    def __post_init__(self):
        if not self.a < self.peak < self.b:
            raise ValueError("need a < peak < b")

    @property
    def _k1(self) -> float:
        return abs(self.speed) / (self.peak - self.a)

    @property
    def _k2(self) -> float:
        return abs(self.speed) / (self.b - self.peak)

    def _flow(self, t: float) -> tuple[float, float]:
        """Image and derivative of the time-1 map at ``t``."""
        a, m, b = self.a, self.peak, self.b
        if t <= a or t >= b or self.speed == 0:
            return t, 1.0
        k1, k2 = self._k1, self._k2
        if self.speed > 0:
            if t >= m:
                e = math.exp(-k2)
                return b - (b - t) * e, e
            T = math.log((m - a) / (t - a)) / k1
            if T >= 1:
                e = math.exp(k1)
                return a + (t - a) * e, e
            e = math.exp(-k2 * (1 - T))
            return b - (b - m) * e, (b - m) * e * k2 / (k1 * (t - a))
        if t <= m:
            e = math.exp(-k1)
            return a + (t - a) * e, e
        T = math.log((b - m) / (b - t)) / k2
        if T >= 1:
            e = math.exp(k2)
            return b - (b - t) * e, e
        e = math.exp(-k1 * (1 - T))
        return a + (m - a) * e, (m - a) * e * k1 / (k2 * (b - t))

    def _f(self, t: float) -> float:
        return self._flow(t)[0]

    def _inv_slope(self, t: float) -> float:
        return self.inverse()._flow(t)[1]

    def derivative(self, t: float) -> float:
        return self._flow(t)[1]

    def inverse(self) -> FlowStep:
        return FlowStep(self.a, self.peak, self.b, -self.speed, self.axis)

    @property
    def support(self):
        return self._slab(self.a, self.b, self.axis + 1)

    @property
    def interval(self) -> tuple[float, float]:
        return self.a, self.b

    @property
    def breakpoints(self) -> tuple:
        return (self.a, self.peak, self.b)

    def to_json(self) -> dict:
        return {"kind": self.kind, "children": [],
                "params": {"a": self.a, "peak": self.peak, "b": self.b,
                           "speed": self.speed, "axis": self.axis}}


@dataclass(frozen=True, eq=False)
class Translation(Transformation):
    """``x ↦ x + shift`` on R^k or Q_p^k."""

    shift: tuple
    absprec: int = DEFAULT_ABSPREC
    kind = "translation"
    is_isometry = True

    def __post_init__(self):
        object.__setattr__(self, "shift", as_point(self.shift))

    @property
    def is_padic(self) -> bool:
        return isinstance(self.shift[0], PAdicNumber)

    def apply(self, x) -> tuple:
        x = as_point(x)
        if self.is_padic:
            return tuple((a + z).truncate(self.absprec) for a, z in zip(x, self.shift))
        return tuple(a + z for a, z in zip(x, self.shift))

    def inverse(self) -> Translation:
        return Translation(tuple(-z for z in self.shift), self.absprec)

    def inverse_jacobian(self, x):
        return 1

    def apply_array(self, pts):
        return np.asarray(pts, dtype=float) + np.asarray(self.shift)

    def inverse_jacobian_array(self, pts):
        return np.ones(len(pts))

    @property
    def support(self):
        return None

    def to_json(self) -> dict:
        if self.is_padic:
            shift = [z.to_text() for z in self.shift]
        else:
            shift = list(self.shift)
        return {"kind": self.kind, "children": [],
                "params": {"shift": shift, "absprec": self.absprec}}


# --------------------------------------------------------------------------
# p-adic ball permutations
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BallPermutation(Transformation):
    """Sends ball ``i`` onto ball ``perm[i]`` by center translation.

    Balls must be pairwise disjoint with a common radius; the map is the
    identity off their union and preserves Haar measure.
    """

    balls: tuple
    perm: tuple
    absprec: int = DEFAULT_ABSPREC
    kind = "padic_ball_permutation"
    is_isometry = True

    def __post_init__(self):
        balls = tuple(self.balls)
        perm = tuple(int(i) for i in self.perm)
        if sorted(perm) != list(range(len(balls))):
            raise ValueError("perm must permute the ball indices")
        if len({b.j for b in balls}) > 1:
            raise ValueError("balls must have equal radii")
        if not balls_disjoint(balls):
            raise ValueError("balls must be pairwise disjoint")
        for b in balls:
            if any(c.unit and c.val + c.prec < self.absprec for c in b.center):
                raise ValueError("ball centers must carry the space's absolute precision")
        object.__setattr__(self, "balls", balls)
        object.__setattr__(self, "perm", perm)

    def apply(self, x) -> tuple:
        x = as_point(x)
        for i, b in enumerate(self.balls):
            if x in b:
                k = self.perm[i]
                if k == i:
                    return x
                c, c2 = b.center, self.balls[k].center
                return tuple((a - u + w).truncate(self.absprec) for a, u, w in zip(x, c, c2))
        return x

    def inverse(self) -> BallPermutation:
        inv = [0] * len(self.perm)
        for i, k in enumerate(self.perm):
            inv[k] = i
        return BallPermutation(self.balls, tuple(inv), self.absprec)

    def inverse_jacobian(self, x):
        return 1

    @property
    def support(self):
        moved = tuple(b for i, b in enumerate(self.balls) if self.perm[i] != i)
        return moved

    def to_json(self) -> dict:
        return {"kind": self.kind, "children": [],
                "params": {"balls": [region_to_json(b) for b in self.balls],
                           "perm": list(self.perm), "absprec": self.absprec}}


def build_ball_permutation(balls: Sequence[Ball], perm: Sequence[int],
                           absprec: int = DEFAULT_ABSPREC) -> Transformation:
    if all(i == k for i, k in enumerate(perm)):
        # still validate the balls
        BallPermutation(tuple(balls), tuple(perm), absprec)
        return Identity()
    return BallPermutation(tuple(balls), tuple(perm), absprec)


def random_ball_permutation(rng: np.random.Generator, window: Ball, depth: int = 1,
                            count: int = 2, absprec: int = DEFAULT_ABSPREC) -> Transformation:
    """Random non-identity permutation of ``count`` distinct sub-balls of ``window``.

    The sub-balls sit ``depth`` levels below ``window``; each is reached by
    descending through uniformly chosen children.
    """
    total = window.prime ** (window.dim * depth)
    if not 2 <= count <= total:
        raise ValueError(f"count must lie in [2, {total}]")
    chosen: dict = {}
    while len(chosen) < count:
        b = window
        for _ in range(depth):
            kids = list(b.children())
            b = kids[int(rng.integers(len(kids)))]
        chosen.setdefault(b, None)
    balls = tuple(chosen)
    perm = tuple(range(count))
    while perm == tuple(range(count)):
        perm = tuple(int(i) for i in rng.permutation(count))
    return BallPermutation(balls, perm, absprec)


def build_piecewise_affine(knots: Sequence[float], images: Sequence[float],
                           axis: int = 0) -> Transformation:
    if tuple(map(float, knots)) == tuple(map(float, images)):
        PiecewiseAffine(tuple(knots), tuple(images), axis)
        return Identity()
    return PiecewiseAffine(tuple(knots), tuple(images), axis)


# --------------------------------------------------------------------------
# composition
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Composite(Transformation):
    """``outer ∘ inner``: apply ``inner`` first."""

    outer: Transformation
    inner: Transformation
    kind = "composite"

    @property
    def is_isometry(self) -> bool:
        return self.outer.is_isometry and self.inner.is_isometry

    def apply(self, x) -> tuple:
        return self.outer.apply(self.inner.apply(x))

    def apply_inverse(self, x) -> tuple:
        return self.inner.apply_inverse(self.outer.apply_inverse(x))

    def inverse(self) -> Composite:
        return Composite(self.inner.inverse(), self.outer.inverse())

    def inverse_jacobian(self, x):
        y = self.outer.apply_inverse(x)
        return self.inner.inverse_jacobian(y) * self.outer.inverse_jacobian(x)

    def apply_array(self, pts):
        return self.outer.apply_array(self.inner.apply_array(pts))

    def apply_inverse_array(self, pts):
        return self.inner.apply_inverse_array(self.outer.apply_inverse_array(pts))

    def inverse_jacobian_array(self, pts):
        y = self.outer.apply_inverse_array(pts)
        return self.inner.inverse_jacobian_array(y) * self.outer.inverse_jacobian_array(pts)

    @property
    def support(self):
        a, b = self.outer.support, self.inner.support
        if a is None or b is None:
            return None
        return tuple(a) + tuple(b)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": {},
                "children": [self.outer.to_json(), self.inner.to_json()]}


def compose(psi: Transformation, phi: Transformation) -> Transformation:
    """``x ↦ psi(phi(x))``."""
    if isinstance(phi, Identity):
        return psi
    if isinstance(psi, Identity):
        return phi
    return Composite(psi, phi)


def inverse(psi: Transformation) -> Transformation:
    return psi.inverse()


def apply(psi: Transformation, x) -> tuple:
    return psi.apply(x)


def outside_support(psi: Transformation, x) -> bool:
    sup = psi.support
    if sup is None:
        return False
    return not any(x in r for r in sup)


def transformation_from_json(d: dict) -> Transformation:
    """Rebuild a map from its ``{kind, params, children}`` AST."""
    kind = d.get("kind")
    params = d.get("params", {})
    children = d.get("children", [])
    if kind == "identity":
        return Identity()
    if kind == "real_piecewise_affine":
        return PiecewiseAffine(tuple(params["knots"]), tuple(params["images"]),
                               int(params.get("axis", 0)))
    if kind == "real_flow_step":
        return FlowStep(float(params["a"]), float(params["peak"]), float(params["b"]),
                        float(params["speed"]), int(params.get("axis", 0)))
    if kind == "translation":
        shift = params["shift"]
        if shift and isinstance(shift[0], str):
            shift = tuple(PAdicNumber.parse(z) for z in shift)
        return Translation(tuple(shift), int(params.get("absprec", DEFAULT_ABSPREC)))
    if kind == "padic_ball_permutation":
        absprec = int(params.get("absprec", DEFAULT_ABSPREC))
        # a ball center is any representative: pad short literals with zero digits
        balls = tuple(Ball(tuple(_pad(c, absprec) for c in b.center), b.j, prime=b.prime)
                      for b in map(region_from_json, params["balls"]))
        return BallPermutation(balls, tuple(params["perm"]), absprec)
    if kind == "composite":
        if len(children) < 2:
            raise ValueError("composite needs at least two children")
        maps = [transformation_from_json(c) for c in children]
        out = maps[-1]
        for m in reversed(maps[:-1]):
            out = Composite(m, out)
        return out
    raise ValueError(f"unknown transformation kind {kind!r}")
