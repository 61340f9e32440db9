"""Base spaces, regions, exhaustions and the metrics on tuples and n-point sets.

Real points are tuples of floats, p-adic points are tuples of
:class:`PAdicNumber`.  Real distances are floats; p-adic distances are exact
:class:`~fractions.Fraction` powers of ``p``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .assignment import bottleneck_assignment, min_cost_assignment
from .local_field import (DEFAULT_ABSPREC, Ball, PAdicNumber, _diff_val, _pad, coerce_point,
                          power)

# sentinel exponent for coinciding p-adic points (distance 0)
_SAME = 1 << 62


# --------------------------------------------------------------------------
# points and regions
# --------------------------------------------------------------------------

def is_padic_point(x) -> bool:
    if isinstance(x, PAdicNumber):
        return True
    if isinstance(x, (tuple, list)) and x and isinstance(x[0], PAdicNumber):
        return True
    return False


def as_point(x) -> tuple:
    """Normalise scalars and sequences into point tuples."""
    if type(x) is tuple and x and type(x[0]) is PAdicNumber:
        return x
    if isinstance(x, PAdicNumber):
        return (x,)
    if isinstance(x, (int, float, np.floating, np.integer)):
        return (float(x),)
    if isinstance(x, np.ndarray):
        return tuple(float(v) for v in x.ravel())
    x = tuple(x)
    if x and isinstance(x[0], PAdicNumber):
        return x
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``prod [lower_i, upper_i]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise ValueError("bound dimensions differ")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def interval(cls, a: float, b: float) -> Box:
        return cls((a,), (b,))

    @property
    def dim(self) -> int:
        return len(self.lower)

    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lower, self.upper))

    def __contains__(self, x) -> bool:
        x = as_point(x)
        return all(a <= v <= b for v, a, b in zip(x, self.lower, self.upper))

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(len(pts), self.dim)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def intersection(self, other: Box) -> Box | None:
        lo = tuple(max(a, c) for a, c in zip(self.lower, other.lower))
        hi = tuple(min(b, d) for b, d in zip(self.upper, other.upper))
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def overlaps(self, other: Box) -> bool:
        """Interiors intersect (shared faces have measure zero)."""
        return all(max(a, c) < min(b, d) for a, b, c, d in
                   zip(self.lower, self.upper, other.lower, other.upper))

    def contains_box(self, other: Box) -> bool:
        return all(a <= c and d <= b for a, b, c, d in
                   zip(self.lower, self.upper, other.lower, other.upper))

    def to_json(self) -> dict:
        return {"kind": "box", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class RegionUnion:
    """Finite union of pairwise disjoint boxes or balls."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("empty union")
        if not regions_disjoint(parts):
            raise ValueError("union parts must be disjoint")
        object.__setattr__(self, "parts", parts)

    def __contains__(self, x) -> bool:
        return any(x in r for r in self.parts)

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        return np.any([r.contains_array(pts) for r in self.parts], axis=0)

    def to_json(self) -> dict:
        return {"kind": "union", "parts": [region_to_json(r) for r in self.parts]}


Region = Union[Box, Ball, RegionUnion]


def regions_disjoint(regions: Sequence[Region]) -> bool:
    flat = []
    for r in regions:
        flat.extend(r.parts if isinstance(r, RegionUnion) else [r])
    for a, b in itertools.combinations(flat, 2):
        if isinstance(a, Box) and isinstance(b, Box):
            if a.overlaps(b):
                return False
        elif isinstance(a, Ball) and isinstance(b, Ball):
            if a.intersects(b):
                return False
        else:
            raise TypeError("cannot mix real and p-adic regions")
    return True


def region_contains(outer: Region, inner: Region) -> bool:
    if isinstance(inner, RegionUnion):
        return all(region_contains(outer, r) for r in inner.parts)
    if isinstance(outer, RegionUnion):
        return any(region_contains(r, inner) for r in outer.parts)
    if isinstance(outer, Box) and isinstance(inner, Box):
        return outer.contains_box(inner)
    if isinstance(outer, Ball) and isinstance(inner, Ball):
        return outer.contains_ball(inner)
    raise TypeError("cannot mix real and p-adic regions")


def region_to_json(r: Region) -> dict:
    if isinstance(r, Ball):
        return {"kind": "ball", "center": [c.to_text() for c in r.center], "j": r.j}
    return r.to_json()


def region_from_json(d: dict) -> Region:
    kind = d["kind"]
    if kind == "box":
        return Box(tuple(d["lower"]), tuple(d["upper"]))
    if kind == "ball":
        j = int(d["j"])
        # short literals name a representative; pad them with zero digits
        center = tuple(_pad(PAdicNumber.parse(c), j) for c in d["center"])
        return Ball(center, j)
    if kind == "union":
        return RegionUnion(tuple(region_from_json(p) for p in d["parts"]))
    raise ValueError(f"unknown region kind {kind!r}")


# --------------------------------------------------------------------------
# spaces and exhaustions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PointSpace:
    """A flat real space ``R^k`` or a p-adic product ``Q_p^k``."""

    kind: str
    dim: int = 1
    prime: int | None = None
    absprec: int = DEFAULT_ABSPREC

    def __post_init__(self):
        if self.kind not in ("real", "padic"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == "padic" and (self.prime is None or self.prime < 2):
            raise ValueError("p-adic space needs a prime")
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    @classmethod
    def real(cls, dim: int = 1) -> PointSpace:
        return cls("real", dim)

    @classmethod
    def padic(cls, prime: int, dim: int = 1, absprec: int = DEFAULT_ABSPREC) -> PointSpace:
        return cls("padic", dim, prime, absprec)

    @property
    def is_padic(self) -> bool:
        return self.kind == "padic"

    @property
    def default_mode(self) -> str:
        return "max" if self.is_padic else "sum"

    def point(self, x) -> tuple:
        if self.is_padic:
            pt = coerce_point(x, self.prime)
            return tuple(c.truncate(self.absprec) for c in pt)
        return as_point(x)

    def distance(self, x, y):
        return point_distance(self.point(x), self.point(y))

    def origin(self) -> tuple:
        if self.is_padic:
            return tuple(PAdicNumber.zero(self.prime) for _ in range(self.dim))
        return (0.0,) * self.dim

    def to_json(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.is_padic:
            d.update(prime=self.prime, absprec=self.absprec)
        return d


@dataclass(frozen=True)
class Exhaustion:
    """Nested regions ``K_1 ⊂ K_2 ⊂ ...`` of finite measure."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("an exhaustion needs at least one level")
        for a, b in zip(levels, levels[1:]):
            if not region_contains(b, a):
                raise ValueError("exhaustion levels must be nested")
        object.__setattr__(self, "levels", levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, i: int) -> Region:
        return self.levels[i]

    @property
    def clopen(self) -> bool:
        return all(isinstance(r, Ball) for r in self.levels)

    def shell_index(self, x) -> int:
        """Index of the first level containing ``x`` (``len`` if none)."""
        for i, r in enumerate(self.levels):
            if x in r:
                return i
        return len(self.levels)


def make_exhaustion(space: PointSpace, count: int,
                    extents: Sequence[float] | None = None) -> Exhaustion:
    """Balls ``B(0, p**n)`` for ``n < count`` (p-adic) or boxes ``[-e_n, e_n]^k``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if space.is_padic:
        return Exhaustion(tuple(Ball(space.origin(), -n, prime=space.prime)
                                for n in range(count)))
    if extents is None:
        extents = [float(n + 1) for n in range(count)]
    if len(extents) != count or any(b <= a for a, b in zip(extents, extents[1:])):
        raise ValueError("extents must be strictly increasing, one per level")
    return Exhaustion(tuple(Box((-e,) * space.dim, (e,) * space.dim) for e in extents))


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

def point_distance(x, y):
    """Euclidean distance (real) or max-coordinate p-adic absolute value."""
    x, y = as_point(x), as_point(y)
    if len(x) != len(y):
        raise ValueError("point dimension mismatch")
    if x and isinstance(x[0], PAdicNumber):
        return _exp_to_dist(x[0].prime, _point_exp(x, y))
    return math.dist(x, y)


def _point_exp(x, y) -> int:
    best = _SAME
    for a, b in zip(x, y):
        v = _diff_val(a, b)
        if v is not None and v < best:
            best = v
    return best


def _exp_to_dist(p: int, e: int) -> Fraction:
    return Fraction(0) if e == _SAME else power(p, -e)


def _tuples(x, y):
    x = [as_point(a) for a in x]
    y = [as_point(b) for b in y]
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if not x:
        raise ValueError("tuples must be nonempty")
    padic = isinstance(x[0][0], PAdicNumber)
    if any(isinstance(a[0], PAdicNumber) != padic for a in x + y):
        raise ValueError("mixed real and p-adic points")
    return x, y, padic


def _check_mode(mode: str | None, padic: bool) -> None:
    if mode is None:
        return
    if mode not in ("sum", "max"):
        raise ValueError(f"unknown mode {mode!r}")
    if (mode == "max") != padic:
        raise ValueError(f"mode {mode!r} does not match the "
                         f"{'p-adic' if padic else 'real'} space")


def product_metric(x: Sequence, y: Sequence, mode: str | None = None):
    """``sum_i d(x_i, y_i)`` on real tuples, ``max_i d(x_i, y_i)`` on p-adic ones."""
    x, y, padic = _tuples(x, y)
    _check_mode(mode, padic)
    if padic:
        e = min(_point_exp(a, b) for a, b in zip(x, y))
        return _exp_to_dist(x[0][0].prime, e)
    return math.fsum(math.dist(a, b) for a, b in zip(x, y))


def _diag_exp(x) -> int:
    """Largest pairwise exponent, i.e. the smallest pairwise p-adic distance."""
    return max(_point_exp(a, b) for a, b in itertools.combinations(x, 2))


def diagonal_distance(x: Sequence):
    """Distance from an n-tuple to the set of tuples with a repeated entry.

    Merging the closest pair is optimal in both geometries, so this is the
    minimum pairwise distance; ``inf`` when ``n < 2``.
    """
    x = [as_point(a) for a in x]
    if len(x) < 2:
        return math.inf
    if isinstance(x[0][0], PAdicNumber):
        return _exp_to_dist(x[0][0].prime, _diag_exp(x))
    return min(math.dist(a, b) for a, b in itertools.combinations(x, 2))


def delta_metric(x: Sequence, y: Sequence):
    """Bounded metric on tuples of pairwise-distinct points.

    Real: ``d / (d + diag(x) + diag(y))``; p-adic: ``d / max(d, diag(x), diag(y))``.
    """
    x, y, padic = _tuples(x, y)
    if len(x) < 2:
        # the diagonal is empty for n = 1 and the quotient degenerates
        raise ValueError("delta_metric needs tuples of length >= 2")
    if padic:
        p = x[0][0].prime
        ex, ey = _diag_exp(x), _diag_exp(y)
        if ex == _SAME or ey == _SAME:
            raise ValueError("tuple has a repeated point")
        ed = min(_point_exp(a, b) for a, b in zip(x, y))
        if ed == _SAME:
            return Fraction(0)
        return power(p, min(ed, ex, ey) - ed)
    dx, dy = diagonal_distance(x), diagonal_distance(y)
    if dx == 0 or dy == 0:
        raise ValueError("tuple has a repeated point")
    d = math.fsum(math.dist(a, b) for a, b in zip(x, y))
    if d == 0:
        return 0.0
    return d / (d + dx + dy)


def _config_points(g) -> list[tuple]:
    pts = getattr(g, "points", g)
    return [as_point(a) for a in pts]


def matching_metric(g1, g2):
    """Minimum over pairings of the product metric between two n-point sets.

    Min-cost assignment for real sets, bottleneck assignment for p-adic sets.
    """
    a, b = _config_points(g1), _config_points(g2)
    if len(a) != len(b):
        raise ValueError(f"cardinality mismatch: {len(a)} vs {len(b)}")
    if not a:
        return 0.0
    if isinstance(a[0][0], PAdicNumber):
        p = a[0][0].prime
        # minimise the max distance == minimise the negated exponent
        cost = [[-_point_exp(u, v) for v in b] for u in a]
        _, worst = bottleneck_assignment(cost)
        return _exp_to_dist(p, -worst)
    cost = [[math.dist(u, v) for v in b] for u in a]
    _, total = min_cost_assignment(cost)
    return total
