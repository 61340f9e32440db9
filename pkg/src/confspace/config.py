"""Finite configurations, counting maps, cross-sections and permutation cocycles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .local_field import Ball, PAdicNumber, PrecisionError, power
from .space import Exhaustion, Region, _point_exp, _SAME, as_point

# real points closer than this are treated as a collision
COLLISION_TOL = 1e-12


class CollisionError(ValueError):
    """Two points of a configuration coincide."""


def point_key(x: tuple) -> tuple:
    """Canonical total order on points.

    Real points sort lexicographically by coordinates.  p-adic points sort
    coordinate by coordinate on (valuation descending, digits).
    """
    if x and isinstance(x[0], PAdicNumber):
        return tuple(c.sort_key() for c in x)
    return x


def point_to_json(x: tuple):
    if x and isinstance(x[0], PAdicNumber):
        return [c.to_text() for c in x]
    return list(x)


def point_from_json(v) -> tuple:
    if isinstance(v, str):
        return (PAdicNumber.parse(v),)
    if isinstance(v, (int, float)):
        return (float(v),)
    if v and isinstance(v[0], str):
        return tuple(PAdicNumber.parse(c) for c in v)
    return tuple(float(c) for c in v)


def _check_distinct(pts: list[tuple]) -> None:
    if len(pts) < 2:
        return
    if isinstance(pts[0][0], PAdicNumber):
        for a, b in zip(pts, pts[1:]):
            if _point_exp(a, b) == _SAME:
                raise CollisionError(f"repeated point {point_to_json(a)}")
        return
    arr = np.asarray(pts, dtype=float)
    if arr.shape[1] == 1:
        gaps = np.diff(arr[:, 0])
        if gaps.size and gaps.min() < COLLISION_TOL:
            raise CollisionError("two points closer than the collision tolerance")
        return
    diff = arr[:, None, :] - arr[None, :, :]
    d = np.sqrt((diff**2).sum(-1))
    np.fill_diagonal(d, np.inf)
    if d.min() < COLLISION_TOL:
        raise CollisionError("two points closer than the collision tolerance")


class FiniteConfig:
    """An n-point subset of a base space, stored in canonical order."""

    __slots__ = ("points",)

    def __init__(self, points: Iterable = ()):
        pts = sorted((as_point(x) for x in points), key=point_key)
        if pts:
            padic = isinstance(pts[0][0], PAdicNumber)
            if any(isinstance(x[0], PAdicNumber) != padic or len(x) != len(pts[0])
                   for x in pts):
                raise ValueError("configuration mixes point types or dimensions")
        _check_distinct(pts)
        object.__setattr__(self, "points", tuple(pts))

    def __setattr__(self, name, value):
        raise AttributeError("FiniteConfig is immutable")

    @classmethod
    def _trusted(cls, pts: Sequence[tuple]) -> FiniteConfig:
        obj = object.__new__(cls)
        object.__setattr__(obj, "points", tuple(sorted(pts, key=point_key)))
        return obj

    @classmethod
    def empty(cls) -> FiniteConfig:
        return cls._trusted(())

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, x) -> bool:
        return as_point(x) in self.points

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteConfig):
            return NotImplemented
        return self.points == other.points

    def __hash__(self) -> int:
        return hash(self.points)

    def __repr__(self) -> str:
        return f"FiniteConfig({point_to_json_list(self.points)})"

    @property
    def is_padic(self) -> bool:
        return bool(self.points) and isinstance(self.points[0][0], PAdicNumber)

    def to_json(self) -> list:
        return point_to_json_list(self.points)

    @classmethod
    def from_json(cls, data: list) -> FiniteConfig:
        return cls(point_from_json(v) for v in data)

    def as_array(self) -> np.ndarray:
        if self.is_padic:
            raise TypeError("p-adic configurations have no float array form")
        dim = len(self.points[0]) if self.points else 1
        return np.asarray(self.points, dtype=float).reshape(len(self.points), dim)


def point_to_json_list(pts) -> list:
    return [point_to_json(x) for x in pts]


def count(g: FiniteConfig, region: Region) -> int:
    """``N_A(γ) = card(γ ∩ A)``."""
    return sum(1 for x in g.points if x in region)


def restrict(g: FiniteConfig, region: Region) -> FiniteConfig:
    return FiniteConfig._trusted([x for x in g.points if x in region])


def union(g1: FiniteConfig, g2: FiniteConfig) -> FiniteConfig:
    """Superposition of two configurations; they must not share a point."""
    if not g1.points:
        return g2
    if not g2.points:
        return g1
    return FiniteConfig(g1.points + g2.points)


# --------------------------------------------------------------------------
# cross-sections and cocycles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PermutationCocycle:
    """Permutation of ``{0..n-1}``; ``perm[i]`` is the image of ``i``.

    Acts on tuples on the right: ``(x_1..x_n)σ = (x_σ(1)..x_σ(n))``.
    Products compose as maps: ``(σ*τ)(i) = σ(τ(i))``.
    """

    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(i) for i in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"not a permutation: {perm}")
        object.__setattr__(self, "perm", perm)

    @classmethod
    def identity(cls, n: int) -> PermutationCocycle:
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.perm)

    def __mul__(self, other: PermutationCocycle) -> PermutationCocycle:
        if other.n != self.n:
            raise ValueError("degree mismatch")
        return PermutationCocycle(tuple(self.perm[i] for i in other.perm))

    def inverse(self) -> PermutationCocycle:
        inv = [0] * self.n
        for i, k in enumerate(self.perm):
            inv[k] = i
        return PermutationCocycle(tuple(inv))

    def act(self, xs: Sequence) -> tuple:
        return tuple(xs[i] for i in self.perm)

    @property
    def is_identity(self) -> bool:
        return all(i == k for i, k in enumerate(self.perm))

    def sign(self) -> int:
        s, seen = 1, [False] * self.n
        for i in range(self.n):
            if not seen[i]:
                j, length = i, 0
                while not seen[j]:
                    seen[j] = True
                    j = self.perm[j]
                    length += 1
                if length % 2 == 0:
                    s = -s
        return s

    def cycles(self) -> list[tuple[int, ...]]:
        """Non-trivial cycles, 1-based."""
        out, seen = [], [False] * self.n
        for i in range(self.n):
            if seen[i]:
                continue
            cyc, j = [], i
            while not seen[j]:
                seen[j] = True
                cyc.append(j + 1)
                j = self.perm[j]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def __str__(self) -> str:
        cs = self.cycles()
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cs) or "e"


def _order_key(exhaustion: Exhaustion | None):
    if exhaustion is None:
        return point_key
    return lambda x: (exhaustion.shell_index(x), point_key(x))


def cross_section(g: FiniteConfig, exhaustion: Exhaustion | None = None) -> tuple:
    """Canonical ordering of the points of ``g``.

    With ``exhaustion`` the points are ordered by exhaustion shell first.
    """
    if exhaustion is None:
        return g.points
    return tuple(sorted(g.points, key=_order_key(exhaustion)))


def cocycle(psi, g: FiniteConfig, exhaustion: Exhaustion | None = None) -> PermutationCocycle:
    """σ(ψ, γ) defined by ``s(ψ⁻¹γ) = (ψ⁻¹ s(γ)) σ``."""
    s = cross_section(g, exhaustion)
    pre = [as_point(psi.apply_inverse(x)) for x in s]
    key = _order_key(exhaustion)
    keys = [key(x) for x in pre]
    sigma = sorted(range(len(pre)), key=keys.__getitem__)
    try:
        FiniteConfig(pre)
    except CollisionError as exc:
        raise CollisionError("inverse map collapses two points of the configuration") from exc
    return PermutationCocycle(tuple(sigma))


# --------------------------------------------------------------------------
# clopen counting neighbourhoods (p-adic)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CountingNeighborhood:
    """``{γ' : card(γ' ∩ U_i) >= 1 for every i}`` for disjoint balls ``U_i``."""

    center: FiniteConfig
    eta_exponent: int
    balls: tuple

    @property
    def eta(self) -> Fraction:
        return power(self.balls[0].prime, self.eta_exponent)

    def __call__(self, g: FiniteConfig) -> bool:
        return all(count(g, b) >= 1 for b in self.balls)


def counting_neighborhood(g: FiniteConfig, eps) -> CountingNeighborhood:
    """Clopen neighbourhood of ``g`` built from counting conditions only.

    Picks the largest ``η = p**k < eps`` such that the open balls
    ``{d(·, x_i) < η p**-n}`` are pairwise disjoint.  Any accepted
    configuration with ``n`` points lies within matching distance ``< eps``.
    """
    if not g.points:
        raise ValueError("configuration must be nonempty")
    if not g.is_padic:
        raise TypeError("counting neighbourhoods are built on p-adic configurations")
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    p = g.points[0][0].prime
    n = len(g)
    k = math.floor(math.log(float(eps), p)) + 1
    while power(p, k) >= eps:
        k -= 1
    while power(p, k + 1) < eps:
        k += 1
    if n > 1:
        # disjoint iff every pairwise distance p**-e is >= the radius p**(k-n)
        emax = max(_point_exp(a, b) for a, b in itertools.combinations(g.points, 2))
        k = min(k, n - emax)
    j = n - k + 1  # open radius p**(k-n) == closed radius p**(k-n-1)
    try:
        balls = tuple(Ball(x, j, prime=p) for x in g.points)
    except PrecisionError as exc:
        raise ValueError("eps is below the representable granularity") from exc
    return CountingNeighborhood(g, k, balls)
