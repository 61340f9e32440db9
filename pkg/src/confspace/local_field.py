"""Fixed-precision arithmetic in Q_p, balls and Haar volumes.

A nonzero element is stored as ``p**val * unit`` where ``unit`` is an integer
coprime to ``p`` known modulo ``p**prec``.  Zero is exact.  Radii of balls are
kept as integer exponents ``j`` (radius ``p**-j``) so that every comparison is
exact.
"""

from __future__ import annotations

import functools
import itertools
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_PRECISION = 32
# absolute precision of points living in a p-adic space
DEFAULT_ABSPREC = 24

_DIGIT_CHARS = "0123456789abcdefghijklmnopqrstuvwxyz"


class PrecisionError(ArithmeticError):
    """Raised when a result has no significant digit left at the tracked precision."""


def _valuation_int(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    if p == 2:
        return (n & -n).bit_length() - 1
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def power(p: int, k: int) -> Fraction:
    """Exact ``p**k`` for any integer ``k``."""
    return Fraction(p**k) if k >= 0 else Fraction(1, p ** (-k))


class PAdicNumber:
    """Element of Q_p to finite relative precision.

    Instances are immutable.  Equality is equality of representations
    (value *and* precision); use :meth:`congruent` to compare values only.
    """

    __slots__ = ("prime", "val", "unit", "prec")

    prime: int
    val: int
    unit: int
    prec: int

    def __init__(self, prime: int, val: int, unit: int, prec: int = DEFAULT_PRECISION):
        if prime < 2:
            raise ValueError("prime must be >= 2")
        if unit == 0:
            val, prec = 0, 0
        else:
            if prec < 1:
                raise ValueError("precision must be positive")
            unit %= prime**prec
            if unit % prime == 0:
                raise ValueError("unit must be coprime to p (non-canonical form)")
        _set(self, prime, val, unit, prec)

    def __setattr__(self, name, value):
        raise AttributeError("PAdicNumber is immutable")

    # --- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, prime: int) -> PAdicNumber:
        return _make(prime, 0, 0, 0)

    @classmethod
    def from_int(cls, n: int, prime: int, prec: int = DEFAULT_PRECISION) -> PAdicNumber:
        if n == 0:
            return cls.zero(prime)
        v = _valuation_int(n, prime)
        return _make(prime, v, (n // prime**v) % prime**prec, prec)

    @classmethod
    def from_fraction(cls, q, prime: int, prec: int = DEFAULT_PRECISION) -> PAdicNumber:
        """Ingest an integer or rational; p-divisibility of numerator and
        denominator goes into ``val``."""
        q = Fraction(q)
        if q == 0:
            return cls.zero(prime)
        num, den = q.numerator, q.denominator
        vn = _valuation_int(num, prime)
        vd = _valuation_int(den, prime)
        num //= prime**vn
        den //= prime**vd
        mod = prime**prec
        unit = num * pow(den, -1, mod) % mod
        return _make(prime, vn - vd, unit, prec)

    @classmethod
    def from_digits(cls, prime: int, val: int, digits: Sequence[int]) -> PAdicNumber:
        """Build ``p**val * sum(d_i p**i)``; precision is ``len(digits)``."""
        if not digits:
            return cls.zero(prime)
        if any(not 0 <= d < prime for d in digits):
            raise ValueError(f"digits must lie in [0, {prime - 1}]")
        if digits[0] == 0:
            raise ValueError("leading digit must be nonzero (canonical form)")
        unit = 0
        for d in reversed(digits):
            unit = unit * prime + d
        return _make(prime, val, unit, len(digits))

    @classmethod
    def parse(cls, text: str) -> PAdicNumber:
        """Inverse of :meth:`to_text`."""
        try:
            p_s, v_s, d_s = text.split(":")
            prime, val = int(p_s), int(v_s)
        except ValueError as exc:
            raise ValueError(f"malformed p-adic literal {text!r}") from exc
        if prime > len(_DIGIT_CHARS):
            digits = [int(t) for t in d_s.split(".")] if d_s else []
        else:
            digits = [_DIGIT_CHARS.index(c) for c in d_s]
        return cls.from_digits(prime, val, digits)

    # --- views ------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.unit == 0

    @property
    def digits(self) -> tuple[int, ...]:
        """Unit-part expansion, least significant digit first."""
        return _digits(self.unit, self.prime, self.prec)

    @property
    def absprec(self) -> float:
        """Absolute precision: the value is known modulo ``p**absprec``."""
        return float("inf") if self.unit == 0 else self.val + self.prec

    def to_text(self) -> str:
        if self.prime > len(_DIGIT_CHARS):
            body = ".".join(str(d) for d in self.digits)
        else:
            body = "".join(_DIGIT_CHARS[d] for d in self.digits)
        return f"{self.prime}:{self.val}:{body}"

    def to_fraction(self) -> Fraction:
        """Rational value of the stored truncation."""
        return self.unit * power(self.prime, self.val)

    def sort_key(self) -> tuple:
        """Total order: zero first, then larger valuation first, then digits."""
        if self.unit == 0:
            return (0,)
        return (1, -self.val, self.digits)

    def __abs__(self) -> Fraction:
        return padic_abs(self)

    def __repr__(self) -> str:
        return f"PAdicNumber({self.to_text()!r})"

    def __str__(self) -> str:
        return self.to_text()

    def __eq__(self, other) -> bool:
        if not isinstance(other, PAdicNumber):
            return NotImplemented
        return (self.prime, self.val, self.unit, self.prec) == (
            other.prime, other.val, other.unit, other.prec)

    def __hash__(self) -> int:
        return hash((self.prime, self.val, self.unit, self.prec))

    def congruent(self, other: PAdicNumber) -> bool:
        """Equal values at the shared precision."""
        return self.prime == other.prime and _diff_val(self, other) is None

    # --- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> PAdicNumber:
        if isinstance(other, PAdicNumber):
            if other.prime != self.prime:
                raise ValueError(f"prime mismatch: {self.prime} vs {other.prime}")
            return other
        if isinstance(other, (int, Fraction)):
            return PAdicNumber.from_fraction(other, self.prime, self.prec or DEFAULT_PRECISION)
        return NotImplemented

    def __neg__(self) -> PAdicNumber:
        if self.unit == 0:
            return self
        return _make(self.prime, self.val, -self.unit % self.prime**self.prec, self.prec)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return padic_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return padic_add(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return padic_add(other, -self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return padic_mul(self, other)

    __rmul__ = __mul__

    def truncate(self, absprec: int) -> PAdicNumber:
        """Reduce modulo ``p**absprec`` (never adds digits)."""
        if self.unit == 0:
            return self
        if self.val >= absprec:
            return PAdicNumber.zero(self.prime)
        prec = absprec - self.val
        if prec >= self.prec:
            return self
        return _make(self.prime, self.val, self.unit % self.prime**prec, prec)

    def shift(self, k: int) -> PAdicNumber:
        """Multiply by ``p**k`` (exact, precision preserved)."""
        if self.unit == 0:
            return self
        return _make(self.prime, self.val + k, self.unit, self.prec)


@functools.lru_cache(maxsize=1 << 16)
def _digits(u: int, p: int, prec: int) -> tuple[int, ...]:
    out = []
    for _ in range(prec):
        u, r = divmod(u, p)
        out.append(r)
    return tuple(out)


def _set(obj, prime, val, unit, prec):
    object.__setattr__(obj, "prime", prime)
    object.__setattr__(obj, "val", val)
    object.__setattr__(obj, "unit", unit)
    object.__setattr__(obj, "prec", prec)


def _make(prime: int, val: int, unit: int, prec: int) -> PAdicNumber:
    obj = object.__new__(PAdicNumber)
    _set(obj, prime, val, unit, prec)
    return obj


def _pad(x: PAdicNumber, absprec: int) -> PAdicNumber:
    """Extend ``x`` with zero digits up to ``absprec`` (a representative choice)."""
    if x.unit == 0 or x.val + x.prec >= absprec:
        return x
    return _make(x.prime, x.val, x.unit, absprec - x.val)


def padic_abs(x: PAdicNumber) -> Fraction:
    """``|x|_p = p**-val``; 0 for zero."""
    if x.unit == 0:
        return Fraction(0)
    return power(x.prime, -x.val)


def padic_add(x: PAdicNumber, y: PAdicNumber) -> PAdicNumber:
    if x.prime != y.prime:
        raise ValueError(f"prime mismatch: {x.prime} vs {y.prime}")
    if x.unit == 0:
        return y
    if y.unit == 0:
        return x
    p = x.prime
    v = min(x.val, y.val)
    a = min(x.val + x.prec, y.val + y.prec)
    mod = p ** (a - v)
    s = (x.unit * p ** (x.val - v) + y.unit * p ** (y.val - v)) % mod
    if s == 0:
        # zero modulo p**a; the only zero we represent is the exact one
        return PAdicNumber.zero(p)
    w = _valuation_int(s, p)
    return _make(p, v + w, s // p**w, a - v - w)


def padic_mul(x: PAdicNumber, y: PAdicNumber) -> PAdicNumber:
    if x.prime != y.prime:
        raise ValueError(f"prime mismatch: {x.prime} vs {y.prime}")
    if x.unit == 0 or y.unit == 0:
        return PAdicNumber.zero(x.prime)
    prec = min(x.prec, y.prec)
    return _make(x.prime, x.val + y.val, x.unit * y.unit % x.prime**prec, prec)


def _diff_val(x: PAdicNumber, y: PAdicNumber) -> int | None:
    """Valuation of ``x - y``; ``None`` when the values coincide."""
    if x.unit == 0:
        return None if y.unit == 0 else y.val
    if y.unit == 0:
        return x.val
    if x.val != y.val:
        return min(x.val, y.val)
    if x.prec == y.prec:
        if x.unit == y.unit:
            return None
        return x.val + _valuation_int(x.unit - y.unit, x.prime)
    a = min(x.prec, y.prec)
    d = (x.unit - y.unit) % x.prime**a
    if d == 0:
        return None
    return x.val + _valuation_int(d, x.prime)


def distance_exponent(x: Sequence[PAdicNumber], y: Sequence[PAdicNumber]) -> int | None:
    """Exponent ``e`` with ``max_i |x_i - y_i| = p**-e`` (``None`` if x == y)."""
    best = None
    for a, b in zip(x, y):
        v = _diff_val(a, b)
        if v is not None and (best is None or v < best):
            best = v
    return best


def exponent_to_distance(p: int, e: int | None) -> Fraction:
    return Fraction(0) if e is None else power(p, -e)


def coerce_point(x, prime: int | None = None) -> tuple[PAdicNumber, ...]:
    if isinstance(x, PAdicNumber):
        return (x,)
    if isinstance(x, (int, Fraction)):
        if prime is None:
            raise ValueError("prime required to coerce a rational into Q_p")
        return (PAdicNumber.from_fraction(x, prime),)
    return tuple(c if isinstance(c, PAdicNumber) else PAdicNumber.from_fraction(c, prime)
                 for c in x)


class Ball:
    """Closed ball ``{x : max_i |x_i - c_i| <= p**-j}`` in Q_p^k.

    Open balls are normalised on construction: the open ball of radius
    ``p**-j`` is the closed ball of radius ``p**-(j+1)``.
    """

    __slots__ = ("prime", "center", "j")

    def __init__(self, center, j: int, closed: bool = True, prime: int | None = None):
        if isinstance(center, PAdicNumber):
            prime = center.prime
        elif prime is None:
            prime = next(c.prime for c in center)
        center = coerce_point(center, prime)
        if any(c.prime != prime for c in center):
            raise ValueError("center coordinates must share one prime")
        j = int(j) if closed else int(j) + 1
        for c in center:
            if c.unit and c.val + c.prec < j:
                raise PrecisionError("center precision is coarser than the ball radius")
        object.__setattr__(self, "prime", prime)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "j", j)

    def __setattr__(self, name, value):
        raise AttributeError("Ball is immutable")

    @classmethod
    def with_radius(cls, center, radius, closed: bool = True, prime: int | None = None) -> Ball:
        """Accept a radius value; it must lie in the valuation group."""
        if isinstance(center, PAdicNumber):
            prime = center.prime
        elif prime is None:
            prime = next(c.prime for c in center)
        return cls(center, radius_exponent(radius, prime), closed=closed, prime=prime)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def radius(self) -> Fraction:
        return power(self.prime, -self.j)

    def __contains__(self, x) -> bool:
        x = coerce_point(x, self.prime)
        if len(x) != len(self.center):
            raise ValueError("dimension mismatch")
        e = distance_exponent(x, self.center)
        return e is None or e >= self.j

    def contains_ball(self, other: Ball) -> bool:
        return other.j >= self.j and other.center in self

    def intersects(self, other: Ball) -> bool:
        big, small = (self, other) if self.j <= other.j else (other, self)
        return small.center in big

    def children(self) -> Iterator[Ball]:
        """The ``p**k`` disjoint sub-balls of radius ``p**-(j+1)``."""
        p = self.prime
        step = PAdicNumber.from_int(1, p).shift(self.j)
        # any representative serves as a center; pad with zero digits so
        # that repeated refinement never runs out of precision
        base = tuple(_pad(c, self.j + DEFAULT_PRECISION) for c in self.center)
        for ts in itertools.product(range(p), repeat=self.dim):
            yield Ball(tuple(c + step * t if t else c for c, t in zip(base, ts)),
                       self.j + 1, prime=p)

    def volume(self) -> Fraction:
        return haar_volume(self)

    def sample(self, rng: np.random.Generator, size: int, prec: int = DEFAULT_PRECISION
               ) -> list[tuple[PAdicNumber, ...]]:
        """Haar-uniform points of the ball, ``prec`` digits below the radius."""
        p = self.prime
        digits = rng.integers(0, p, size=(size, self.dim, prec))
        weights = np.array([p**i for i in range(prec)], dtype=object)
        out = []
        for row in digits:
            pt = []
            for c, ds in zip(self.center, row):
                u = int(np.dot(ds.astype(object), weights))
                off = PAdicNumber.from_int(u, p, prec).shift(self.j) if u else None
                pt.append(c + off if off is not None else c)
            out.append(tuple(pt))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ball):
            return NotImplemented
        return self.prime == other.prime and self.j == other.j and \
            len(self.center) == len(other.center) and self.center in other

    def __hash__(self) -> int:
        return hash((self.prime, self.j, len(self.center)))

    def __repr__(self) -> str:
        cs = ",".join(c.to_text() for c in self.center)
        return f"Ball(center=({cs}), radius={self.prime}^{-self.j})"


def radius_exponent(radius, prime: int) -> int:
    """Return ``j`` with ``radius == p**-j``; reject radii outside the valuation group."""
    r = Fraction(radius)
    if r <= 0:
        raise ValueError("radius must be positive")
    j = 0
    while r > 1:
        if r.numerator % prime or r.denominator != 1:
            raise ValueError(f"radius {radius} is not a power of {prime}")
        r /= prime
        j -= 1
    while r < 1:
        if r.numerator != 1 or r.denominator % prime:
            raise ValueError(f"radius {radius} is not a power of {prime}")
        r *= prime
        j += 1
    if r != 1:
        raise ValueError(f"radius {radius} is not a power of {prime}")
    return j


def haar_volume(b: Ball) -> Fraction:
    """Haar volume normalised by unit mass on the unit ball: ``p**(-j*k)``."""
    return power(b.prime, -b.j * b.dim)


def balls_disjoint(balls: Iterable[Ball]) -> bool:
    balls = list(balls)
    return not any(a.intersects(b) for a, b in itertools.combinations(balls, 2))
