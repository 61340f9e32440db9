"""Finite realisations of the Poisson-space representations.

``U(ψ) f(γ) = ρ^{1/2}(ψ, γ) f(ψ⁻¹γ)`` acts on functions of configurations;
``V^q(ψ) f(γ) = ρ^{1/2}(ψ, γ) q(σ(ψ, γ)) f(ψ⁻¹γ)`` acts on W-valued
functions of n-point configurations, twisted by a representation ``q`` of
the symmetric group through the permutation cocycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import FiniteConfig, PermutationCocycle, cocycle, count
from .local_field import PAdicNumber, padic_abs
from .poisson import (FixedCountLaw, PoissonLaw, poisson_sample, rho_poisson,
                      spawn_generators, spherical_function, split_count)
from .transform import Identity, Transformation, compose


# --------------------------------------------------------------------------
# dictionary functions
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DictionaryFunction:
    """A bounded symmetric function of a configuration.

    Kinds: ``constant`` (value), ``count_indicator`` (region, k),
    ``count`` (region), ``exp_linear`` (``prod g(x)`` for a bounded ``g``),
    ``symmetric_poly`` (power sum of degree l, of |x|_p for p-adic points),
    ``vector`` (W-valued, built from a callable).
    """

    kind: str
    params: dict = field(default_factory=dict)
    fn: Callable | None = None

    @classmethod
    def constant(cls, value=1) -> DictionaryFunction:
        return cls("constant", {"value": value})

    @classmethod
    def count_indicator(cls, region, k: int) -> DictionaryFunction:
        return cls("count_indicator", {"region": region, "k": int(k)})

    @classmethod
    def count(cls, region) -> DictionaryFunction:
        return cls("count", {"region": region})

    @classmethod
    def exp_linear(cls, g: Callable, label: str = "g") -> DictionaryFunction:
        return cls("exp_linear", {"g": label}, g)

    @classmethod
    def region_weight(cls, region, value: float) -> DictionaryFunction:
        """``prod g`` with ``g = value`` on ``region`` and 1 elsewhere."""
        return cls("exp_linear", {"region": region, "value": value},
                   lambda x: value if x in region else 1.0)

    @classmethod
    def power_sum(cls, degree: int) -> DictionaryFunction:
        return cls("symmetric_poly", {"degree": int(degree)})

    @classmethod
    def vector(cls, fn: Callable[[FiniteConfig], np.ndarray], dim: int,
               label: str = "vector") -> DictionaryFunction:
        return cls("vector", {"dim": int(dim), "label": label}, fn)

    def __call__(self, g: FiniteConfig):
        k = self.kind
        if k == "constant":
            return self.params["value"]
        if k == "count_indicator":
            return 1 if count(g, self.params["region"]) == self.params["k"] else 0
        if k == "count":
            return count(g, self.params["region"])
        if k == "exp_linear":
            out = 1.0
            for x in g:
                out *= self.fn(x)
            return out
        if k == "symmetric_poly":
            d = self.params["degree"]
            return math.fsum(_coord_power(x, d) for x in g)
        if k == "vector":
            return np.asarray(self.fn(g), dtype=float)
        raise ValueError(f"unknown dictionary kind {k!r}")

    def __repr__(self) -> str:
        shown = {k: v for k, v in self.params.items() if k != "region"}
        return f"{self.kind}({shown})"


def _coord_power(x: tuple, d: int) -> float:
    if isinstance(x[0], PAdicNumber):
        return math.fsum(float(padic_abs(c)) ** d for c in x)
    return math.fsum(c ** d for c in x)


# --------------------------------------------------------------------------
# symmetric group representations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricGroupRep:
    """Trivial, sign or permutation-matrix representation of Σ_n."""

    n: int
    kind: str = "trivial"

    def __post_init__(self):
        if self.kind not in ("trivial", "sign", "permutation_matrices"):
            raise ValueError(f"unsupported representation {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def dim(self) -> int:
        return self.n if self.kind == "permutation_matrices" else 1

    def matrix(self, s: PermutationCocycle) -> np.ndarray:
        if s.n != self.n:
            raise ValueError("degree mismatch")
        if self.kind == "trivial":
            return np.ones((1, 1), dtype=np.int64)
        if self.kind == "sign":
            return np.full((1, 1), s.sign(), dtype=np.int64)
        m = np.zeros((self.n, self.n), dtype=np.int64)
        for i, k in enumerate(s.perm):
            m[k, i] = 1  # e_i -> e_{σ(i)}
        return m


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------

def _sqrt(r):
    """Square root that keeps exact ones exact."""
    if r == 1:
        return 1
    return math.sqrt(float(r))


@dataclass(frozen=True, eq=False)
class RepOperator:
    """``U(ψ)`` (no ``q``) or ``V^q(ψ)`` on n-point configurations."""

    law: object
    psi: Transformation
    q: SymmetricGroupRep | None = None
    exhaustion: object = None

    @property
    def base(self):
        return self.law.base


def apply_U(op: RepOperator, f: Callable, g: FiniteConfig):
    """``ρ^{1/2}(ψ, γ) f(ψ⁻¹γ)``."""
    pre, a, _ = _transport(RepOperator(op.law, op.psi), g)
    return _transported_value(f, pre, a, None)


def apply_Vq(op: RepOperator, f: Callable, g: FiniteConfig):
    """``ρ^{1/2}(ψ, γ) q(σ(ψ, γ)) f(ψ⁻¹γ)`` for W-valued ``f``."""
    if op.q is None:
        raise ValueError("V^q needs a symmetric-group representation")
    if len(g) != op.q.n:
        raise ValueError(f"configuration has {len(g)} points, expected {op.q.n}")
    if isinstance(op.psi, Identity):
        return f(g)
    pre, a, mat = _transport(op, g)
    return _transported_value(f, pre, a, mat)


def _scale(a, v):
    if a == 1:
        return v
    return a * v


def operator_image(op: RepOperator, f: Callable) -> Callable:
    """The function ``U(ψ) f`` (or ``V^q(ψ) f``)."""
    if op.q is None:
        return lambda g: apply_U(op, f, g)
    return lambda g: apply_Vq(op, f, g)


# --------------------------------------------------------------------------
# estimates and checks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    samples: int

    def within(self, target: float, k: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.value - target) <= max(k * self.stderr, floor)


def _mean_se(vals: np.ndarray) -> tuple[float, float]:
    vals = np.asarray(vals, dtype=float)
    if len(vals) < 2:
        return float(vals.mean()) if len(vals) else math.nan, math.inf
    return float(vals.mean()), float(vals.std(ddof=1)) / math.sqrt(len(vals))


def _pair(a, b) -> float:
    """Euclidean pairing on W (scalars are 1-dimensional)."""
    # fsum is correctly rounded, so permuting coordinates cannot change the value
    prods = np.atleast_1d(np.asarray(a, dtype=float)) * np.atleast_1d(np.asarray(b, dtype=float))
    return math.fsum(prods.tolist())


def sample_configs(law, samples: int, seed: int, shards: int = 1) -> list[FiniteConfig]:
    """Configurations of a Poisson or fixed-count law, merged in shard order."""
    out = []
    for rng, n in zip(spawn_generators(seed, shards), split_count(samples, shards)):
        if isinstance(law, FixedCountLaw):
            out.extend(law.sample(rng) for _ in range(n))
        else:
            out.extend(poisson_sample(law, rng) for _ in range(n))
    return out


def mc_inner_product(f: Callable, g: Callable, law, samples: int, seed: int,
                     shards: int = 1) -> Estimate:
    """Monte-Carlo ``∫ <f, g> dP`` with its standard error."""
    cfgs = sample_configs(law, samples, seed, shards)
    vals = np.array([_pair(f(c), g(c)) for c in cfgs])
    m, se = _mean_se(vals)
    return Estimate(m, se, len(vals))


@dataclass(frozen=True)
class CheckReport:
    check: str
    passed: bool
    estimate: float
    stderr: float
    witness: str | None = None
    verdict: str = ""
    details: tuple = ()

    def to_json(self) -> dict:
        return {"check": self.check, "passed": self.passed, "estimate": self.estimate,
                "stderr": self.stderr, "witness": self.witness,
                "verdict": self.verdict or ("PASS" if self.passed else "FAIL"),
                "details": [dict(d) for d in self.details]}


def _transport(op: RepOperator, g: FiniteConfig):
    """``(ψ⁻¹γ, ρ^{1/2}(ψ,γ), q(σ(ψ,γ)) or None)`` for one configuration."""
    if isinstance(op.psi, Identity):
        return g, 1, None
    pre = FiniteConfig(op.psi.apply_inverse(x) for x in g)
    mat = op.q.matrix(cocycle(op.psi, g, op.exhaustion)) if op.q is not None else None
    return pre, _sqrt(rho_poisson(op.law, op.psi, g)), mat


def _transported_value(f: Callable, pre: FiniteConfig, a, mat):
    v = f(pre)
    if mat is not None:
        arr = np.asarray(v)
        v = (mat @ arr.reshape(mat.shape[0], -1)).reshape(arr.shape)
    return _scale(a, v)


def unitarity_check(op: RepOperator, dictionary: Sequence[Callable], samples: int,
                    seed: int, shards: int = 1) -> CheckReport:
    """``<U f, U g> = <f, g>`` for all dictionary pairs.

    Each pair is estimated on the same configurations: the per-sample
    difference ``<Uf, Ug>(γ) - <f, g>(γ)`` has mean zero by change of
    variables, and must be within 3 standard errors of it.  When
    ``ρ^{1/2} = 1`` exactly on every sample (measure-preserving p-adic maps)
    the relabeling identity ``<Uf, Ug>(γ) = <f, g>(ψ⁻¹γ)`` is also required
    to hold exactly, and the verdict is ``EXACT``.
    """
    cfgs = sample_configs(op.law, samples, seed, shards)
    k = len(dictionary)
    plain = [[None] * len(cfgs) for _ in range(k)]
    moved = [[None] * len(cfgs) for _ in range(k)]
    exact, relabel_bad = True, 0
    for n, c in enumerate(cfgs):
        pre, a, mat = _transport(op, c)
        exact = exact and a == 1
        at_pre = [f(pre) for f in dictionary] if exact else None
        for i, f in enumerate(dictionary):
            plain[i][n] = f(c)
            moved[i][n] = _transported_value(f, pre, a, mat)
        if exact:
            relabel_bad += sum(_pair(moved[i][n], moved[j][n]) != _pair(at_pre[i], at_pre[j])
                               for i in range(k) for j in range(i, k))
    rows, worst, worst_se, ok = [], 0.0, 0.0, True
    for i in range(k):
        for j in range(i, k):
            diff = np.array([_pair(a, b) - _pair(c, d) for a, b, c, d in
                             zip(moved[i], moved[j], plain[i], plain[j])])
            m, se = _mean_se(diff)
            good = (m == 0.0) if se == 0 else abs(m) <= 3 * se
            ok &= bool(good)
            rows.append({"f": repr(dictionary[i]), "g": repr(dictionary[j]),
                         "difference": m, "stderr": se, "passed": bool(good)})
            if abs(m) >= abs(worst):
                worst, worst_se = m, se
    verdict = ""
    if exact:
        ok &= relabel_bad == 0
        verdict = "EXACT" if relabel_bad == 0 else "FAIL"
    return CheckReport("unitarity", ok, worst, worst_se, verdict=verdict, details=tuple(rows))


def _close(a, b, exact: bool, tol: float) -> tuple[bool, float]:
    a, b = np.asarray(a, dtype=object if exact else float), np.asarray(b, dtype=object if exact else float)
    if exact:
        eq = bool(np.all(a == b))
        return eq, 0.0 if eq else float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float))))
    dev = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
    return dev <= tol, dev


def homomorphism_check(psi: Transformation, phi: Transformation, law,
                       dictionary: Sequence[Callable], samples: int, seed: int,
                       q: SymmetricGroupRep | None = None, tol: float = 1e-9,
                       shards: int = 1) -> CheckReport:
    """``T(ψφ) f = T(ψ) T(φ) f`` pointwise on sampled configurations.

    ``T`` is ``U`` or, with ``q``, ``V^q``; exact comparison when both maps
    are isometries (p-adic), relative tolerance ``tol`` otherwise.  With
    ``q`` the cocycle law ``σ(ψφ,γ) = σ(ψ,γ) σ(φ,ψ⁻¹γ)`` is also checked.
    """
    exact = bool(getattr(psi, "is_isometry", False) and getattr(phi, "is_isometry", False))
    both = compose(psi, phi)
    op_psi, op_phi, op_both = (RepOperator(law, t, q) for t in (psi, phi, both))
    cfgs = sample_configs(law, samples, seed, shards)
    ok, worst, rows, cocycle_bad = True, 0.0, [], 0
    for f in dictionary:
        lhs = operator_image(op_both, f)
        rhs = operator_image(op_psi, operator_image(op_phi, f))
        fails = 0
        for c in cfgs:
            good, dev = _close(lhs(c), rhs(c), exact, tol)
            worst = max(worst, dev)
            fails += not good
        ok &= fails == 0
        rows.append({"f": repr(f), "failures": fails, "samples": len(cfgs)})
    if q is not None:
        for c in cfgs:
            s_both = cocycle(both, c)
            pre = FiniteConfig(psi.apply_inverse(x) for x in c)
            if s_both != cocycle(psi, c) * cocycle(phi, pre):
                cocycle_bad += 1
        ok &= cocycle_bad == 0
        rows.append({"f": "cocycle law", "failures": cocycle_bad, "samples": len(cfgs)})
    name = "homomorphism" + ("_Vq" if q is not None else "_U")
    return CheckReport(name, ok, worst, 0.0, verdict="exact" if exact else f"tol={tol:g}",
                       details=tuple(rows))


def sign_twist(psi: Transformation, g: FiniteConfig) -> int:
    """``q_sign(σ(ψ, γ))`` for a configuration: ±1."""
    return cocycle(psi, g).sign()


def spherical_inner_product(law: PoissonLaw, psi: Transformation, samples: int, seed: int,
                            shards: int = 1) -> Estimate:
    """``<U(ψ) f0, f0>`` with ``f0 ≡ 1``, by Monte Carlo through ``apply_U``."""
    f0 = DictionaryFunction.constant(1.0)
    op = RepOperator(law, psi)
    return mc_inner_product(operator_image(op, f0), f0, law, samples, seed, shards)


def spherical_discriminator(law: PoissonLaw, lambda1: float, lambda2: float,
                            psis: Sequence[tuple[str, Transformation]], samples: int,
                            seed: int, shards: int = 1) -> dict:
    """Look for ψ with ``u_{λ1 m}(ψ)`` and ``u_{λ2 m}(ψ)`` apart beyond error bars.

    Both modes are computed for each ψ; the separation uses the quadrature
    values and the error bar three combined Monte-Carlo standard errors.
    """
    rows = []
    for idx, (name, psi) in enumerate(psis):
        q1 = spherical_function(law.scaled(lambda1), psi, "quadrature")
        q2 = spherical_function(law.scaled(lambda2), psi, "quadrature")
        m1 = spherical_function(law.scaled(lambda1), psi, "monte_carlo", samples,
                                seed + 2 * idx, shards)
        m2 = spherical_function(law.scaled(lambda2), psi, "monte_carlo", samples,
                                seed + 2 * idx + 1, shards)
        sep = abs(q1.value - q2.value)
        err = 3 * math.hypot(m1.stderr, m2.stderr)
        rows.append({"psi": name, "u1_quadrature": q1.value, "u2_quadrature": q2.value,
                     "u1_monte_carlo": m1.value, "u1_stderr": m1.stderr,
                     "u2_monte_carlo": m2.value, "u2_stderr": m2.stderr,
                     "separation": sep, "combined_error": err,
                     "trivial": q1.value == 1.0 and q2.value == 1.0})
    if lambda1 == lambda2:
        best = max(rows, key=lambda r: r["separation"]) if rows else None
        return {"check": "spherical_discriminator", "witness": None,
                "estimate": 0.0 if best is None else best["separation"], "stderr": 0.0,
                "verdict": "EQUAL_INTENSITIES", "rows": rows}
    useful = [r for r in rows if not r["trivial"]]
    if not useful:
        return {"check": "spherical_discriminator", "witness": None, "estimate": 0.0,
                "stderr": 0.0, "verdict": "NO_WITNESS", "rows": rows}
    best = max(useful, key=lambda r: r["separation"])
    separated = best["separation"] > best["combined_error"]
    return {"check": "spherical_discriminator", "witness": best["psi"],
            "estimate": best["separation"], "stderr": best["combined_error"] / 3,
            "verdict": "SEPARATED" if separated else "NOT_SEPARATED", "rows": rows}
