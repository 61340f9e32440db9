"""Optimal assignment: min-cost (sum) and bottleneck (max) variants."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence



def _exact_integers(cost: Sequence[Sequence[float]]) -> tuple[list[list[int]], int]:
    """Scale finite floats to integers by a common power of two, exactly."""
    ratios = [[Fraction(float(c)) for c in row] for row in cost]
    for row in ratios:
        for c in row:
            if c < 0:
                raise ValueError("costs must be nonnegative")
    den = 1
    for row in ratios:
        for c in row:
            den = max(den, c.denominator)  # all denominators are powers of two
    return [[c.numerator * (den // c.denominator) for c in row] for row in ratios], den


def min_cost_assignment(cost: Sequence[Sequence[float]]) -> tuple[list[int], float]:
    """Permutation ``perm`` minimising ``sum(cost[i][perm[i]])``.

    Hungarian algorithm with potentials, run in exact integer arithmetic on
    the float entries, so the optimum is exact even among near-ties; the
    returned value is the correctly rounded optimal sum.
    """
    n = len(cost)
    if n == 0:
        return [], 0.0
    if any(len(row) != n for row in cost):
        raise ValueError("cost matrix must be square")
    if not all(math.isfinite(float(c)) for row in cost for c in row):
        raise ValueError("costs must be finite")
    a, den = _exact_integers(cost)
    inf = None
    u, v = [0] * (n + 1), [0] * (n + 1)
    owner = [0] * (n + 1)  # owner[col] = row (1-based), 0 = free
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        way = [0] * (n + 1)
        while True:
            used[j0] = True
            i0, delta, j1 = owner[j0], inf, 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = a[i0 - 1][j - 1] - u[i0] - v[j]
                    if minv[j] is None or cur < minv[j]:
                        minv[j], way[j] = cur, j0
                    if delta is None or minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    perm = [0] * n
    for j in range(1, n + 1):
        perm[owner[j] - 1] = j - 1
    total = sum(a[i][perm[i]] for i in range(n))
    return perm, total / den


def _perfect_matching(allowed: list[list[int]], n: int) -> list[int] | None:
    """Kuhn's augmenting paths; ``allowed[i]`` lists admissible columns of row i."""
    match_col = [-1] * n

    def augment(i: int, seen: list[bool]) -> bool:
        for k in allowed[i]:
            if not seen[k]:
                seen[k] = True
                if match_col[k] < 0 or augment(match_col[k], seen):
                    match_col[k] = i
                    return True
        return False

    for i in range(n):
        if not augment(i, [False] * n):
            return None
    perm = [0] * n
    for k, i in enumerate(match_col):
        perm[i] = k
    return perm


def bottleneck_assignment(cost: Sequence[Sequence]) -> tuple[list[int], object]:
    """Permutation minimising ``max(cost[i][perm[i]])``.

    Entries only need to be totally ordered (ints, Fractions, floats).  Binary
    search over the sorted distinct entries, each step a bipartite
    perfect-matching feasibility test.
    """
    n = len(cost)
    if n == 0:
        return [], None
    if any(len(row) != n for row in cost):
        raise ValueError("cost matrix must be square")
    values = sorted({v for row in cost for v in row})
    lo, hi = 0, len(values) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        t = values[mid]
        allowed = [[k for k in range(n) if cost[i][k] <= t] for i in range(n)]
        perm = _perfect_matching(allowed, n)
        if perm is None:
            lo = mid + 1
        else:
            best = perm
            hi = mid - 1
    return best, max(cost[i][best[i]] for i in range(n))
