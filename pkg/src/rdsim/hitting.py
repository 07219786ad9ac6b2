"""Hitting-time analysis of the coupon-count marginal chain.

The coupon count A can drop by at most 1 and grow by at most c - 1 per
step, so the states reachable from (m, ell) form a band; conditioning on
absorption at step n0 further caps the band at a <= n0 - n.  Absorption
probabilities solve a backward recursion over that band.

Note: a figure caption in the source material states the survival
probability equals 1 when a >= n; the condition actually forced by the
band structure is a > n0 - n (A cannot reach 0 by step n0), which is what
this module implements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import capped_jump_pmf
from .params import ModelParams

__all__ = [
    "ReachableSet",
    "HittingTable",
    "SurvivalTable",
    "build_reachable",
    "hitting_distribution",
    "survival_table",
    "seed_survival_curve",
]


@dataclass(frozen=True)
class ReachableSet:
    """Per-step coupon-count bounds reachable from A_m = ell.

    With ``n0`` set, the band is additionally capped at ``n0 - n`` (a chain
    absorbed exactly at step n0 cannot carry more coupons than remaining
    interviews).
    """

    m: int
    ell: int
    N: int
    c: int
    n0: int | None = None

    def bounds(self, n: int) -> tuple[int, int]:
        """Inclusive (lo, hi) for A_n; lo > hi signals an empty band."""
        if n < self.m:
            return 1, 0
        lo = max(self.ell - (n - self.m), 0)
        hi = min(self.ell + (n - self.m) * (self.c - 1), self.N - n)
        if self.n0 is not None:
            hi = min(hi, self.n0 - n)
        return lo, hi

    def contains(self, n: int, a: int) -> bool:
        lo, hi = self.bounds(n)
        return lo <= a <= hi

    def cardinality(self) -> int:
        last = self.N if self.n0 is None else min(self.n0, self.N)
        total = 0
        for n in range(self.m, last + 1):
            lo, hi = self.bounds(n)
            total += max(hi - lo + 1, 0)
        return total


def build_reachable(
    m: int, ell: int, params: ModelParams, n0: int | None = None
) -> ReachableSet:
    if not 0 <= ell <= params.N - m:
        raise ValueError(f"invalid start state (m={m}, ell={ell})")
    return ReachableSet(m, ell, params.N, params.c, n0)


@dataclass
class HittingTable:
    """Values u(n, a) = P(absorption exactly at n0 | A_n = a) on the band."""

    n0: int
    m: int
    ell: int
    params: ModelParams
    slices: dict[int, tuple[int, np.ndarray]] = field(default_factory=dict)

    def u(self, n: int, a: int) -> float:
        if a == 0:
            return 1.0 if n == self.n0 else 0.0
        if n not in self.slices:
            return 0.0
        lo, vals = self.slices[n]
        if lo <= a < lo + len(vals):
            return float(vals[a - lo])
        return 0.0

    def rows(self):
        """Yield (n, a, u) over the stored band, ordered by (n, a)."""
        for n in sorted(self.slices):
            yield n, 0, self.u(n, 0)
            lo, vals = self.slices[n]
            for i, v in enumerate(vals):
                yield n, lo + i, float(v)
        yield self.n0, 0, 1.0


@dataclass
class SurvivalTable:
    """Values v(n, a) = P(no absorption up to n0 | A_n = a)."""

    n0: int
    params: ModelParams
    slices: dict[int, tuple[int, np.ndarray]] = field(default_factory=dict)

    def v(self, n: int, a: int) -> float:
        if not 0 <= n <= self.n0:
            raise ValueError(f"n={n} outside [0, n0]")
        if a == 0:
            return 0.0
        if a > self.n0 - n:
            return 1.0  # cannot be absorbed in time: at most 1 coupon lost per step
        lo, vals = self.slices[n]
        return float(vals[a - lo])

    def rows(self, a_max: int | None = None):
        for n in sorted(self.slices):
            hi = self.n0 - n if a_max is None else a_max
            for a in range(0, hi + 1):
                yield n, a, self.v(n, a)


def hitting_distribution(
    n0: int, m: int, ell: int, params: ModelParams
) -> HittingTable:
    """Backward sweep for u(n, a) = P(tau = n0 | A_n = a).

    Boundary: u(n0, 0) = 1 and u(n, 0) = 0 for n != n0; the sweep runs the
    banded A-marginal kernel from n0 - 1 down to m.
    """
    if not 0 <= n0 <= params.N:
        raise ValueError(f"n0 must be in [0, N], got {n0}")
    rs = build_reachable(m, ell, params, n0=n0)
    table = HittingTable(n0, m, ell, params)

    def u_next(n: int, a: int) -> float:
        return table.u(n, a)

    for n in range(n0 - 1, m - 1, -1):
        lo, hi = rs.bounds(n)
        lo = max(lo, 1)
        if lo > hi:
            table.slices[n] = (lo, np.empty(0))
            continue
        vals = np.empty(hi - lo + 1)
        for a in range(lo, hi + 1):
            row = capped_jump_pmf(n, a, params)
            acc = 0.0
            for j, pj in enumerate(row):
                if pj:
                    acc += pj * u_next(n + 1, a - 1 + j)
            vals[a - lo] = acc
        table.slices[n] = (lo, vals)
    return table


def survival_table(n0: int, params: ModelParams) -> SurvivalTable:
    """Backward sweep for v(n, a) = P(tau > n0 | A_n = a).

    Boundary: v(n0, a) = 1 for a >= 1 and v(n, 0) = 0; values are only
    stored where the outcome is not structurally forced (1 <= a <= n0 - n).
    """
    if not 0 <= n0 <= params.N:
        raise ValueError(f"n0 must be in [0, N], got {n0}")
    table = SurvivalTable(n0, params)
    table.slices[n0] = (1, np.empty(0))
    for n in range(n0 - 1, -1, -1):
        lo, hi = 1, n0 - n
        vals = np.empty(hi - lo + 1)
        for a in range(lo, hi + 1):
            row = capped_jump_pmf(n, a, params)
            acc = 0.0
            for j, pj in enumerate(row):
                if pj:
                    acc += pj * table.v(n + 1, a - 1 + j)
            vals[a - lo] = acc
        table.slices[n] = (lo, vals)
    return table


def seed_survival_curve(
    N: int,
    lam: float,
    c_values: list[int],
    n0_max: int,
    a0: int = 1,
) -> list[tuple[int, int, float]]:
    """P(tau > n0 | A_0 = a0) for each coupon cap and n0 = 1..n0_max.

    Computed by pushing the coupon-count law forward with absorption at 0;
    the alive mass after n0 steps is the survival probability.  Agrees with
    the backward ``survival_table`` values (tested).
    """
    rows: list[tuple[int, int, float]] = []
    for c in c_values:
        params = ModelParams(N, lam, c, a0_count=a0)
        a_max = min(N, a0 + n0_max * max(c - 1, 1) + 1)
        dist = np.zeros(a_max + 1)
        dist[a0] = 1.0
        for n in range(n0_max):
            new = np.zeros(a_max + 1)
            for a in range(1, min(a_max, N - n) + 1):
                w = dist[a]
                if w == 0.0:
                    continue
                row = capped_jump_pmf(n, a, params)
                for j, pj in enumerate(row):
                    a2 = a - 1 + j
                    if pj and a2 <= a_max:
                        new[a2] += w * pj
            new[0] = 0.0  # absorbed mass leaves the system
            dist = new
            rows.append((c, n + 1, float(dist[1:].sum())))
    return rows
