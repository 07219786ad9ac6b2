"""Hitting-time and survival-probability tests."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rdsim.chain import marginal_transition_a, simulate_batch
from rdsim.hitting import (
    build_reachable,
    hitting_distribution,
    seed_survival_curve,
    survival_table,
)
from rdsim.params import ModelParams


def bfs_reachable(m, ell, params, n0=None):
    """Oracle: breadth-first enumeration of reachable (n, a) pairs."""
    last = params.N if n0 is None else min(n0, params.N)
    frontier = {ell}
    pairs = {(m, ell)}
    for n in range(m, last):
        nxt = set()
        for a in frontier:
            dec = 1 if a >= 1 else 0
            for j in range(params.c + 1):
                a2 = a - dec + j
                if 0 <= a2 <= params.N - (n + 1):
                    if n0 is not None and a2 > n0 - (n + 1):
                        continue
                    nxt.add(a2)
        frontier = nxt
        pairs.update((n + 1, a) for a in frontier)
    return pairs


def test_reachable_matches_bfs():
    for N, c, m, ell, n0 in [(12, 2, 0, 1, None), (15, 3, 2, 2, None), (14, 2, 0, 1, 10)]:
        params = ModelParams(N, 2.0, c, a0_count=max(ell, 1))
        rs = build_reachable(m, ell, params, n0=n0)
        oracle = bfs_reachable(m, ell, params, n0=n0)
        mine = set()
        last = N if n0 is None else min(n0, N)
        for n in range(m, last + 1):
            lo, hi = rs.bounds(n)
            mine.update((n, a) for a in range(lo, hi + 1))
        assert mine == oracle
        assert rs.cardinality() == len(oracle)


def test_hitting_boundary_values():
    params = ModelParams(30, 2.0, 2, a0_count=1)
    table = hitting_distribution(10, 0, 1, params)
    assert table.u(10, 0) == 1.0
    assert table.u(5, 0) == 0.0
    # a > n0 - n cannot be absorbed by n0
    assert table.u(3, 9) == 0.0


def test_hitting_one_step_value():
    # u_{n0}(n0-1, 1) is exactly the one-step kill probability
    params = ModelParams(30, 2.0, 2, a0_count=1)
    n0 = 10
    table = hitting_distribution(n0, 0, 1, params)
    assert table.u(n0 - 1, 1) == pytest.approx(
        marginal_transition_a(n0 - 1, 1, 0, params), abs=1e-14
    )


def test_hitting_sums_to_one():
    # absorption is certain by n0 = N, so the u's form a distribution
    params = ModelParams(30, 2.0, 2, a0_count=1)
    total = sum(
        hitting_distribution(n0, 0, 1, params).u(0, 1) for n0 in range(1, 31)
    )
    assert total == pytest.approx(1.0, abs=1e-9)


def test_hitting_matches_monte_carlo():
    params = ModelParams(30, 2.0, 2, a0_count=1)
    R = 200_000
    rng = np.random.default_rng(99)
    _, _, tau = simulate_batch(params, 30, R, rng)
    assert np.all(tau > 0)
    freq = np.bincount(tau, minlength=31) / R
    for n0 in range(1, 31):
        u = hitting_distribution(n0, 0, 1, params).u(0, 1)
        sd = np.sqrt(u * (1.0 - u) / R)
        assert abs(freq[n0] - u) <= 3.5 * sd + 1e-12


def test_survival_is_complement():
    # v(n, a) = 1 - sum_{n0' <= n0} P(tau = n0' | A_n = a)
    params = ModelParams(25, 2.0, 2, a0_count=1)
    n0 = 12
    surv = survival_table(n0, params)
    for n, a in [(0, 1), (2, 3), (5, 2), (8, 1)]:
        hit = sum(
            hitting_distribution(k, n, a, params).u(n, a)
            for k in range(n, n0 + 1)
        )
        assert surv.v(n, a) == pytest.approx(1.0 - hit, abs=1e-9)


def test_survival_forced_region():
    # losing at most one coupon per step, a > n0 - n cannot die in time
    params = ModelParams(40, 2.0, 3, a0_count=1)
    surv = survival_table(15, params)
    assert surv.v(10, 6) == 1.0
    assert surv.v(0, 16) == 1.0
    assert surv.v(15, 3) == 1.0
    assert surv.v(5, 0) == 0.0


def test_seed_curve_matches_backward_table():
    N, lam, n0_max = 60, 2.0, 12
    rows = seed_survival_curve(N, lam, [1, 2, 3], n0_max)
    by_key = {(c, n0): p for c, n0, p in rows}
    for c in (1, 2, 3):
        params = ModelParams(N, lam, c, a0_count=1)
        for n0 in (1, 4, 9, 12):
            assert by_key[(c, n0)] == pytest.approx(
                survival_table(n0, params).v(0, 1), abs=1e-9
            )


def test_seed_curve_monotone():
    rows = seed_survival_curve(80, 2.0, [1, 2, 4], 20)
    by_c: dict[int, list[float]] = {}
    for c, _, p in rows:
        by_c.setdefault(c, []).append(p)
    for c, probs in by_c.items():
        # survival decreases in n0
        assert all(x >= y - 1e-12 for x, y in zip(probs, probs[1:]))
    # and increases with the coupon cap at fixed n0
    for i in range(20):
        assert by_c[1][i] <= by_c[2][i] + 1e-12 <= by_c[4][i] + 2e-12


@given(
    n0=st.integers(2, 10),
    a=st.integers(1, 4),
    c=st.integers(1, 3),
)
@settings(max_examples=25, deadline=None)
def test_survival_monotone_in_a(n0, a, c):
    # more coupons now can only help survival
    params = ModelParams(20, 2.0, c, a0_count=1)
    surv = survival_table(n0, params)
    assert surv.v(0, a + 1) >= surv.v(0, a) - 1e-12


def test_invalid_inputs():
    params = ModelParams(20, 2.0, 2, a0_count=1)
    with pytest.raises(ValueError):
        hitting_distribution(25, 0, 1, params)
    with pytest.raises(ValueError):
        survival_table(10, params).v(11, 1)
    with pytest.raises(ValueError):
        build_reachable(0, 25, params)
