"""Exact-kernel and sampler tests for the chain layer."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from rdsim.chain import (
    capped_jump_pmf,
    marginal_transition_a,
    simulate_batch,
    simulate_trajectory,
    step,
    transition_prob,
    transition_row,
)
from rdsim.params import ChainState, ModelParams


def test_lambda_zero_is_deterministic():
    # no edges: every interview just burns one coupon, then reseeds forever
    params = ModelParams(20, 0.0, 3, a0_count=2)
    traj = simulate_trajectory(params, seed=1)
    assert traj.A[0] == 2 and traj.A[1] == 1 and traj.A[2] == 0
    assert np.all(traj.A[2:] == 0)
    assert np.all(traj.B == 0)
    assert traj.tau_first == 2
    assert traj.reseed_steps == tuple(range(3, 21))


def test_single_transition_value():
    # N=10, lam=2, c=1, state (0, 1, 0): dying (a -> 0 with b unchanged)
    # requires zero successes among the 8 new contacts at p = 0.2
    params = ModelParams(10, 2.0, 1, a0_count=1)
    p_die = transition_prob(0, (1, 0), (0, 0), params)
    assert p_die == pytest.approx(0.8**8, abs=1e-15)


def test_rows_sum_to_one_small_states():
    params = ModelParams(12, 1.5, 2, a0_count=1)
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(0, 10))
        a = int(rng.integers(0, params.N - n + 1))
        b = int(rng.integers(0, params.N - n - a + 1))
        row = transition_row(n, (a, b), params)
        assert sum(row.values()) == pytest.approx(1.0, abs=1e-12)
        # transition_prob agrees with the enumerated row entry by entry
        for to, pr in row.items():
            assert transition_prob(n, to=to, frm=(a, b), params=params) == (
                pytest.approx(pr, abs=1e-12)
            )


def test_marginal_is_b_marginalization():
    params = ModelParams(12, 2.0, 3, a0_count=1)
    for n, a, b in [(0, 1, 0), (2, 3, 1), (4, 2, 3), (1, 0, 2), (3, 1, 4)]:
        row = transition_row(n, (a, b), params)
        agg: dict[int, float] = {}
        for (a2, _), pr in row.items():
            agg[a2] = agg.get(a2, 0.0) + pr
        for a2, pr in agg.items():
            assert marginal_transition_a(n, a, a2, params) == (
                pytest.approx(pr, abs=1e-12)
            )


def test_capped_jump_pmf_matches_marginal():
    params = ModelParams(40, 2.5, 3, a0_count=1)
    for n, a in [(0, 1), (3, 5), (10, 0), (20, 7)]:
        pmf = capped_jump_pmf(n, a, params)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        dec = 1 if a >= 1 else 0
        for j, pj in enumerate(pmf):
            assert marginal_transition_a(n, a, a - dec + j, params) == (
                pytest.approx(pj, abs=1e-14)
            )


def test_expected_increment_matches_kernel():
    # E[A'] and E[B'] from the enumerated kernel vs the closed-form
    # conditional means: E[dA] = -1_{a>=1} + E[min(Y,c)],
    # E[dB] = p*size_h - E[min(Y,c)]
    params = ModelParams(15, 2.0, 2, a0_count=1)
    n, a, b = 2, 2, 3
    row = transition_row(n, (a, b), params)
    ea = sum(a2 * pr for (a2, _), pr in row.items())
    eb = sum(b2 * pr for (_, b2), pr in row.items())
    size_h = params.N - (n + 1) - a - b
    pmf = capped_jump_pmf(n, a, params)
    e_cap = sum(j * pj for j, pj in enumerate(pmf))
    assert ea == pytest.approx(a - 1 + e_cap, abs=1e-12)
    assert eb == pytest.approx(b + params.p * size_h - e_cap, abs=1e-12)


def test_empirical_vs_kernel_chi2():
    # one-step frequencies over 200k draws match the exact row (chi-square)
    params = ModelParams(30, 2.0, 2, a0_count=1)
    frm, n = (2, 1), 1
    row = transition_row(n, frm, params)
    rng = np.random.default_rng(123)
    R = 200_000
    counts: dict[tuple[int, int], int] = {}
    for _ in range(R):
        s = step(ChainState(n, *frm), params, rng)
        counts[(s.A, s.B)] = counts.get((s.A, s.B), 0) + 1
    keys = [k for k, pr in row.items() if pr * R >= 5]
    obs = np.array([counts.get(k, 0) for k in keys], dtype=float)
    exp = np.array([row[k] * R for k in keys])
    tail_obs = R - obs.sum()
    tail_exp = R - exp.sum()
    if tail_exp >= 5:
        obs = np.append(obs, tail_obs)
        exp = np.append(exp, tail_exp)
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    p = stats.chi2.sf(chi2, len(obs) - 1)
    assert p > 0.01


def test_step_and_trajectory_share_stream():
    params = ModelParams(50, 2.0, 3, a0_count=2)
    traj = simulate_trajectory(params, seed=7, horizon=20)
    rng = np.random.default_rng(7)
    s = params.initial_state()
    for n in range(20):
        s = step(s, params, rng)
        assert (s.A, s.B) == (traj.A[n + 1], traj.B[n + 1])


def test_trajectory_deterministic_and_bounded():
    params = ModelParams(100, 2.0, 2, a0_count=1)
    t1 = simulate_trajectory(params, seed=11)
    t2 = simulate_trajectory(params, seed=11)
    assert np.array_equal(t1.A, t2.A) and np.array_equal(t1.B, t2.B)
    assert t1.reseed_steps == t2.reseed_steps
    n = np.arange(len(t1.A))
    assert np.all(t1.A + t1.B + n <= params.N)
    assert np.all(t1.A >= 0) and np.all(t1.B >= 0)


def test_batch_moments_match_trajectory_law():
    # the vectorized batch and the seeded scalar path implement one law:
    # compare mean A_10 over many draws
    params = ModelParams(60, 2.0, 2, a0_count=1)
    rng = np.random.default_rng(3)
    A, B, _ = simulate_batch(params, 10, 40_000, rng)
    scalar = np.array(
        [simulate_trajectory(params, 10_000 + s, 10).A[10] for s in range(4000)]
    )
    se = A.std(ddof=1) / math.sqrt(len(A)) + scalar.std(ddof=1) / math.sqrt(
        len(scalar)
    )
    assert abs(A.mean() - scalar.mean()) < 4 * se


@given(
    n=st.integers(0, 8),
    a=st.integers(0, 6),
    b=st.integers(0, 6),
    c=st.integers(1, 4),
    lam=st.floats(0.0, 5.0),
)
@settings(max_examples=60, deadline=None)
def test_row_is_distribution(n, a, b, c, lam):
    params = ModelParams(20, lam, c, a0_count=1)
    if n + a + b > params.N:
        return
    row = transition_row(n, (a, b), params)
    assert all(pr >= 0 for pr in row.values())
    assert sum(row.values()) == pytest.approx(1.0, abs=1e-10)
    dec = 1 if a >= 1 else 0
    for a2, b2 in row:
        assert a - dec <= a2 <= a - dec + c
        assert b2 >= b - c


def test_validation_errors():
    with pytest.raises(ValueError):
        ModelParams(10, -1.0, 2)
    with pytest.raises(ValueError):
        ModelParams(10, 2.0, 0)
    with pytest.raises(ValueError):
        ModelParams(10, 2.0, 2, a0_count=0)
    with pytest.raises(ValueError):
        simulate_trajectory(ModelParams(10, 2.0, 2), seed=0, horizon=11)
    with pytest.raises(ValueError):
        marginal_transition_a(5, 6, 6, ModelParams(10, 2.0, 2))
