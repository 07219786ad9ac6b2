"""Exact Markov-chain layer: one-step sampling, transition kernel, trajectories.

The chain tracks ``(A_n, B_n)``: coupon holders awaiting interview and
named-but-couponless individuals after ``n`` interviews.  One step of the
dynamics interviews a coupon holder (or a fresh seed when none is left),
draws the interviewee's new neighbours and hands out at most ``c`` coupons.

Index convention: at the step producing state n+1, the binomial sizes are
``N - (n+1) - A_n - B_n`` (new, unnamed contacts) and ``B_n`` (named,
couponless contacts).  Negative sizes from late-stage depletion clamp to 0.
The sampler and the kernel below share this convention, so they agree by
construction.
"""

from __future__ import annotations

import math

import numpy as np

from .params import ChainState, ModelParams, Trajectory

__all__ = [
    "step",
    "transition_prob",
    "transition_row",
    "marginal_transition_a",
    "simulate_trajectory",
    "simulate_batch",
]


def _binom_pmf(k: int, n: int, p: float) -> float:
    """Binomial(n, p) pmf at k, stable for large n as long as k is moderate."""
    if k < 0 or k > n:
        return 0.0
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    if n <= 200:
        return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)
    log_pmf = (
        math.lgamma(n + 1)
        - math.lgamma(k + 1)
        - math.lgamma(n - k + 1)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )
    return math.exp(log_pmf)


def _sample_increment(
    n: int, A: int, B: int, params: ModelParams, rng: np.random.Generator
) -> tuple[int, int, bool]:
    """Draw one transition from (n, A, B); returns (A', B', reseeded).

    A re-seed normally interviews a fresh unexplored individual; when the
    unexplored pool is already empty the seed is taken from the named pool
    instead (mirroring the graph layer), which keeps n + A + B <= N.
    """
    dec = 1 if A >= 1 else 0
    b_pool = B
    if dec == 0 and params.N - n - A - B <= 0 and B > 0:
        b_pool = B - 1  # interviewee removed from the named pool
    size_h = params.N - (n + 1) - A - b_pool
    H = int(rng.binomial(size_h, params.p)) if size_h > 0 else 0
    K = int(rng.binomial(b_pool, params.p)) if b_pool > 0 else 0
    y = min(H + K, params.c)
    return A - dec + y, b_pool + H - y, dec == 0


def step(
    state: ChainState, params: ModelParams, rng: np.random.Generator
) -> ChainState:
    """Sample the next state of the chain.

    If ``A == 0`` the step models a fresh seed being interviewed: no coupon
    is consumed, but the interviewee still distributes up to ``c`` coupons.
    """
    state.validate(params.N)
    if state.n >= params.N:
        raise ValueError(f"population exhausted: n={state.n} >= N={params.N}")
    A1, B1, _ = _sample_increment(state.n, state.A, state.B, params, rng)
    return ChainState(state.n + 1, A1, B1)


def transition_prob(
    n: int,
    frm: tuple[int, int],
    to: tuple[int, int],
    params: ModelParams,
) -> float:
    """Exact one-step transition probability P((a,b) -> (a',b')) at step n.

    Sums, over the compatible (h, k) pairs, the product of the two
    independent binomial laws of new and already-named contacts.
    """
    a, b = frm
    a2, b2 = to
    ChainState(n, a, b).validate(params.N)
    p = params.p
    c = params.c
    size_h = max(params.N - (n + 1) - a - b, 0)
    dec = 1 if a >= 1 else 0

    da = a2 - (a - dec)
    db = b2 - b
    if da < 0 or da > c:
        return 0.0
    h = da + db
    if h < 0 or h > size_h:
        return 0.0
    if da < c:
        # h + k == da exactly
        k = da - h
        if k < 0 or k > b:
            return 0.0
        return _binom_pmf(h, size_h, p) * _binom_pmf(k, b, p)
    # da == c: any k with h + k >= c contributes
    total = 0.0
    for k in range(max(c - h, 0), b + 1):
        total += _binom_pmf(h, size_h, p) * _binom_pmf(k, b, p)
    return total


def transition_row(
    n: int, frm: tuple[int, int], params: ModelParams
) -> dict[tuple[int, int], float]:
    """Full outgoing distribution from (a, b) at step n, keyed by (a', b')."""
    a, b = frm
    ChainState(n, a, b).validate(params.N)
    p = params.p
    c = params.c
    size_h = max(params.N - (n + 1) - a - b, 0)
    dec = 1 if a >= 1 else 0
    row: dict[tuple[int, int], float] = {}
    for h in range(size_h + 1):
        ph = _binom_pmf(h, size_h, p)
        if ph == 0.0:
            continue
        for k in range(b + 1):
            y = min(h + k, c)
            key = (a - dec + y, b + h - y)
            row[key] = row.get(key, 0.0) + ph * _binom_pmf(k, b, p)
    return row


def marginal_transition_a(
    n: int, a: int, a2: int, params: ModelParams
) -> float:
    """A-marginal kernel P_n(a, a'): the law of the capped coupon count.

    The jump a' - a + 1_{a>=1} equals min(Y, c) with Y binomial of size
    ``N - (n+1) - a`` and success probability lam/N, so the kernel is the
    binomial pmf below the cap and the complement mass at the cap.
    """
    if not 0 <= a <= params.N - n:
        raise ValueError(f"a={a} outside [0, N-n]={params.N - n}")
    M = max(params.N - (n + 1) - a, 0)
    dec = 1 if a >= 1 else 0
    j = a2 - a + dec
    c = params.c
    if j < 0 or j > c:
        return 0.0
    if j < c:
        return _binom_pmf(j, M, params.p)
    below = sum(_binom_pmf(k, M, params.p) for k in range(c))
    return max(0.0, 1.0 - below)


def capped_jump_pmf(n: int, a: int, params: ModelParams) -> np.ndarray:
    """pmf of min(Y, c) from state a at step n; entry j maps to a' = a - 1_{a>=1} + j."""
    M = max(params.N - (n + 1) - a, 0)
    c = params.c
    out = np.empty(c + 1)
    below = 0.0
    for j in range(c):
        out[j] = _binom_pmf(j, M, params.p)
        below += out[j]
    out[c] = max(0.0, 1.0 - below)
    return out


def simulate_trajectory(
    params: ModelParams, seed: int, horizon: int | None = None
) -> Trajectory:
    """Simulate one realization, deterministic given (params, seed).

    Re-seed events (interviews by a fresh uniformly-drawn individual) are
    recorded by interview index; ``tau_first`` is the first n >= 1 with
    A_n = 0.
    """
    horizon = params.N if horizon is None else int(horizon)
    if not 0 <= horizon <= params.N:
        raise ValueError(f"horizon must be in [0, N], got {horizon}")
    rng = np.random.default_rng(seed)
    A = np.empty(horizon + 1, dtype=np.int64)
    B = np.empty(horizon + 1, dtype=np.int64)
    a, b = params.a0_count, params.b0_count
    A[0], B[0] = a, b
    reseeds: list[int] = []
    tau: int | None = None
    for n in range(horizon):
        a, b, reseeded = _sample_increment(n, a, b, params, rng)
        if reseeded:
            reseeds.append(n + 1)
        A[n + 1], B[n + 1] = a, b
        if tau is None and a == 0:
            tau = n + 1
    return Trajectory(params, A, B, tuple(reseeds), tau)


def simulate_batch(
    params: ModelParams,
    horizon: int,
    n_rep: int,
    rng: np.random.Generator,
    return_paths: bool = False,
):
    """Lockstep vectorized simulation of many independent chains.

    Shares one generator across replicates (all replicates advance one step
    per draw), so it is fast but not replicate-seeded; use it for Monte
    Carlo frequency estimates, not for reproducible per-replicate output.

    Returns ``(A, B, tau)`` with final-state vectors and first-hit times of
    A = 0 (``-1`` when not hit); with ``return_paths`` the A, B entries are
    ``(n_rep, horizon+1)`` arrays instead.
    """
    if not 0 <= horizon <= params.N:
        raise ValueError(f"horizon must be in [0, N], got {horizon}")
    N, p, c = params.N, params.p, params.c
    A = np.full(n_rep, params.a0_count, dtype=np.int64)
    B = np.full(n_rep, params.b0_count, dtype=np.int64)
    tau = np.full(n_rep, -1, dtype=np.int64)
    if return_paths:
        A_path = np.empty((n_rep, horizon + 1), dtype=np.int64)
        B_path = np.empty((n_rep, horizon + 1), dtype=np.int64)
        A_path[:, 0] = A
        B_path[:, 0] = B
    for n in range(horizon):
        # named-pool fallback when a re-seed finds no unexplored individual
        fallback = (A == 0) & (N - n - A - B <= 0) & (B > 0)
        b_pool = B - fallback
        size_h = np.maximum(N - (n + 1) - A - b_pool, 0)
        H = rng.binomial(size_h, p)
        K = rng.binomial(b_pool, p)
        y = np.minimum(H + K, c)
        A = A - (A >= 1) + y
        B = b_pool + H - y
        hit = (tau < 0) & (A == 0)
        tau[hit] = n + 1
        if return_paths:
            A_path[:, n + 1] = A
            B_path[:, n + 1] = B
    if return_paths:
        return A_path, B_path, tau
    return A, B, tau
