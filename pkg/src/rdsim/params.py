"""Core parameter and state types shared by all layers of the toolkit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the coupon-referral exploration on G(N, lam/N).

    Parameters
    ----------
    N : int
        Population size (number of vertices).
    lam : float
        Mean-degree parameter; each unordered pair is connected with
        probability ``lam / N``.
    c : int
        Maximum number of coupons handed out per interview.
    a0_count : int
        Initial number of coupon holders (seeds), at least 1.
    b0_count : int
        Initial number of individuals named but without a coupon.
    """

    N: int
    lam: float
    c: int
    a0_count: int = 1
    b0_count: int = 0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not 0.0 <= self.lam <= self.N:
            raise ValueError(f"lam must be in [0, N], got {self.lam}")
        if self.c < 1:
            raise ValueError(f"c must be >= 1, got {self.c}")
        if self.a0_count < 1:
            raise ValueError(f"a0_count must be >= 1, got {self.a0_count}")
        if self.b0_count < 0:
            raise ValueError(f"b0_count must be >= 0, got {self.b0_count}")
        if self.a0_count + self.b0_count > self.N:
            raise ValueError("a0_count + b0_count may not exceed N")

    @property
    def p(self) -> float:
        """Per-pair connection probability lam / N."""
        return self.lam / self.N

    @property
    def supercritical(self) -> bool:
        """Whether the mean degree exceeds the percolation threshold 1."""
        return self.lam > 1.0

    def initial_state(self) -> "ChainState":
        return ChainState(0, self.a0_count, self.b0_count)


@dataclass(frozen=True)
class ChainState:
    """State of the exploration chain after ``n`` completed interviews.

    ``A`` counts coupon holders not yet interviewed, ``B`` counts
    individuals named in interviews who hold no coupon.
    """

    n: int
    A: int
    B: int

    def validate(self, N: int) -> None:
        if self.n < 0:
            raise ValueError(f"step index must be >= 0, got {self.n}")
        if not 0 <= self.A <= N - self.n:
            raise ValueError(f"A={self.A} outside [0, N-n]={N - self.n}")
        if self.B < 0:
            raise ValueError(f"B must be >= 0, got {self.B}")
        if self.n + self.A + self.B > N:
            raise ValueError(
                f"n + A + B = {self.n + self.A + self.B} exceeds N = {N}"
            )

    @property
    def unexplored(self) -> int:
        """Number of vertices never seen, given population size is implied."""
        raise AttributeError("use ModelParams.N - (n + A + B)")


@dataclass(frozen=True)
class Trajectory:
    """A full realization of the exploration chain.

    ``A[n]``, ``B[n]`` give the state after ``n`` interviews,
    ``reseed_steps`` lists the interview indices performed by a fresh seed
    (drawn because no coupon holder was available) and ``tau_first`` is the
    first n >= 1 with ``A[n] == 0`` (None if never within the horizon).
    """

    params: ModelParams
    A: np.ndarray
    B: np.ndarray
    reseed_steps: tuple[int, ...]
    tau_first: int | None

    def __post_init__(self) -> None:
        if len(self.A) != len(self.B):
            raise ValueError("A and B series must have equal length")

    @property
    def horizon(self) -> int:
        return len(self.A) - 1

    @property
    def steps(self) -> np.ndarray:
        return np.arange(len(self.A))

    def state(self, n: int) -> ChainState:
        return ChainState(n, int(self.A[n]), int(self.B[n]))
