"""Deterministic limit of the renormalized exploration process.

As N grows, (A/N, B/N) at time t = n/N approaches the solution of

    da/dt = phi(t + a) - 1_{a > 0}
    db/dt = lam * (1 - t - a - b) - phi(t + a)

where phi(z) = E[min(Poisson(lam * (1 - z)), c)] is the expected capped
coupon hand-out when a fraction z of the population has been reached.  The
a-component is absorbed at 0: the right-hand side is discontinuous there
and points toward the axis from both sides, so the solution is clamped
after the absorption time t0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FluidParams",
    "FluidSolution",
    "pk",
    "poisson_weights",
    "phi",
    "phi_prime",
    "capped_poisson_mean",
    "find_zc",
    "solve_fluid",
]


def pk(k: int, z: float, lam: float) -> float:
    """Poisson(lam * (1 - z)) mass at k, accumulated iteratively."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    mu = lam * (1.0 - z)
    term = math.exp(-mu)
    for i in range(1, k + 1):
        term *= mu / i
    return term


def poisson_weights(c: int, z: float, lam: float) -> np.ndarray:
    """Array of p_k(z) for k = 0..c."""
    mu = lam * (1.0 - z)
    out = np.empty(c + 1)
    term = math.exp(-mu)
    out[0] = term
    for i in range(1, c + 1):
        term *= mu / i
        out[i] = term
    return out

def phi(z: float, lam: float, c: int) -> float:
    """Expected capped hand-out rate c - sum_{k<c} (c-k) p_k(z).

    Equals E[min(Poisson(lam*(1-z)), c)]; strictly decreasing in z with
    phi(1) = 0.
    """
    p = poisson_weights(c, z, lam)
    acc = float(c)
    for k in range(c):
        acc -= (c - k) * p[k]
    return acc


def phi_prime(z: float, lam: float, c: int) -> float:
    """Closed-form derivative of phi: -lam * P(Poisson(lam*(1-z)) <= c-1)."""
    mu = lam * (1.0 - z)
    term = 1.0
    acc = 1.0
    for k in range(1, c):
        term *= mu / k
        acc += term
    return -lam * math.exp(-mu) * acc


def capped_poisson_mean(z: float, lam: float, c: int, k_max: int = 200) -> float:
    """Brute-force E[min(Y, c)], Y ~ Poisson(lam*(1-z)); oracle for phi."""
    mu = lam * (1.0 - z)
    term = math.exp(-mu)
    acc = 0.0
    for k in range(k_max + 1):
        acc += min(k, c) * term
        term *= mu / (k + 1)
    return acc


def find_zc(lam: float, c: int, tol: float = 1e-12) -> float | None:
    """Root of phi(z) = 1, unique by strict monotonicity; None when phi < 1.

    No bracket beyond [0, 1] is assumed: bisection starts from the full
    interval whenever phi(0) > 1 (e.g. for c = 1, phi < 1 everywhere and
    the root is absent).
    """
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")
    if phi(0.0, lam, c) <= 1.0:
        return None
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi(mid, lam, c) > 1.0:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    # polish until the function value itself is within tolerance
    while abs(phi(z, lam, c) - 1.0) > tol:
        dz = (phi(z, lam, c) - 1.0) / phi_prime(z, lam, c)
        z -= dz
        if abs(dz) < 1e-17:
            break
    return z


@dataclass(frozen=True)
class FluidParams:
    """Limit-dynamics parameters; a0 is the initial coupon fraction."""

    lam: float
    c: int
    a0: float
    b0: float = 0.0

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.c < 1:
            raise ValueError(f"c must be >= 1, got {self.c}")
        if not 0.0 < self.a0 <= 1.0:
            raise ValueError(f"a0 must be in (0, 1], got {self.a0}")
        if self.b0 != 0.0:
            raise ValueError("b0 is fixed at 0 in this model")


@dataclass(frozen=True)
class FluidSolution:
    """Fluid trajectory on a uniform grid over [0, 1].

    ``t0`` is the absorption time of a (a == 0 from there on) and ``zc``
    the critical point where phi crosses 1 (None when absent).
    """

    params: FluidParams
    dt: float
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    t0: float
    zc: float | None

    @property
    def explored(self) -> np.ndarray:
        """Fraction of the population seen by time t: t + a_t + b_t."""
        return self.t + self.a + self.b

    def a_at(self, t) -> np.ndarray:
        return np.interp(t, self.t, self.a)

    def b_at(self, t) -> np.ndarray:
        return np.interp(t, self.t, self.b)


def _rk4(f, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def solve_fluid(fp: FluidParams, dt: float = 1e-4) -> FluidSolution:
    """Integrate the absorbed fluid system with RK4 and event detection.

    The pre-absorption field (phi(t+a) - 1, lam*(1-t-a-b) - phi(t+a)) is
    smooth; the crossing a = 0 is located by bisection on the step length
    to 1e-10 in t, after which a is clamped at 0 and b continues with the
    a = 0 field.  A second event caps the explored fraction: once t + b
    reaches 1 the unexplored pool is empty, re-seeds recruit named
    individuals instead, and b = 1 - t exactly from there on.
    """
    if not 0.0 < dt <= 1e-2:
        raise ValueError(f"dt must be in (0, 1e-2], got {dt}")
    lam, c = fp.lam, fp.c

    def f_pre(t, y):
        ph = phi(t + y[0], lam, c)
        u = max(1.0 - t - y[0] - y[1], 0.0)
        return np.array([ph - 1.0, lam * u - ph])

    def f_post(t, y):
        # a clamped at 0
        return np.array([0.0, lam * (1.0 - t - y[1]) - phi(t, lam, c)])

    n_steps = int(round(1.0 / dt))
    t_grid = np.linspace(0.0, 1.0, n_steps + 1)
    a = np.empty(n_steps + 1)
    b = np.empty(n_steps + 1)
    a[0], b[0] = fp.a0, fp.b0
    y = np.array([fp.a0, fp.b0])
    t0: float | None = None
    saturated = False  # unexplored pool exhausted: b = 1 - t from there on

    for i in range(n_steps):
        t = t_grid[i]
        h = t_grid[i + 1] - t
        if saturated:
            a[i + 1], b[i + 1] = 0.0, 1.0 - t_grid[i + 1]
            continue
        if t0 is not None:
            # post-absorption: watch for t + b reaching 1 (reseeds stop
            # finding unexplored individuals; from then on b = 1 - t)
            y_new = _rk4(f_post, t, y, h)
            y_new[0] = 0.0
            if t_grid[i + 1] + y_new[1] < 1.0:
                y = y_new
            else:
                saturated = True
                y = np.array([0.0, 1.0 - t_grid[i + 1]])
            a[i + 1], b[i + 1] = y[0], y[1]
            continue
        y_new = _rk4(f_pre, t, y, h)
        if y_new[0] > 0.0:
            y = y_new
        else:
            # locate the crossing within the step
            lo, hi = 0.0, h
            while hi - lo > 1e-10:
                mid = 0.5 * (lo + hi)
                if _rk4(f_pre, t, y, mid)[0] > 0.0:
                    lo = mid
                else:
                    hi = mid
            h_star = 0.5 * (lo + hi)
            y_star = _rk4(f_pre, t, y, h_star)
            t0 = t + h_star
            y = _rk4(f_post, t0, np.array([0.0, y_star[1]]), t_grid[i + 1] - t0)
            y[0] = 0.0
        a[i + 1], b[i + 1] = y[0], y[1]

    if t0 is None:
        t0 = 1.0
    return FluidSolution(
        params=fp,
        dt=dt,
        t=t_grid,
        a=a,
        b=b,
        t0=t0,
        zc=find_zc(lam, c),
    )
