"""Replication harness tying the chain, fluid and fluctuation layers.

Runs R independent trajectories with per-replicate seeds (replicate r uses
seed base + r, so parallel and sequential execution produce identical
output) and aggregates law-of-large-numbers sup-norm errors and CLT
variance comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .chain import simulate_trajectory
from .fluid import FluidParams, FluidSolution, solve_fluid
from .fluctuations import propagate_covariance
from .params import ModelParams, Trajectory

__all__ = [
    "ExperimentConfig",
    "run_replicates",
    "sup_error",
    "lln_report",
    "clt_report",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of a replication experiment over a grid of N values."""

    lam: float
    c: int
    a0: float = 0.005
    replicates: int = 100
    dt: float = 1e-4
    n_grid: tuple[int, ...] = (1000, 4000)
    seed: int = 20240817
    rates: str = "paper"
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.rates not in ("paper", "oracle"):
            raise ValueError(f"unknown rates source {self.rates!r}")

    def params_for(self, N: int) -> ModelParams:
        a0_count = max(1, round(self.a0 * N))
        return ModelParams(N, self.lam, self.c, a0_count=a0_count)

    def fluid_for(self, N: int) -> FluidSolution:
        params = self.params_for(N)
        fp = FluidParams(self.lam, self.c, params.a0_count / N)
        return solve_fluid(fp, self.dt)


def run_replicates(
    params: ModelParams,
    replicates: int,
    seed_base: int,
    horizon: int | None = None,
    n_jobs: int = 1,
) -> list[Trajectory]:
    """R independent trajectories with seeds base+1 .. base+R, in order."""
    seeds = [seed_base + r for r in range(1, replicates + 1)]
    if n_jobs == 1:
        return [simulate_trajectory(params, s, horizon) for s in seeds]
    return Parallel(n_jobs=n_jobs)(
        delayed(simulate_trajectory)(params, s, horizon) for s in seeds
    )


def sup_error(traj: Trajectory, fluid: FluidSolution) -> float:
    """sup over interview times of the L1 distance |A/N - a| + |B/N - b|."""
    N = traj.params.N
    t = traj.steps / N
    a_ref = fluid.a_at(t)
    b_ref = fluid.b_at(t)
    err = np.abs(traj.A / N - a_ref) + np.abs(traj.B / N - b_ref)
    return float(err.max())


def lln_report(cfg: ExperimentConfig) -> list[dict]:
    """Per-N median and 90th-percentile sup-norm error across replicates."""
    rows = []
    for N in cfg.n_grid:
        params = cfg.params_for(N)
        fluid = cfg.fluid_for(N)
        trajs = run_replicates(
            params, cfg.replicates, cfg.seed, n_jobs=cfg.n_jobs
        )
        errs = np.array([sup_error(tr, fluid) for tr in trajs])
        rows.append(
            {
                "N": N,
                "median_sup_err": float(np.median(errs)),
                "p90_sup_err": float(np.quantile(errs, 0.9)),
                "replicates": cfg.replicates,
            }
        )
    return rows


def _variance_stderr(x: np.ndarray) -> float:
    """Delta-method standard error of the unbiased sample variance."""
    n = len(x)
    xc = x - x.mean()
    m2 = np.mean(xc**2)
    m4 = np.mean(xc**4)
    var_of_var = (m4 - (n - 3) / (n - 1) * m2 * m2) / n
    return float(math.sqrt(max(var_of_var, 0.0)))


def clt_report(
    cfg: ExperimentConfig,
    checkpoints: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8),
) -> list[dict]:
    """Empirical vs. propagated variance of the first fluctuation component.

    Checkpoints are fractions of t0 (strictly inside (0, 1)), so they adapt
    to (lam, c).  Replicates absorbed before t0 are excluded; the survivor
    count is reported and must be at least 30.
    """
    if any(not 0.0 < q < 1.0 for q in checkpoints):
        raise ValueError("checkpoints must be strictly inside (0, 1)")
    rows = []
    for N in cfg.n_grid:
        params = cfg.params_for(N)
        fluid = cfg.fluid_for(N)
        n_star = int(math.floor(N * fluid.t0))
        trajs = run_replicates(
            params, cfg.replicates, cfg.seed, horizon=n_star, n_jobs=cfg.n_jobs
        )
        survivors = [
            tr
            for tr in trajs
            if tr.tau_first is None or tr.tau_first >= n_star
        ]
        if len(survivors) < 30:
            raise RuntimeError(
                f"only {len(survivors)} of {cfg.replicates} replicates "
                f"survived to t0 at N={N}; increase replicates or N"
            )
        times, sigmas = propagate_covariance(
            fluid, np.zeros((2, 2)), rates=cfg.rates
        )
        var_theory_grid = sigmas[:, 0, 0]
        for q in checkpoints:
            t_q = q * fluid.t0
            idx = min(int(math.floor(N * t_q)), n_star)
            a_ref = float(fluid.a_at(t_q))
            w1 = np.array(
                [
                    math.sqrt(N) * (tr.A[idx] / N - a_ref)
                    for tr in survivors
                ]
            )
            var_emp = float(np.var(w1, ddof=1))
            var_th = float(np.interp(t_q, times, var_theory_grid))
            rows.append(
                {
                    "N": N,
                    "t": t_q,
                    "var_emp": var_emp,
                    "var_theory": var_th,
                    "ratio": var_emp / var_th if var_th > 0 else math.nan,
                    "stderr": _variance_stderr(w1),
                    "survivors": len(survivors),
                }
            )
    return rows
