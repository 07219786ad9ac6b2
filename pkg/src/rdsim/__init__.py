"""Coupon-referral (respondent-driven sampling) exploration of G(N, lam/N).

Layers: exact Markov chain (``chain``), concrete-graph exploration
(``graph``), absorption-time analysis (``hitting``), deterministic fluid
limit (``fluid``), Gaussian fluctuations (``fluctuations``) and a
replication harness (``montecarlo``).  The ``rdsim`` console script wraps
everything with reproducible CSV outputs.
"""

from .params import ChainState, ModelParams, Trajectory
from .chain import (
    marginal_transition_a,
    simulate_batch,
    simulate_trajectory,
    step,
    transition_prob,
    transition_row,
)
from .graph import Graph, explore, generate_er
from .hitting import hitting_distribution, seed_survival_curve, survival_table
from .fluid import FluidParams, FluidSolution, find_zc, phi, phi_prime, solve_fluid
from .fluctuations import (
    CovarianceRates,
    covariance_rates,
    empirical_fluctuation,
    oracle_rates,
    propagate_covariance,
    rates_divergence_table,
    simulate_fluctuation,
)
from .montecarlo import ExperimentConfig, clt_report, lln_report, run_replicates

__version__ = "0.1.0"

__all__ = [
    "ChainState",
    "CovarianceRates",
    "ExperimentConfig",
    "FluidParams",
    "FluidSolution",
    "Graph",
    "ModelParams",
    "Trajectory",
    "clt_report",
    "covariance_rates",
    "empirical_fluctuation",
    "explore",
    "find_zc",
    "generate_er",
    "hitting_distribution",
    "lln_report",
    "marginal_transition_a",
    "oracle_rates",
    "phi",
    "phi_prime",
    "propagate_covariance",
    "rates_divergence_table",
    "run_replicates",
    "seed_survival_curve",
    "simulate_batch",
    "simulate_fluctuation",
    "simulate_trajectory",
    "solve_fluid",
    "step",
    "survival_table",
    "transition_prob",
    "transition_row",
]
