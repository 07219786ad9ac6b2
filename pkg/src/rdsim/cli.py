"""Command-line front end: reproducible runs, CSV outputs, figure data."""

from __future__ import annotations

import argparse
import datetime
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chain import simulate_trajectory
from .fluid import FluidParams, phi, solve_fluid, find_zc
from .fluctuations import (
    empirical_fluctuation,
    propagate_covariance,
    rates_divergence_table,
)
from .hitting import hitting_distribution, seed_survival_curve, survival_table
from .montecarlo import ExperimentConfig, clt_report, lln_report, run_replicates
from .params import ModelParams


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path: Path, columns, rows, config: dict, no_timestamp: bool):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for k, v in config.items():
            fh.write(f"# {k} = {_fmt(v)}\n")
        if not no_timestamp:
            fh.write(f"# generated = {datetime.datetime.now().isoformat()}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _resolved(args, keys) -> dict:
    cfg = {k: getattr(args, k) for k in keys}
    cfg["rdsim_version"] = __version__
    return cfg


def cmd_simulate(args) -> int:
    params = ModelParams(
        args.n, args.lam, args.c, a0_count=args.a0, b0_count=args.b0
    )
    rows = []
    for r in range(1, args.replicates + 1):
        traj = simulate_trajectory(params, args.seed + r, args.horizon)
        reseed = set(traj.reseed_steps)
        for n in range(traj.horizon + 1):
            rows.append(
                (r, n, int(traj.A[n]), int(traj.B[n]), int(n in reseed))
            )
    out = Path(args.out) / "trajectory.csv"
    cfg = _resolved(
        args, ["n", "lam", "c", "a0", "b0", "replicates", "seed", "horizon"]
    )
    _write_csv(out, ["replicate", "n", "A", "B", "reseed"], rows, cfg, args.no_timestamp)
    return 0


def cmd_ode(args) -> int:
    fluid = solve_fluid(FluidParams(args.lam, args.c, args.a0), args.dt)
    rows = zip(fluid.t, fluid.a, fluid.b)
    cfg = _resolved(args, ["lam", "c", "a0", "dt"])
    _write_csv(Path(args.out) / "ode.csv", ["t", "a", "b"], rows, cfg, args.no_timestamp)
    zc = "none" if fluid.zc is None else _fmt(fluid.zc)
    print(f"t0={_fmt(fluid.t0)},zc={zc}")
    return 0


def cmd_hitprob(args) -> int:
    params = ModelParams(args.n, args.lam, args.c, a0_count=max(args.ell, 1))
    table = hitting_distribution(args.n0, args.m, args.ell, params)
    cfg = _resolved(args, ["n", "lam", "c", "n0", "m", "ell"])
    _write_csv(
        Path(args.out) / "hitprob.csv",
        ["n", "a", "u"],
        table.rows(),
        cfg,
        args.no_timestamp,
    )
    return 0


def cmd_survival(args) -> int:
    rows = seed_survival_curve(
        args.n, args.lam, list(range(1, args.cmax + 1)), args.n0max
    )
    cfg = _resolved(args, ["n", "lam", "cmax", "n0max"])
    _write_csv(
        Path(args.out) / "survival.csv",
        ["c", "n0", "prob"],
        rows,
        cfg,
        args.no_timestamp,
    )
    return 0


def cmd_clt(args) -> int:
    N = args.n
    a0_count = max(1, round(args.a0 * N))
    params = ModelParams(N, args.lam, args.c, a0_count=a0_count)
    fluid = solve_fluid(FluidParams(args.lam, args.c, a0_count / N), args.dt)
    n_star = int(math.floor(N * fluid.t0))
    trajs = run_replicates(
        params, args.replicates, args.seed, horizon=n_star, n_jobs=args.threads
    )
    survivors = [
        tr for tr in trajs if tr.tau_first is None or tr.tau_first >= n_star
    ]
    if not survivors:
        raise RuntimeError("no replicate survived to t0")
    times, sigmas = propagate_covariance(fluid, np.zeros((2, 2)), rates=args.rates)
    # empirical second moments across surviving replicates, on a thinned grid
    keep = np.unique(np.linspace(0, len(times) - 1, args.points).astype(int))
    paths = np.stack([empirical_fluctuation(tr, fluid)[1] for tr in survivors])
    rows = []
    for i in keep:
        w = paths[:, i, :]
        cov = np.cov(w.T, ddof=1)
        rows.append(
            (
                times[i],
                sigmas[i, 0, 0],
                sigmas[i, 0, 1],
                sigmas[i, 1, 1],
                cov[0, 0],
                cov[0, 1],
                cov[1, 1],
                args.rates,
            )
        )
    cfg = _resolved(
        args, ["n", "lam", "c", "a0", "replicates", "rates", "dt", "seed"]
    )
    cfg["survivors"] = len(survivors)
    _write_csv(
        Path(args.out) / "clt.csv",
        [
            "t",
            "var11_theory",
            "cov12_theory",
            "var22_theory",
            "var11_empirical",
            "cov12_empirical",
            "var22_empirical",
            "source",
        ],
        rows,
        cfg,
        args.no_timestamp,
    )
    return 0


def cmd_compare(args) -> int:
    cfg = ExperimentConfig(
        lam=args.lam,
        c=args.c,
        a0=args.a0,
        replicates=args.replicates,
        dt=args.dt,
        n_grid=tuple(args.n_grid),
        seed=args.seed,
        rates=args.rates,
        n_jobs=args.threads,
    )
    meta = _resolved(
        args, ["lam", "c", "a0", "replicates", "dt", "seed", "rates"]
    )
    meta["n_grid"] = " ".join(str(n) for n in args.n_grid)
    lln = lln_report(cfg)
    _write_csv(
        Path(args.out) / "lln.csv",
        ["N", "median_sup_err", "p90_sup_err", "replicates"],
        ([r[k] for k in ("N", "median_sup_err", "p90_sup_err", "replicates")] for r in lln),
        meta,
        args.no_timestamp,
    )
    clt = clt_report(cfg)
    _write_csv(
        Path(args.out) / "clt_summary.csv",
        ["N", "t", "var_emp", "var_theory", "ratio", "stderr", "survivors"],
        (
            [r[k] for k in ("N", "t", "var_emp", "var_theory", "ratio", "stderr", "survivors")]
            for r in clt
        ),
        meta,
        args.no_timestamp,
    )
    return 0


def cmd_figures(args) -> int:
    out = Path(args.out)
    lam, N = args.lam, args.n
    nts = args.no_timestamp
    base = {"lam": lam, "n": N, "seed": args.seed, "rdsim_version": __version__}

    # absorption-time table and fluid curves for a range of coupon caps;
    # the table is emitted for the configured a0 and for a0 = 0.1, the seed
    # fraction consistent with the published absorption-time values
    t0_rows = []
    fluids = {}
    for c in range(1, 7):
        fluid = solve_fluid(FluidParams(lam, c, args.a0), args.dt)
        fluids[c] = fluid
        zc = fluid.zc if fluid.zc is not None else math.nan
        t0_rows.append((c, args.a0, fluid.t0, zc))
        if c <= 4:
            _write_csv(
                out / f"ode_c{c}.csv",
                ["t", "a", "b"],
                zip(fluid.t, fluid.a, fluid.b),
                {**base, "c": c, "a0": args.a0, "dt": args.dt},
                nts,
            )
    if args.a0 != 0.1:
        for c in range(1, 7):
            fluid = solve_fluid(FluidParams(lam, c, 0.1), args.dt)
            zc = fluid.zc if fluid.zc is not None else math.nan
            t0_rows.append((c, 0.1, fluid.t0, zc))
    _write_csv(out / "t0_table.csv", ["c", "a0", "t0", "zc"], t0_rows, base, nts)

    # sample chain paths next to the fluid curves
    for c in range(1, 5):
        params = ModelParams(N, lam, c, a0_count=max(1, round(args.a0 * N)))
        traj = simulate_trajectory(params, args.seed + c)
        reseed = set(traj.reseed_steps)
        _write_csv(
            out / f"trajectory_c{c}.csv",
            ["replicate", "n", "A", "B", "reseed"],
            (
                (1, n, int(traj.A[n]), int(traj.B[n]), int(n in reseed))
                for n in range(traj.horizon + 1)
            ),
            {**base, "c": c},
            nts,
        )

    # hitting-time tables at n0 = 50
    params = ModelParams(N, lam, args.c, a0_count=1)
    table = hitting_distribution(50, 0, 1, params)
    _write_csv(out / "hitprob_n0_50.csv", ["n", "a", "u"], table.rows(),
               {**base, "c": args.c, "n0": 50}, nts)
    surv = survival_table(50, params)
    _write_csv(out / "survival_n0_50.csv", ["n", "a", "v"], surv.rows(),
               {**base, "c": args.c, "n0": 50}, nts)

    # seed survival curves for c = 1..10
    rows = seed_survival_curve(N, lam, list(range(1, 11)), 100)
    _write_csv(out / "survival_seed_curves.csv", ["c", "n0", "prob"], rows, base, nts)

    # one rescaled-deviation path (first component), c = 3
    c = 3
    a0_count = max(1, round(args.a0 * N))
    fluid = solve_fluid(FluidParams(lam, c, a0_count / N), args.dt)
    params = ModelParams(N, lam, c, a0_count=a0_count)
    n_star = int(math.floor(N * fluid.t0))
    for attempt in range(100):
        traj = simulate_trajectory(params, args.seed + attempt, horizon=n_star)
        if traj.tau_first is None or traj.tau_first >= n_star:
            break
    times, W = empirical_fluctuation(traj, fluid)
    _write_csv(
        out / "fluctuation_path.csv",
        ["t", "w1"],
        zip(times, W[:, 0]),
        {**base, "c": c, "a0": args.a0},
        nts,
    )

    # discrepancy report: claimed bracket of the phi(z) = 1 root
    zc_rows = []
    for lam_chk in (1.5, 2.0, 3.0):
        for c_chk in (2, 3, 4, 5):
            zc = find_zc(lam_chk, c_chk)
            lower = 1.0 - 1.0 / lam_chk
            phi_lower = phi(lower, lam_chk, c_chk)
            zc_rows.append(
                (
                    lam_chk,
                    c_chk,
                    zc,
                    lower,
                    phi_lower,
                    int(phi_lower > 1.0),
                    int(zc is not None and zc > lower),
                )
            )
    _write_csv(
        out / "zc_bracket_report.csv",
        ["lam", "c", "zc", "claimed_lower", "phi_at_claimed_lower",
         "phi_at_lower_exceeds_1", "zc_in_claimed_bracket"],
        zc_rows,
        base,
        nts,
    )

    # discrepancy report: closed-form vs moment-derived diffusion rates
    div = rates_divergence_table(fluids[3])
    cols = list(div[0].keys())
    _write_csv(
        out / "rates_divergence.csv",
        cols,
        ([d[k] for k in cols] for d in div),
        {**base, "c": 3},
        nts,
    )
    return 0


def _load_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=20240817)
    p.add_argument("--threads", type=int, default=-1,
                   help="parallel jobs (-1 = all cores)")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp comment for byte-identical reruns")
    p.add_argument("--config", default=None,
                   help="'key = value' file providing flag defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdsim",
        description="Coupon-referral exploration of Erdos-Renyi graphs: "
        "simulation, hitting probabilities, fluid limit, fluctuations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate chain trajectories")
    p.add_argument("--n", type=int, required=True, help="population size")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--a0", type=int, default=1, help="initial coupon holders")
    p.add_argument("--b0", type=int, default=0)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--horizon", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ode", help="integrate the fluid limit")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--a0", type=float, default=0.005,
                   help="initial coupon fraction")
    p.add_argument("--dt", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("hitprob", help="absorption-step distribution table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--m", type=int, default=0, help="start step")
    p.add_argument("--ell", type=int, default=1, help="start coupon count")
    _add_common(p)
    p.set_defaults(func=cmd_hitprob)

    p = sub.add_parser("survival", help="seed survival curves")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", type=int, default=None,
                   help="ignored; curves span 1..cmax")
    p.add_argument("--cmax", type=int, default=10)
    p.add_argument("--n0max", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("clt", help="fluctuation variance: theory vs empirical")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--a0", type=float, default=0.005)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--rates", choices=["paper", "oracle"], default="paper")
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--points", type=int, default=25,
                   help="number of reported time points")
    _add_common(p)
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("compare", help="LLN and CLT replication reports")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--a0", type=float, default=0.005)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--n-grid", type=int, nargs="+", default=[1000, 4000])
    p.add_argument("--rates", choices=["paper", "oracle"], default="paper")
    p.add_argument("--dt", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("figures", help="regenerate all figure-data CSVs")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--a0", type=float, default=0.005)
    p.add_argument("--dt", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=cmd_figures)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Turn a --config file into flag defaults (flags still win)."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    values = _load_config_file(argv[idx + 1])
    if not values:
        return argv
    # inject as flags right after the subcommand so explicit flags override
    extra: list[str] = []
    for key, val in values.items():
        flag = "--" + key.replace("_", "-")
        if flag in argv:
            continue
        if val.lower() in ("true", "false"):
            if val.lower() == "true":
                extra.append(flag)
        else:
            extra.extend([flag, *val.split()])
    # injected defaults go first so explicit flags override them
    return extra + argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv:
            argv = [argv[0]] + _apply_config_file(parser, argv[1:])
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, not a usage problem
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
