"""
beliefnet command line.

    python -m beliefnet generate --kind ba --n 100 --m 3 --seed 42 --out net.txt
    python -m beliefnet simulate configs/desk_scale.ini
    python -m beliefnet analyze configs/desk_scale.ini --report
    python -m beliefnet compare results/desk/moments.csv results/desk/analytic.csv
    python -m beliefnet fit observations.csv --mode cost

Exit codes: 0 ok, 2 config/input error, 3 numeric failure, 4 comparison failed.
"""
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

import pandas as pd

from beliefnet import __version__
from beliefnet.acquisition.engine import engine as acquisition_engine
from beliefnet.acquisition.models import InitialBeliefs, RIParams
from beliefnet.analytics.engine import AnalyticsEngine, eq8_gap, find_variance_increases
from beliefnet.config import RunConfig, env_threads, load_run_config, log_level
from beliefnet.dynamics.engine import engine as dynamics_engine
from beliefnet.dynamics.ensemble import boxplot_stats, histogram, resolve_workers, simulate_ensemble
from beliefnet.errors import (
    BeliefNetError,
    ConfigError,
    CsvFormatError,
    DegenerateFit,
    DimensionMismatch,
    DomainError,
    DuplicateAbscissa,
    InvalidSpec,
    NetworkParseError,
    NetworkValidationError,
    NumericalError,
    ProvenanceMismatch,
    TooFewPoints,
    TooFewReports,
)
from beliefnet.estimation.engine import engine as estimation_engine
from beliefnet.estimation.models import RewardObservation
from beliefnet.network.engine import engine as network_engine
from beliefnet.network.io import load_network, save_network
from beliefnet.network.models import GraphSpec, Network
from beliefnet.services import csv_store

logger = logging.getLogger("beliefnet")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_COMPARE = 4

INPUT_ERRORS = (
    ConfigError, InvalidSpec, NetworkParseError, NetworkValidationError, ProvenanceMismatch,
    CsvFormatError, DimensionMismatch, TooFewReports, TooFewPoints, DuplicateAbscissa,
    DegenerateFit, OSError,
)

KINDS = {"ba": "barabasi_albert", "barabasi_albert": "barabasi_albert", "complete": "complete", "ring": "ring"}


# ---------------------------------------------------------------------------
# Pipeline pieces shared by simulate / analyze
# ---------------------------------------------------------------------------

def build_network(cfg: RunConfig) -> Network:
    if cfg.network.file is not None:
        return load_network(cfg.network.file, allow_self_loops=cfg.network.allow_self_loops)
    return network_engine.generate(cfg.network.to_spec())


def build_initial_beliefs(cfg: RunConfig, n: int) -> InitialBeliefs:
    agents = cfg.agents
    theta = cfg.sim.theta
    if agents.mode == "uniform_variance":
        return acquisition_engine.sample_uniform_variances(n, theta, agents.low, agents.high, agents.seed)

    columns = {}
    for name in ("a", "b", "r"):
        values = getattr(agents, name)
        if len(values) == 1:
            values = values * n
        if len(values) != n:
            raise ConfigError(f"[agents] {name} has {len(values)} values for {n} agents")
        columns[name] = values
    params = [RIParams(a=a, b=b, r=r) for a, b, r in zip(columns["a"], columns["b"], columns["r"])]
    try:
        return acquisition_engine.form_initial_beliefs(params, theta)
    except DomainError as e:
        raise ConfigError(f"[agents] {e}")


def _parse_steps(text: Optional[str]) -> List[int]:
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--histogram expects comma-separated steps, got {text!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = GraphSpec(kind=KINDS[args.kind], n=args.n, m=args.m, k=args.k, seed=args.seed)
    net = network_engine.generate(spec)
    save_network(net, args.out)
    print(f"[OK] {spec.kind} network with {net.n} agents -> {args.out}")
    print(f"   Average degree: {net.average_degree():.4f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    sim = cfg.sim
    updates = {}
    if args.record_trajectories:
        updates["record_trajectories"] = True
    if args.track_agents:
        updates["track_agents"] = True
    if args.histogram:
        updates["histogram_steps"] = _parse_steps(args.histogram)
    if args.seed is not None:
        updates["seed"] = args.seed
    sim = sim.model_copy(update=updates)
    sim.check()
    if cfg.output.record_trajectories and not sim.record_trajectories:
        sim = sim.model_copy(update={"record_trajectories": True})

    out_dir = Path(args.output) if args.output else cfg.output.ensure()
    out_dir.mkdir(parents=True, exist_ok=True)

    net = build_network(cfg)
    init = build_initial_beliefs(cfg, net.n)
    threads = args.threads if args.threads is not None else env_threads()
    workers = resolve_workers(threads)

    # analytic 3-sigma band over the full horizon; the ensemble trims it to its own stop step
    band = AnalyticsEngine().analytic_moments(net, init, sim.horizon)

    started = time.time()
    ensemble = simulate_ensemble(net, init, sim, band=(band.band_lo, band.band_hi), workers=workers)
    elapsed = time.time() - started

    csv_store.write_moments(ensemble, out_dir / "moments.csv")
    if sim.record_trajectories:
        csv_store.write_trajectories(ensemble, out_dir / "trajectories.csv")
    if sim.track_agents:
        csv_store.write_tracked(ensemble, out_dir / "tracked.csv")
        csv_store.write_frame(boxplot_stats(ensemble), out_dir / "boxplot.csv")
    if ensemble.snapshots:
        frames = [histogram(ensemble, t) for t in sorted(ensemble.snapshots)]
        csv_store.write_frame(pd.concat(frames, ignore_index=True), out_dir / "histogram.csv")

    csv_store.write_json({
        "version": __version__,
        "config": str(args.config),
        "agents": net.n,
        "average_degree": net.average_degree(),
        "theta": sim.theta,
        "seed": sim.seed,
        "replicates": sim.replicates,
        "horizon": sim.horizon,
        "stop": ensemble.stop,
        "workers": workers,
        "tracked": ensemble.tracked,
        "runtime_seconds": round(elapsed, 3),
    }, out_dir / "metadata.json")

    print(f"[OK] Simulated {sim.replicates} replicates x {ensemble.steps} steps x {net.n} agents in {elapsed:.2f}s")
    print(f"   Output: {out_dir}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = load_run_config(args.config)
    out = Path(args.out) if args.out else cfg.output.ensure() / "analytic.csv"

    net = build_network(cfg)
    init = build_initial_beliefs(cfg, net.n)
    analytics = AnalyticsEngine(band_source=args.band_source)
    horizon = cfg.sim.horizon
    if cfg.sim.convergence_tol is not None:
        # same early stop as the simulation, so the two files line up
        horizon = dynamics_engine.variance_schedule(net, init.variances, horizon, cfg.sim.convergence_tol).stop
    traj = analytics.analytic_moments(net, init, horizon)
    csv_store.write_analytic(traj, out)

    print(f"[OK] Analytic moments for {traj.n} agents over {traj.steps} steps -> {out}")
    if args.report:
        increases = find_variance_increases(traj)
        print(f"   eq8 max relative gap: {eq8_gap(traj):.3e}")
        print(f"   Signal-variance increases: {len(increases)}")
        for agent, t in increases[:20]:
            print(f"      agent {agent}: D(t={t + 1}) = {traj.var_exact[t + 1, agent]:.6g} > "
                  f"D(t={t}) = {traj.var_exact[t, agent]:.6g}")
        if len(increases) > 20:
            print(f"      ... {len(increases) - 20} more")
    return EXIT_OK


def cmd_compare(args) -> int:
    analytic = csv_store.read_analytic(args.analytic_csv)
    ensemble = csv_store.read_moments(args.sim_csv, theta=analytic.theta, replicates=args.replicates)
    report = AnalyticsEngine().compare_moments(ensemble, analytic)

    if args.out:
        csv_store.write_json(csv_store.comparison_payload(report, args.coverage_floor, args.z_limit), args.out)
    if args.table:
        csv_store.write_frame(report.to_frame(), args.table)

    summary = report.summary()
    passed = report.passed(args.coverage_floor, args.z_limit)
    source = "band counts" if report.coverage_exact else "gaussian estimate"
    print(f"   Min coverage ({source}): {summary['min_coverage']:.4f} (floor {args.coverage_floor})")
    print(f"   Max |mean z|: {summary['max_abs_mean_z']:.3f} (limit {args.z_limit})")
    print(f"   Max relative variance error: {summary['max_rel_var_error']:.3%}")
    if not passed:
        logger.warning("[ANALYTICS] Comparison failed")
        print("[ERROR] Simulation and analytic moments disagree")
        return EXIT_COMPARE
    print("[OK] Simulation consistent with analytic moments")
    return EXIT_OK


def cmd_fit(args) -> int:
    if args.mode == "cost":
        obs = csv_store.read_cost_observations(args.observations)
        fit = estimation_engine.fit_cost_power_law(obs, weighted=args.weighted)
        print(f"[OK] Cost power law fitted on {len(obs)} points")
        print(f"   a = {fit.a:.10g}")
        print(f"   b = {fit.b:.10g}")
        print(f"   r2 = {fit.r2:.6f}")
        if args.out:
            csv_store.write_json(fit.model_dump(), args.out)
        return EXIT_OK

    if args.a is None or args.b is None:
        raise ConfigError("--mode reward needs --a and --b from a cost fit")
    if not (args.a > 0.0 and args.b > 0.0):
        raise ConfigError(f"--a and --b must be > 0, got a={args.a} b={args.b}")
    table = csv_store.read_reward_table(args.observations)

    if "variance" in table.columns:
        rows = []
        for reward, variance in zip(table["reward"], table["variance"]):
            try:
                obs = RewardObservation(reward=float(reward), variance=float(variance))
            except ValueError as e:
                raise CsvFormatError(f"{args.observations}: {e}")
            r = estimation_engine.estimate_r(obs.variance, args.a, args.b)
            rows.append({"reward": obs.reward, "variance": obs.variance, "r": r,
                         "predicted_variance": estimation_engine.predict_variance(r, args.a, args.b)})
        result = pd.DataFrame(rows, columns=["reward", "variance", "r", "predicted_variance"])
        print(f"[OK] Estimated r for {len(result)} reward rows")
        print(result.to_string(index=False))
        if args.table:
            csv_store.write_frame(result, args.table)
        if args.out:
            csv_store.write_json({"a": args.a, "b": args.b, "rows": result.to_dict(orient="records")}, args.out)
        return EXIT_OK

    fit = estimation_engine.run_reward_experiment(table, args.a, args.b, args.train_fraction, args.seed)
    print(f"[OK] Reward experiment on {table['subject'].nunique()} subjects")
    for reward in sorted(fit.r):
        print(f"   reward {reward:g}: r = {fit.r[reward]:.6g}, predicted = {fit.predicted[reward]:.6g}, "
              f"actual = {fit.actual[reward]:.6g}")
    print(f"   Mean relative error: {fit.mean_relative_error:.2%}")
    if args.out:
        csv_store.write_json(fit.model_dump(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beliefnet",
                                     description="Bayesian social learning with rationally inattentive agents")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate an influence network file")
    p.add_argument("--kind", choices=sorted(KINDS), required=True)
    p.add_argument("--n", type=int, required=True, help="number of agents")
    p.add_argument("--m", type=int, default=3, help="BA edges per new node (default: 3)")
    p.add_argument("--k", type=int, default=1, help="ring neighbours per side (default: 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="network file to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run the Monte-Carlo ensemble of a config")
    p.add_argument("config")
    p.add_argument("--output", help="output directory (default: [output] directory)")
    p.add_argument("--seed", type=int, help="override [simulation] seed")
    p.add_argument("--record-trajectories", action="store_true", help="also write trajectories.csv")
    p.add_argument("--track-agents", action="store_true", help="write tracked.csv and boxplot.csv")
    p.add_argument("--histogram", help="comma-separated steps for histogram.csv")
    p.add_argument("--threads", type=int, help="worker threads (0 = all cores; default: BELIEFNET_THREADS)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="exact analytic moments of a config")
    p.add_argument("config")
    p.add_argument("--out", help="CSV path (default: <output directory>/analytic.csv)")
    p.add_argument("--band-source", choices=["exact", "eq8"], default="exact")
    p.add_argument("--report", action="store_true", help="print eq8 gap and variance increases")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="check simulated moments against analytic ones")
    p.add_argument("sim_csv")
    p.add_argument("analytic_csv")
    p.add_argument("--coverage-floor", type=float, default=0.985)
    p.add_argument("--z-limit", type=float, default=4.0)
    p.add_argument("--replicates", type=int, help="replicate count when the moment CSV has no count column")
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--table", help="per (agent, t) CSV path")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("fit", help="fit acquisition parameters to observations")
    p.add_argument("observations")
    p.add_argument("--mode", choices=["cost", "reward"], default="cost")
    p.add_argument("--weighted", action="store_true", help="weight cost points by count")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--table", help="per-row CSV path (reward rows)")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except INPUT_ERRORS as e:
        print(f"[ERROR] {e}")
        return EXIT_INPUT
    except (NumericalError, DomainError, FloatingPointError) as e:
        print(f"[ERROR] numeric failure: {e}")
        return EXIT_NUMERIC
    except (BeliefNetError, ValueError) as e:
        print(f"[ERROR] {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
