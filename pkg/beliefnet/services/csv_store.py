"""
CSV Store - reading and writing every tabular artifact of a run.

All files are UTF-8 with LF line endings and a mandatory header; floats are
written with 17 significant digits so a write/read cycle is lossless.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from beliefnet.analytics.models import ComparisonReport, MomentTrajectory
from beliefnet.dynamics.ensemble import Ensemble, MomentAccumulator
from beliefnet.errors import CsvFormatError
from beliefnet.estimation.models import CostObservation

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

MOMENT_COLUMNS = ["t", "agent", "mean_s", "var_s", "mean_pi", "var_pi", "sigma2"]
TRAJECTORY_COLUMNS = ["replicate", "t", "agent", "signal", "mean", "variance"]
ANALYTIC_COLUMNS = ["t", "agent", "mean", "var_exact", "var_eq8", "sigma2", "band_lo", "band_hi"]
TRACKED_COLUMNS = ["replicate", "t", "role", "agent", "signal"]


def _write(df: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    logger.info(f"[IO] Wrote {len(df)} rows to {path}")
    return path


def _load(path) -> pd.DataFrame:
    path = Path(path)
    try:
        df = pd.read_csv(path, encoding="utf-8")
    except FileNotFoundError:
        raise CsvFormatError(f"{path}: no such file")
    except pd.errors.EmptyDataError:
        raise CsvFormatError(f"{path}: file is empty")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise CsvFormatError(f"{path}: {e}")
    if df.empty:
        raise CsvFormatError(f"{path}: header only, no data rows")
    return df


def _require(df: pd.DataFrame, path, columns: Sequence[str]) -> None:
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise CsvFormatError(f"{path}: missing column(s) {missing}; found {list(df.columns)}")
    for col in columns:
        if not pd.api.types.is_numeric_dtype(df[col]) or df[col].isna().any():
            raise CsvFormatError(f"{path}: column {col!r} has empty or non-numeric values")


def _read(path, required: Sequence[str]) -> pd.DataFrame:
    df = _load(path)
    _require(df, path, required)
    return df


def _long_index(steps: int, n: int):
    return np.repeat(np.arange(steps), n), np.tile(np.arange(n), steps)


def _grid(df: pd.DataFrame, path, columns: Sequence[str]) -> Dict[str, np.ndarray]:
    """Pivot long (t, agent) rows back to [t, agent] arrays; the grid must be complete."""
    df = df.sort_values(["t", "agent"], kind="stable")
    steps = int(df["t"].max()) + 1
    n = int(df["agent"].max()) + 1
    t, agent = _long_index(steps, n)
    if (len(df) != steps * n or not np.array_equal(df["t"].to_numpy(), t)
            or not np.array_equal(df["agent"].to_numpy(), agent)):
        raise CsvFormatError(f"{path}: rows do not form a complete grid of {steps} steps x {n} agents")
    return {c: df[c].to_numpy(dtype=np.float64).reshape(steps, n) for c in columns}


# ---------------------------------------------------------------------------
# Simulation output
# ---------------------------------------------------------------------------

def moments_frame(ensemble: Ensemble) -> pd.DataFrame:
    t, agent = _long_index(ensemble.steps, ensemble.n)
    df = pd.DataFrame({
        "t": t,
        "agent": agent,
        "mean_s": ensemble.signals.mean.reshape(-1),
        "var_s": ensemble.signals.variance.reshape(-1),
        "mean_pi": ensemble.means.mean.reshape(-1),
        "var_pi": ensemble.means.variance.reshape(-1),
        "sigma2": ensemble.sigma2.reshape(-1),
        "count": ensemble.count,
    })
    if ensemble.band_hits is not None:
        df["in_band"] = ensemble.band_hits.reshape(-1)
    return df


def write_moments(ensemble: Ensemble, path) -> Path:
    return _write(moments_frame(ensemble), path)


def read_moments(path, theta: float = math.nan, replicates: Optional[int] = None) -> Ensemble:
    """Rebuild an Ensemble summary (no raw draws) from a moment CSV.

    `count` and `in_band` are optional; without `count` the replicate count must be given.
    """
    df = _read(path, MOMENT_COLUMNS)
    if "count" in df.columns:
        _require(df, path, ["count"])
        counts = df["count"].unique()
        if counts.size != 1:
            raise CsvFormatError(f"{path}: replicate count differs between rows")
        count = int(counts[0])
        if replicates is not None and replicates != count:
            raise CsvFormatError(f"{path}: count column says {count} replicates, caller says {replicates}")
    elif replicates is None:
        raise CsvFormatError(f"{path}: no 'count' column; pass the replicate count (compare --replicates N)")
    elif replicates < 1:
        raise CsvFormatError(f"{path}: replicate count must be >= 1, got {replicates}")
    else:
        count = int(replicates)
    cols = ["mean_s", "var_s", "mean_pi", "var_pi", "sigma2"]
    if "in_band" in df.columns:
        _require(df, path, ["in_band"])
        cols.append("in_band")
    g = _grid(df, path, cols)
    return Ensemble(
        theta=theta,
        replicates=count,
        signals=MomentAccumulator.from_moments(count, g["mean_s"], g["var_s"]),
        means=MomentAccumulator.from_moments(count, g["mean_pi"], g["var_pi"]),
        sigma2=g["sigma2"],
        stop=g["sigma2"].shape[0] - 1,
        band_hits=g["in_band"].astype(np.int64) if "in_band" in g else None,
    )


def write_trajectories(ensemble: Ensemble, path) -> Path:
    if "signals" not in ensemble.trajectories and "means" not in ensemble.trajectories:
        raise ValueError("ensemble was run without record_trajectories")
    any_series = next(iter(ensemble.trajectories.values()))
    reps, steps, n = any_series.shape
    nan = np.full(any_series.shape, np.nan)
    df = pd.DataFrame({
        "replicate": np.repeat(np.arange(reps), steps * n),
        "t": np.tile(np.repeat(np.arange(steps), n), reps),
        "agent": np.tile(np.arange(n), reps * steps),
        "signal": ensemble.trajectories.get("signals", nan).reshape(-1),
        "mean": ensemble.trajectories.get("means", nan).reshape(-1),
        # the variance path is the same in every replicate
        "variance": np.tile(ensemble.sigma2.reshape(-1), reps),
    })
    return _write(df, path)


def write_tracked(ensemble: Ensemble, path) -> Path:
    if ensemble.tracked_signals is None:
        raise ValueError("ensemble was run without tracked agents")
    frames = []
    reps, steps, _ = ensemble.tracked_signals.shape
    for k, (role, agent) in enumerate(ensemble.tracked.items()):
        frames.append(pd.DataFrame({
            "replicate": np.repeat(np.arange(reps), steps),
            "t": np.tile(np.arange(steps), reps),
            "role": role,
            "agent": agent,
            "signal": ensemble.tracked_signals[:, :, k].reshape(-1),
        }))
    return _write(pd.concat(frames, ignore_index=True)[TRACKED_COLUMNS], path)


def write_frame(df: pd.DataFrame, path) -> Path:
    """Histogram, boxplot and comparison tables go out as-is."""
    return _write(df, path)


# ---------------------------------------------------------------------------
# Analytic moments
# ---------------------------------------------------------------------------

def analytic_frame(traj: MomentTrajectory) -> pd.DataFrame:
    t, agent = _long_index(traj.steps, traj.n)
    return pd.DataFrame({
        "t": t,
        "agent": agent,
        "mean": traj.mean.reshape(-1),
        "var_exact": traj.var_exact.reshape(-1),
        "var_eq8": traj.var_eq8.reshape(-1),
        "sigma2": traj.sigma2.reshape(-1),
        "band_lo": traj.band_lo.reshape(-1),
        "band_hi": traj.band_hi.reshape(-1),
    })


def write_analytic(traj: MomentTrajectory, path) -> Path:
    return _write(analytic_frame(traj), path)


def read_analytic(path) -> MomentTrajectory:
    df = _read(path, ANALYTIC_COLUMNS)
    g = _grid(df, path, ANALYTIC_COLUMNS[2:])
    theta = float(g["mean"][0, 0])
    return MomentTrajectory(
        theta=theta,
        mean=g["mean"],
        var_exact=g["var_exact"],
        var_eq8=g["var_eq8"],
        sigma2=g["sigma2"],
        delta2=np.maximum(g["var_exact"] - g["sigma2"], 0.0),
        band_lo=g["band_lo"],
        band_hi=g["band_hi"],
    )


# ---------------------------------------------------------------------------
# Experiment observations
# ---------------------------------------------------------------------------

def read_cost_observations(path) -> List[CostObservation]:
    df = _read(path, ["cost", "variance"])
    if "count" not in df.columns:
        df["count"] = 2
    try:
        return [CostObservation(cost=r.cost, variance=r.variance, count=int(r.count))
                for r in df.itertuples(index=False)]
    except ValueError as e:
        raise CsvFormatError(f"{path}: {e}")


def read_reward_table(path) -> pd.DataFrame:
    """Either pre-aggregated `reward,variance` rows or report-level `reward,[subject,]report` rows.

    Report-level files without a subject column treat every row as its own subject.
    """
    df = _load(path)
    if "variance" in df.columns:
        _require(df, path, ["reward", "variance"])
        return df[["reward", "variance"]]
    if "report" not in df.columns:
        raise CsvFormatError(f"{path}: expected a 'variance' or a 'report' column")
    _require(df, path, ["reward", "report"])
    if "subject" not in df.columns:
        df["subject"] = np.arange(len(df))
    return df[["reward", "subject", "report"]]


def write_cost_observations(obs: Sequence[CostObservation], path) -> Path:
    df = pd.DataFrame([o.model_dump() for o in obs], columns=["cost", "variance", "count"])
    return _write(df, path)


# ---------------------------------------------------------------------------
# JSON reports
# ---------------------------------------------------------------------------

def write_json(payload: Dict[str, Any], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"[IO] Saved {path}")
    return path


def comparison_payload(report: ComparisonReport, coverage_floor: Optional[float] = None,
                       z_limit: Optional[float] = None) -> Dict[str, Any]:
    out = {"summary": report.summary(), "records": [r.model_dump() for r in report.records]}
    if coverage_floor is not None and z_limit is not None:
        out["summary"]["passed"] = report.passed(coverage_floor, z_limit)
    return out
