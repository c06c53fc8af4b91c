"""
Seeded Monte-Carlo ensembles of the belief dynamics.

Replicate rho draws from its own stream SeedSequence(seed, spawn_key=(rho,)).
Replicates are processed in fixed-size blocks; blocks run on a thread pool and
their moment accumulators are merged in block order, so results do not depend
on the number of workers.
"""
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from beliefnet.acquisition.engine import select_tracked_agents
from beliefnet.acquisition.models import InitialBeliefs
from beliefnet.dynamics.engine import VarianceSchedule, engine as dynamics_engine
from beliefnet.dynamics.models import BeliefState, SimConfig
from beliefnet.errors import DimensionMismatch
from beliefnet.network.models import Network

logger = logging.getLogger(__name__)

HISTOGRAM_BIN_WIDTH = 0.01


class MomentAccumulator:
    """Running count / mean / M2 over replicates for arrays of a fixed shape.

    Batches are folded in with the pairwise (Chan et al.) combination, which is
    exact in count and mean up to round-off and stable for the variance.
    """

    def __init__(self, shape: Tuple[int, ...]):
        self.count = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    @classmethod
    def from_moments(cls, count: int, mean: np.ndarray, variance: np.ndarray) -> "MomentAccumulator":
        acc = cls(mean.shape)
        acc.count = int(count)
        acc.mean = np.array(mean, dtype=np.float64)
        acc.m2 = np.array(variance, dtype=np.float64) * max(count - 1, 0)
        return acc

    def update_batch(self, values: np.ndarray) -> None:
        """values: (batch, *shape)"""
        if values.shape[0] == 0:
            return
        other = MomentAccumulator(self.mean.shape)
        other.count = values.shape[0]
        other.mean = values.mean(axis=0)
        other.m2 = ((values - other.mean) ** 2).sum(axis=0)
        self.merge(other)

    def merge(self, other: "MomentAccumulator") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / total)
        self.m2 = self.m2 + other.m2 + delta ** 2 * (self.count * other.count / total)
        self.count = total

    @property
    def variance(self) -> np.ndarray:
        # single replicate: no spread to report
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)


@dataclass
class Ensemble:
    """Monte-Carlo summary over replicates. Arrays are indexed [t, agent]."""
    theta: float
    replicates: int
    signals: MomentAccumulator
    means: MomentAccumulator
    sigma2: np.ndarray
    stop: int
    tracked: Dict[str, int] = field(default_factory=dict)
    tracked_signals: Optional[np.ndarray] = None          # (replicate, t, role)
    snapshots: Dict[int, np.ndarray] = field(default_factory=dict)  # t -> (replicate, agent)
    band_hits: Optional[np.ndarray] = None                # draws inside the supplied band
    trajectories: Dict[str, np.ndarray] = field(default_factory=dict)  # series -> (replicate, t, agent)

    @property
    def n(self) -> int:
        return int(self.sigma2.shape[1])

    @property
    def steps(self) -> int:
        return int(self.sigma2.shape[0])

    @property
    def count(self) -> int:
        return self.signals.count

    def coverage(self) -> Optional[np.ndarray]:
        if self.band_hits is None or self.count == 0:
            return None
        return self.band_hits / self.count


@dataclass
class _BlockResult:
    signals: MomentAccumulator
    means: MomentAccumulator
    band_hits: Optional[np.ndarray]
    tracked: Optional[np.ndarray]
    snapshots: Dict[int, np.ndarray]
    trajectories: Dict[str, np.ndarray]


def replicate_rng(seed: int, rho: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rho,)))


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        workers = int(os.getenv("BELIEFNET_THREADS", "0") or 0)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


class EnsembleRunner:
    def __init__(self, net: Network, init: InitialBeliefs, cfg: SimConfig,
                 band: Optional[Tuple[np.ndarray, np.ndarray]] = None):
        cfg.check()
        if init.n != net.n:
            raise DimensionMismatch(f"network has {net.n} agents but {init.n} initial beliefs were given")
        self.net = net
        self.init = init
        self.cfg = cfg
        self.schedule: VarianceSchedule = dynamics_engine.variance_schedule(
            net, init.variances, cfg.horizon, cfg.convergence_tol
        )
        self.steps = self.schedule.stop + 1
        self.tracked = select_tracked_agents(init) if cfg.track_agents else {}
        self.histogram_steps = sorted({t for t in cfg.histogram_steps if t < self.steps})

        self.band = None
        if band is not None:
            lo, hi = (np.asarray(b, dtype=np.float64) for b in band)
            if lo.shape[0] < self.steps or lo.shape[1] != net.n or hi.shape != lo.shape:
                raise DimensionMismatch(f"band shape {lo.shape} does not cover ({self.steps}, {net.n})")
            self.band = (lo[: self.steps], hi[: self.steps])

    def _run_block(self, start: int, stop: int) -> _BlockResult:
        n, steps = self.net.n, self.steps
        size = stop - start
        theta = self.cfg.theta
        weights_t = self.net.weights.T
        sd = np.sqrt(self.schedule.sigma2)
        alpha = self.schedule.alpha

        noise = np.empty((size, steps, n))
        for k, rho in enumerate(range(start, stop)):
            noise[k] = replicate_rng(self.cfg.seed, rho).standard_normal((steps, n))

        s_all = np.empty((size, steps, n))
        pi_all = np.empty((size, steps, n))
        pi = np.full((size, n), theta)
        for t in range(steps):
            s = pi + sd[t] * noise[:, t, :]
            s_all[:, t, :] = s
            pi_all[:, t, :] = pi
            if t < steps - 1:
                eta = s @ weights_t
                pi = alpha[t] * eta + (1.0 - alpha[t]) * pi

        acc_s = MomentAccumulator((steps, n))
        acc_s.update_batch(s_all)
        acc_pi = MomentAccumulator((steps, n))
        acc_pi.update_batch(pi_all)

        hits = None
        if self.band is not None:
            lo, hi = self.band
            hits = ((s_all >= lo) & (s_all <= hi)).sum(axis=0)

        tracked = None
        if self.tracked:
            tracked = s_all[:, :, list(self.tracked.values())].copy()

        snapshots = {t: s_all[:, t, :].copy() for t in self.histogram_steps}

        trajectories = {}
        if self.cfg.record_trajectories:
            if "signals" in self.cfg.record:
                trajectories["signals"] = s_all
            if "means" in self.cfg.record:
                trajectories["means"] = pi_all

        return _BlockResult(acc_s, acc_pi, hits, tracked, snapshots, trajectories)

    def run(self, workers: Optional[int] = None) -> Ensemble:
        workers = resolve_workers(workers)
        block = self.cfg.block_size
        bounds = [(b, min(b + block, self.cfg.replicates)) for b in range(0, self.cfg.replicates, block)]

        started = time.time()
        logger.info(
            f"[SIM] {self.cfg.replicates} replicates x {self.steps} steps x {self.net.n} agents, "
            f"{len(bounds)} blocks on {workers} worker(s), seed={self.cfg.seed}"
        )
        if workers == 1 or len(bounds) == 1:
            results = [self._run_block(a, b) for a, b in bounds]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda ab: self._run_block(*ab), bounds))

        acc_s = MomentAccumulator((self.steps, self.net.n))
        acc_pi = MomentAccumulator((self.steps, self.net.n))
        hits = np.zeros((self.steps, self.net.n), dtype=np.int64) if self.band is not None else None
        for k, res in enumerate(results):
            acc_s.merge(res.signals)
            acc_pi.merge(res.means)
            if hits is not None:
                hits += res.band_hits
            logger.debug(f"[SIM] merged block {k + 1}/{len(results)}")

        ensemble = Ensemble(
            theta=self.cfg.theta,
            replicates=self.cfg.replicates,
            signals=acc_s,
            means=acc_pi,
            sigma2=self.schedule.sigma2.copy(),
            stop=self.schedule.stop,
            tracked=dict(self.tracked),
            tracked_signals=np.concatenate([r.tracked for r in results]) if self.tracked else None,
            snapshots={t: np.concatenate([r.snapshots[t] for r in results]) for t in self.histogram_steps},
            band_hits=hits,
            trajectories={
                key: np.concatenate([r.trajectories[key] for r in results])
                for key in (results[0].trajectories if results else {})
            },
        )
        logger.info(f"[SIM] Done in {time.time() - started:.2f}s")
        return ensemble


def simulate_ensemble(net: Network, init: InitialBeliefs, cfg: SimConfig,
                      band: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                      workers: Optional[int] = None) -> Ensemble:
    return EnsembleRunner(net, init, cfg, band=band).run(workers=workers)


def simulate_replicate(net: Network, init: InitialBeliefs, cfg: SimConfig, rho: int) -> Dict[str, np.ndarray]:
    """One replicate through draw_signals/step; the reference path for the block kernel."""
    schedule = dynamics_engine.variance_schedule(net, init.variances, cfg.horizon, cfg.convergence_tol)
    rng = replicate_rng(cfg.seed, rho)
    state = BeliefState(t=0, pi=np.full(net.n, cfg.theta), sigma2=np.asarray(init.variances))
    signals, means, variances = [], [], []
    for t in range(schedule.stop + 1):
        drawn = dynamics_engine.draw_signals(state, rng)
        signals.append(drawn.s)
        means.append(state.pi)
        variances.append(state.sigma2)
        if t < schedule.stop:
            state = dynamics_engine.step(net, state, drawn)
    return {"signals": np.vstack(signals), "means": np.vstack(means), "variances": np.vstack(variances)}


def histogram(ensemble: Ensemble, t: int, bin_width: float = HISTOGRAM_BIN_WIDTH) -> pd.DataFrame:
    """Per-agent signal histogram at step t on a grid aligned to multiples of bin_width."""
    if t not in ensemble.snapshots:
        raise KeyError(f"no signal snapshot kept for t={t}; kept {sorted(ensemble.snapshots)}")
    draws = ensemble.snapshots[t]
    rows = []
    for agent in range(draws.shape[1]):
        bins, counts = np.unique(np.floor(draws[:, agent] / bin_width).astype(np.int64), return_counts=True)
        for b, c in zip(bins.tolist(), counts.tolist()):
            rows.append((t, agent, b * bin_width, (b + 1) * bin_width, c))
    return pd.DataFrame(rows, columns=["t", "agent", "bin_lo", "bin_hi", "count"])


def boxplot_stats(ensemble: Ensemble) -> pd.DataFrame:
    """Quartiles and 1.5*IQR whiskers of the tracked agents' signals at every step."""
    if ensemble.tracked_signals is None:
        raise ValueError("ensemble was run without tracked agents")
    rows = []
    for k, (role, agent) in enumerate(ensemble.tracked.items()):
        for t in range(ensemble.steps):
            x = ensemble.tracked_signals[:, t, k]
            q1, med, q3 = np.percentile(x, [25, 50, 75])
            iqr = q3 - q1
            inside = x[(x >= q1 - 1.5 * iqr) & (x <= q3 + 1.5 * iqr)]
            rows.append({
                "t": t, "role": role, "agent": agent,
                "q1": q1, "median": med, "q3": q3,
                "whisker_lo": inside.min(), "whisker_hi": inside.max(),
                "mean": x.mean(), "outliers": int(x.size - inside.size),
            })
    return pd.DataFrame(rows)
