"""Sample paths, policy runs and Monte-Carlo regret estimates.

Regret is measured against the hindsight LP phi(T rho, Z), where Z are the
realized per-type arrival counts. Randomness is derived from numpy's
``SeedSequence``: path ``i`` of an experiment with base seed ``s`` is keyed
by ``split_seed(s, i)`` and its decision coins by ``split_seed(path_seed, 1)``,
so results do not depend on how paths are batched or distributed.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .lp_core import Instance, fluid_primal
from .policies import SCHEDULED, PolicySpec, run_steps
from .schedules import Schedule

log = logging.getLogger(__name__)

_BOUND_TOL = 1e-9


def split_seed(seed: int, index: int) -> int:
    """Deterministic 64-bit child seed number ``index`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _arrival_cdf(p: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(p)
    last = np.flatnonzero(p > 0)[-1]
    cdf[last:] = 1.0
    return cdf


@dataclass(frozen=True)
class SamplePath:
    arrivals: np.ndarray
    seed: int
    counts: np.ndarray


def sample_path(instance: Instance, seed: int) -> SamplePath:
    """Draw T i.i.d. arrival types by inverse CDF from a PCG64 stream."""
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u = rng.random(instance.horizon)
    arrivals = np.searchsorted(_arrival_cdf(instance.probabilities), u, side="right")
    counts = np.bincount(arrivals, minlength=instance.n)
    return SamplePath(arrivals=arrivals, seed=int(seed), counts=counts)


def decision_coins(path_seed: int, T: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(split_seed(path_seed, 1)))
    return rng.random(T)


def hindsight_value(instance: Instance, path: SamplePath) -> float:
    return _hindsight(instance, np.asarray(path.counts, dtype=float))


def _hindsight(instance: Instance, counts: np.ndarray) -> float:
    _, obj = fluid_primal(instance.rewards, instance.consumption,
                          instance.initial_inventory, counts)
    return obj


@dataclass
class RunResult:
    revenue: float
    accepted: np.ndarray
    final_inventory: np.ndarray
    lp_solves: int
    wall_time: float
    decision_trace: np.ndarray | None = None


@dataclass(frozen=True)
class RegretEstimate:
    policy: str
    mean_hindsight: float
    mean_revenue: float
    mean_regret: float
    std_error: float
    n_sims: int
    mean_lp_solves: float
    total_wall_time: float
    bound_violations: int = 0
    schedule: Schedule | None = None


def run_policy(policy: PolicySpec, instance: Instance, schedule: Schedule | None,
               path: SamplePath, decision_seed: int, trace: bool = False) -> RunResult:
    """Run one policy over one sample path."""
    if policy.name in SCHEDULED and schedule is None:
        raise InputError(f"policy {policy.name!r} needs a resolving schedule")
    rng = np.random.Generator(np.random.PCG64(int(decision_seed)))
    coins = rng.random(instance.horizon)
    start = time.perf_counter()
    state, accepted, log_ = run_steps(policy, instance, path.arrivals[None, :], coins[None, :],
                                      schedule, trace=trace)
    elapsed = time.perf_counter() - start
    return RunResult(
        revenue=float((accepted[0] * instance.rewards).sum()),
        accepted=accepted[0],
        final_inventory=state.b[0].copy(),
        lp_solves=int(state.lp_solves[0]),
        wall_time=elapsed,
        decision_trace=None if log_ is None else log_[0],
    )


@dataclass
class _PathSet:
    seeds: list[int]
    arrivals: np.ndarray
    coins: np.ndarray
    hindsight: np.ndarray


def _sample_paths(instance: Instance, n_sims: int, base_seed: int) -> _PathSet:
    seeds = [split_seed(base_seed, i) for i in range(n_sims)]
    arrivals = np.empty((n_sims, instance.horizon), dtype=np.int64)
    coins = np.empty((n_sims, instance.horizon))
    hindsight = np.empty(n_sims)
    for i, s in enumerate(seeds):
        path = sample_path(instance, s)
        arrivals[i] = path.arrivals
        coins[i] = decision_coins(s, instance.horizon)
        hindsight[i] = _hindsight(instance, path.counts.astype(float))
    return _PathSet(seeds, arrivals, coins, hindsight)


def _run_chunk(args):
    policy, instance, schedule, arrivals, coins = args
    state, accepted, _ = run_steps(policy, instance, arrivals, coins, schedule)
    # row-wise reduction rather than BLAS so revenue is independent of batch shape
    revenue = (accepted * instance.rewards).sum(axis=1)
    consumed = accepted @ instance.consumption.T
    # conservation: inventory bookkeeping agrees with accepted counts
    drift = np.abs(instance.initial_inventory - state.b - consumed).max(initial=0.0)
    if drift > 1e-9 * max(1.0, instance.initial_inventory.max()):
        raise RuntimeError(f"inventory conservation violated by {drift:g}")
    if np.any(state.b < 0):
        raise RuntimeError("negative inventory")
    return revenue, state.lp_solves.copy()


def _run_paths(policy: PolicySpec, instance: Instance, schedule: Schedule | None,
               paths: _PathSet, workers: int, batch_size: int):
    n = paths.arrivals.shape[0]
    chunks = [
        (policy, instance, schedule, paths.arrivals[lo:lo + batch_size], paths.coins[lo:lo + batch_size])
        for lo in range(0, n, batch_size)
    ]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, chunks))
    else:
        results = [_run_chunk(c) for c in chunks]
    revenue = np.concatenate([r for r, _ in results])
    lp_solves = np.concatenate([s for _, s in results])
    return revenue, lp_solves


def _summarize(policy: PolicySpec, hindsight, revenue, lp_solves, wall, schedule) -> RegretEstimate:
    n = revenue.shape[0]
    regret = hindsight - revenue
    violations = int(np.count_nonzero(revenue > hindsight + _BOUND_TOL))
    if violations:
        log.error("%s: %d paths with revenue above the hindsight bound", policy.display_name, violations)
    std_error = float(np.std(regret, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    mean_h = float(np.mean(hindsight))
    mean_r = float(np.mean(revenue))
    return RegretEstimate(
        policy=policy.display_name,
        mean_hindsight=mean_h,
        mean_revenue=mean_r,
        mean_regret=mean_h - mean_r,
        std_error=std_error,
        n_sims=n,
        mean_lp_solves=float(np.mean(lp_solves)),
        total_wall_time=wall,
        bound_violations=violations,
        schedule=schedule,
    )


def _default_batch(policy: PolicySpec) -> int:
    # LP-heavy policies gain nothing from wide batches; keep chunks small so
    # several workers get a share
    return 50 if policy.name in ("afr", "ada", "ada-kp") else 1000


def estimate_regret(policy: PolicySpec, instance: Instance, n_sims: int, base_seed: int,
                    schedule: Schedule | None = None, workers: int = 1,
                    batch_size: int | None = None) -> RegretEstimate:
    """Monte-Carlo regret of ``policy`` against the hindsight LP."""
    return compare_policies([policy], instance, n_sims, base_seed,
                            schedules=[schedule], workers=workers, batch_size=batch_size)[0]


def compare_policies(policies: list[PolicySpec], instance: Instance, n_sims: int, base_seed: int,
                     schedules: list[Schedule | None] | None = None, workers: int = 1,
                     batch_size: int | None = None) -> list[RegretEstimate]:
    """Evaluate several policies on one common set of sample paths."""
    if not policies:
        raise InputError("need at least one policy")
    if n_sims < 1:
        raise InputError(f"n_sims must be >= 1, got {n_sims}")
    if schedules is None:
        schedules = [None] * len(policies)
    if len(schedules) != len(policies):
        raise InputError("schedules must align with policies")
    paths = _sample_paths(instance, n_sims, base_seed)
    out = []
    for policy, schedule in zip(policies, schedules):
        if schedule is None and policy.name in SCHEDULED:
            schedule = policy.build_schedule(instance.horizon)
        start = time.perf_counter()
        revenue, lp_solves = _run_paths(policy, instance, schedule, paths, workers,
                                        batch_size or _default_batch(policy))
        wall = time.perf_counter() - start
        est = _summarize(policy, paths.hindsight, revenue, lp_solves, wall, schedule)
        log.info("%s T=%d: regret %.3f +- %.3f (%d sims, %.1fs)", est.policy, instance.horizon,
                 est.mean_regret, est.std_error, n_sims, wall)
        out.append(est)
    return out
