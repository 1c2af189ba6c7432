"""Seeded parameter sweeps over scenarios, allocation schemes and user counts."""

from __future__ import annotations

import hashlib
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .. import netsim, noma
from .config import SCENARIOS, ExperimentSpec


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    allocation: str
    num_users: int
    seed: int
    avg_ber: float
    sum_rate_bps: float
    handover_count: int
    wall_time_s: float


@dataclass(frozen=True)
class SweepPoint:
    index: int
    scenario: str
    allocation: noma.AllocationScheme
    num_users: int
    repetition: int


def point_seed(base_seed: int, num_users: int, repetition: int) -> int:
    """Seed of one sweep point.

    Scenario and allocation are deliberately left out, so every scenario and
    scheme sees the same placements and trajectories for a given
    (num_users, repetition).
    """
    digest = hashlib.sha256(f"vlcnoma:{base_seed}:{num_users}:{repetition}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def sweep_points(spec: ExperimentSpec) -> list[SweepPoint]:
    combos = itertools.product(spec.scenarios, spec.allocations, spec.users, range(spec.repetitions))
    return [SweepPoint(i, *c) for i, c in enumerate(combos)]


def run_point(spec: ExperimentSpec, point: SweepPoint) -> ResultRow:
    mode, avoidance = SCENARIOS[point.scenario]
    seed = point_seed(spec.base_seed, point.num_users, point.repetition)
    config = replace(
        spec.base,
        tuning_mode=mode,
        fov_handover_avoidance=avoidance,
        allocation=point.allocation,
        rng_seed=seed,
        ber_symbols=spec.ber_symbols,
        ber_every=0,
    )
    start = time.perf_counter()
    metrics = netsim.run_random(config, point.num_users, spec.room.build())
    elapsed = time.perf_counter() - start
    ber = metrics.mean_ber
    if ber is None:
        # nobody was ever covered during the run: a receiver can only guess
        ber = 0.5 if spec.ber_symbols else 0.0
    return ResultRow(
        scenario=point.scenario,
        allocation=point.allocation.label,
        num_users=point.num_users,
        seed=seed,
        avg_ber=float(ber),
        sum_rate_bps=metrics.mean_sum_rate,
        handover_count=metrics.total_handovers,
        wall_time_s=elapsed if spec.record_wall_time else 0.0,
    )


def _guarded(args):
    spec, point = args
    try:
        return run_point(spec, point)
    except Exception as exc:  # re-raised with the sweep coordinates
        raise SweepError(
            f"sweep point {point.index} (scenario={point.scenario}, allocation={point.allocation.label}, "
            f"users={point.num_users}, repetition={point.repetition}) failed: {exc}"
        ) from exc


def run_sweep(spec: ExperimentSpec, progress=None) -> list[ResultRow]:
    """Run every (scenario, allocation, users, repetition) point.

    Rows come back in sweep-index order whatever ``spec.jobs`` is.
    """
    points = sweep_points(spec)
    jobs = [(spec, p) for p in points]
    if spec.jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            rows = list(pool.map(_guarded, jobs, chunksize=max(1, len(points) // (4 * spec.jobs))))
    else:
        rows = []
        for k, job in enumerate(jobs):
            rows.append(_guarded(job))
            if progress:
                progress(k + 1, len(jobs))
    return rows
