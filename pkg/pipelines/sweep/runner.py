"""Execution wrapper for the seeded Monte-Carlo sweeps."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from optimization import OptimizationError, run_benchmark
from pipelines.sweep.spec import ExperimentConfig  # type: ignore[import]
from pipelines.sweep.table import SweepRow, SweepTable  # type: ignore[import]
from system_model import ModelError, sample_instance


@dataclass(frozen=True, slots=True)
class RunJob:
    sweep_value: float
    scheme: str
    realization: int


@dataclass(frozen=True, slots=True)
class RunRecord:
    """Outcome of one (grid value, scheme, realization) run."""

    sweep_value: float
    scheme: str
    realization: int
    seed: int
    status: str
    objective: float = math.nan
    iterations: int = 0
    wall_time: float = 0.0
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _jobs(config: ExperimentConfig) -> List[RunJob]:
    return [
        RunJob(value, tag, realization)
        for value in config.grid
        for tag in config.schemes
        for realization in range(config.realizations)
    ]


def execute_job(config: ExperimentConfig, job: RunJob) -> RunRecord:
    """Sample the realization and run one scheme on it; failures become records."""

    seed = config.seed(job.realization)
    started = time.perf_counter()
    try:
        system, learning, channel = config.at(job.sweep_value)
        instance = sample_instance(system, learning, config.devices, channel, seed)
        trace = run_benchmark(instance, config.scheme(job.scheme), config.options)
    except (ModelError, OptimizationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return RunRecord(
            sweep_value=job.sweep_value,
            scheme=job.scheme,
            realization=job.realization,
            seed=seed,
            status="failed",
            wall_time=time.perf_counter() - started,
            error=f"{type(exc).__name__}: {exc}",
        )
    return RunRecord(
        sweep_value=job.sweep_value,
        scheme=job.scheme,
        realization=job.realization,
        seed=seed,
        status="ok",
        objective=trace.final_objective,
        iterations=trace.iterations,
        wall_time=time.perf_counter() - started,
    )


def aggregate(config: ExperimentConfig, records: List[RunRecord]) -> SweepTable:
    """Mean/std per (grid value, scheme), rows in grid order then configured scheme order."""

    rows = []
    for value in config.grid:
        for tag in config.schemes:
            group = sorted(
                (r for r in records if r.sweep_value == value and r.scheme == tag),
                key=lambda r: r.realization,
            )
            ok = [r for r in group if r.ok]
            objectives = np.array([r.objective for r in ok], dtype=float)
            iterations = np.array([r.iterations for r in ok], dtype=float)
            rows.append(
                SweepRow(
                    sweep_value=value,
                    scheme=tag,
                    mean_T=float(objectives.mean()) if ok else math.nan,
                    std_T=float(objectives.std()) if ok else math.nan,
                    mean_iters=float(iterations.mean()) if ok else math.nan,
                    n_ok=len(ok),
                    n_fail=len(group) - len(ok),
                )
            )
    return SweepTable(header=config.header(), rows=tuple(rows))


def run_sweep(
    config: ExperimentConfig,
    *,
    on_record: Optional[Callable[[RunRecord], None]] = None,
) -> tuple[SweepTable, List[RunRecord]]:
    """Run every grid value x scheme x realization and aggregate the table."""

    jobs = _jobs(config)
    records: List[RunRecord] = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for record in pool.map(execute_job, [config] * len(jobs), jobs):
                records.append(record)
                if on_record is not None:
                    on_record(record)
    else:
        for job in jobs:
            record = execute_job(config, job)
            records.append(record)
            if on_record is not None:
                on_record(record)
    return aggregate(config, records), records
