"""Path-following SCA driver: feasible start, alternating accuracy/resource solves, trace."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np

from system_model import (
    Allocation,
    InfeasibleInstanceError,
    ProblemInstance,
    achievable_rates,
    check_feasibility,
    local_rounds,
    round_counts,
    total_completion_time,
)

from .errors import SubproblemError
from .solver import SolverResult, SolverSettings, solve
from .subproblems import (
    FixedValues,
    build_accuracy_program,
    build_resource_program,
    clamp_eta,
)

TraceStatus = Literal["converged", "stalled", "iteration-cap"]

GUARD_TOL = 1e-9
TAU_H_MARGIN = 1.05
JITTER = 0.1


@dataclass(frozen=True, slots=True)
class ScaOptions:
    """Stopping rule and solver knobs of one SCA run."""

    eps: float = 1e-3
    max_iter: int = 100
    seed: Optional[int] = None
    tol: float = 1e-8
    resource_steps_per_accuracy: int = 1
    solver: Optional[SolverSettings] = None

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")
        if self.resource_steps_per_accuracy < 1:
            raise ValueError(
                f"resource_steps_per_accuracy must be positive, got {self.resource_steps_per_accuracy}"
            )

    def settings(self) -> SolverSettings:
        if self.solver is None:
            return SolverSettings(tol=self.tol)
        return self.solver


@dataclass(slots=True)
class IterationRecord:
    iteration: int
    objective: float
    allocation: Allocation
    anchor: Allocation
    accuracy: Optional[SolverResult]
    resource: Tuple[SolverResult, ...]
    program_size: Tuple[int, int]
    accepted: bool

    def summary(self) -> dict:
        return {
            "iteration": self.iteration,
            "objective": self.objective,
            "eta": self.allocation.eta,
            "accepted": self.accepted,
            "program_size": list(self.program_size),
            "accuracy": None if self.accuracy is None else self.accuracy.summary(),
            "resource": [result.summary() for result in self.resource],
        }


@dataclass(slots=True)
class Trace:
    """Every iterate of one run plus its final verdict."""

    instance: ProblemInstance
    scheme: str
    initial_allocation: Allocation
    initial_objective: float
    records: List[IterationRecord] = field(default_factory=list)
    status: TraceStatus = "iteration-cap"
    wall_time: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def objectives(self) -> List[float]:
        return [self.initial_objective] + [record.objective for record in self.records]

    @property
    def final_allocation(self) -> Allocation:
        return self.records[-1].allocation if self.records else self.initial_allocation

    @property
    def final_objective(self) -> float:
        return self.objectives[-1]

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def rounded_rounds(self) -> Tuple[int, Optional[int]]:
        return round_counts(self.instance.learning, self.final_allocation.eta).rounded()

    def summary(self) -> dict:
        local, glo = self.rounded_rounds()
        return {
            "scheme": self.scheme,
            "mode": self.instance.mode,
            "seed": self.instance.seed,
            "status": self.status,
            "iterations": self.iterations,
            "initial_objective": self.initial_objective,
            "final_objective": self.final_objective,
            "eta": self.final_allocation.eta,
            "local_rounds": local,
            "global_rounds": glo,
            "wall_time": self.wall_time,
        }


IterationCallback = Callable[[IterationRecord], None]


# -- feasible start --------------------------------------------------------------------


def _phase_times(
    instance: ProblemInstance,
    beam_power: np.ndarray,
    tx_power: np.ndarray,
    cpu_freq: np.ndarray,
    bandwidth: Optional[np.ndarray],
    tau_s: float,
    eta: float,
) -> Allocation:
    """Tight phase durations for fixed powers, frequencies and bandwidths."""

    data = instance.sensing_rates * tau_s
    eta_loc = local_rounds(instance.learning, eta)
    tau_l = float(np.max(eta_loc * instance.cycles_per_bit * data / cpu_freq))
    draft = Allocation(beam_power, tx_power, cpu_freq, bandwidth, 0.0, tau_s, tau_l, 0.0, eta)
    rates = achievable_rates(instance, draft)
    tau_c = float(np.max(instance.system.model_bits / rates))
    need = (
        (instance.sense_energies + instance.reward_energies) * data
        + eta_loc * instance.cpu_coeffs * instance.cycles_per_bit * data * cpu_freq**2
        + tx_power * tau_c
    )
    harvest_rate = instance.system.efficiency * beam_power * instance.gains
    tau_h = TAU_H_MARGIN * float(np.max(need / harvest_rate))
    return draft.replace(tau_h=tau_h, tau_c=tau_c)


def _harvest_need(instance: ProblemInstance, alloc: Allocation) -> np.ndarray:
    """Energy each device must harvest per unit beam power, ``need_n / (phi h_n)``."""

    data = instance.sensing_rates * alloc.tau_s
    eta_loc = local_rounds(instance.learning, alloc.eta)
    need = (
        (instance.sense_energies + instance.reward_energies) * data
        + eta_loc * instance.cpu_coeffs * instance.cycles_per_bit * data * alloc.cpu_freq**2
        + alloc.tx_power * alloc.tau_c
    )
    return need / (instance.system.efficiency * instance.gains)


def init_feasible(
    instance: ProblemInstance,
    *,
    fixed: Optional[FixedValues] = None,
    eta0: float = 0.5,
    jitter_seed: Optional[int] = None,
) -> Allocation:
    """Constructive feasible point: slowest-device sensing, minimum CPU, maximum power.

    With ``jitter_seed`` the free powers, frequencies and bandwidths are perturbed by
    up to 10% and projected back before the phase durations are recomputed.
    Raises ``InfeasibleInstanceError`` when the source energy cap cannot be met.
    """

    fixed = fixed or FixedValues()
    system = instance.system
    count = instance.num_devices
    eta = fixed.eta if fixed.eta is not None else eta0
    tau_s = fixed.tau_s if fixed.tau_s is not None else float(np.max(system.data_bits / instance.sensing_rates))

    beam_power = (
        np.array(fixed.beam_power, dtype=float)
        if fixed.beam_power is not None
        else np.full(count, system.power_budget / count)
    )
    tx_power = instance.p_max.copy()
    cpu_freq = instance.f_min.copy()
    bandwidth = None
    if instance.mode == "fdma":
        bandwidth = (
            np.array(fixed.bandwidth, dtype=float)
            if fixed.bandwidth is not None
            else np.full(count, system.bandwidth / count)
        )

    if jitter_seed is not None:
        rng = np.random.default_rng(jitter_seed)

        def jitter(values: np.ndarray) -> np.ndarray:
            return values * rng.uniform(1.0 - JITTER, 1.0 + JITTER, size=values.shape)

        if fixed.beam_power is None:
            beam_power = jitter(beam_power)
            beam_power *= min(1.0, system.power_budget / beam_power.sum())
        tx_power = np.minimum(jitter(tx_power), instance.p_max)
        cpu_freq = np.clip(jitter(cpu_freq), instance.f_min, instance.f_max)
        if bandwidth is not None and fixed.bandwidth is None:
            bandwidth = jitter(bandwidth)
            bandwidth *= min(1.0, system.bandwidth / bandwidth.sum())

    alloc = _phase_times(instance, beam_power, tx_power, cpu_freq, bandwidth, tau_s, eta)
    if math.isfinite(system.energy_cap) and alloc.tau_h * alloc.beam_power.sum() > system.energy_cap:
        if fixed.beam_power is None:
            weights = _harvest_need(instance, alloc)
            alloc = alloc.replace(
                beam_power=system.power_budget * weights / weights.sum(),
                tau_h=TAU_H_MARGIN * float(weights.sum()) / system.power_budget,
            )
        if alloc.tau_h * alloc.beam_power.sum() > system.energy_cap:
            report = check_feasibility(instance, alloc)
            raise InfeasibleInstanceError(
                "source_energy",
                f"energy cap {system.energy_cap:.4g} J below the {alloc.tau_h * alloc.beam_power.sum():.4g} J "
                "the devices need in one round",
                report=report,
            )
    return alloc


# -- single steps ----------------------------------------------------------------------


def _require_optimal(result: SolverResult, iteration: int, phase: str) -> None:
    if result.status != "optimal":
        where = f" at {result.worst_constraint}" if result.worst_constraint else ""
        raise SubproblemError(
            f"{phase} program ended {result.status}{where}: {result.message}",
            iteration=iteration,
            phase=phase,
            status=result.status,
        )


def _accuracy_solve(
    instance: ProblemInstance,
    anchor: Allocation,
    settings: SolverSettings,
    iteration: int = 0,
) -> Tuple[float, float, Optional[SolverResult]]:
    if instance.learning.a == 0.0:
        return anchor.eta, anchor.tau_l, None
    built = build_accuracy_program(instance, anchor)
    result = solve(built.program, built.start, settings=settings)
    _require_optimal(result, iteration, "accuracy")
    eta, tau_l = built.decode(result.x)
    return eta, tau_l, result


def accuracy_step(
    instance: ProblemInstance,
    anchor: Allocation,
    *,
    settings: Optional[SolverSettings] = None,
) -> Tuple[float, float]:
    """New ``(eta, tau_l)`` with every other variable held at ``anchor``."""

    eta, tau_l, _ = _accuracy_solve(instance, anchor, settings or SolverSettings())
    return eta, tau_l


def _resource_solve(
    instance: ProblemInstance,
    eta: float,
    anchor: Allocation,
    fixed: FixedValues,
    settings: SolverSettings,
) -> Tuple[Allocation, SolverResult, Tuple[int, int]]:
    built = build_resource_program(instance, eta, anchor, fixed)
    result = solve(built.program, built.start, settings=settings)
    return built.decode(result.x, instance), result, built.program.size()


def resource_step(
    instance: ProblemInstance,
    eta: float,
    anchor: Allocation,
    mode: Optional[str] = None,
    *,
    fixed: Optional[FixedValues] = None,
    settings: Optional[SolverSettings] = None,
) -> Allocation:
    """Solve the convexified resource problem at ``anchor`` for fixed ``eta``."""

    if mode is not None and mode != instance.mode:
        raise ValueError(f"instance is in {instance.mode} mode; convert it with with_mode({mode!r}) first")
    alloc, result, _ = _resource_solve(instance, eta, anchor, fixed or FixedValues(), settings or SolverSettings())
    _require_optimal(result, 0, "resource")
    return alloc


# -- driver loop -----------------------------------------------------------------------


def _improves(instance: ProblemInstance, candidate: Allocation, reference: float) -> Optional[float]:
    """Objective of ``candidate`` when it is exactly feasible and no worse than ``reference``."""

    if not check_feasibility(instance, candidate, tol_rel=GUARD_TOL).feasible:
        return None
    objective = total_completion_time(candidate, instance.learning)
    if objective > reference * (1.0 + GUARD_TOL):
        return None
    return objective


def run_loop(
    instance: ProblemInstance,
    start: Allocation,
    opts: ScaOptions,
    *,
    fixed: Optional[FixedValues] = None,
    scheme: str = "S2FL",
    on_iteration: Optional[IterationCallback] = None,
) -> Trace:
    """Alternate accuracy and resource solves from ``start`` until the stopping rule holds."""

    fixed = fixed or FixedValues()
    settings = opts.settings()
    started = time.perf_counter()
    objective = total_completion_time(start, instance.learning)
    trace = Trace(instance=instance, scheme=scheme, initial_allocation=start, initial_objective=objective)
    anchor = start
    if objective == 0.0:
        # a == 0: every feasible point is optimal
        trace.status = "converged"
        trace.wall_time = time.perf_counter() - started
        return trace

    for iteration in range(1, opts.max_iter + 1):
        previous = objective
        accepted = True
        moved = False
        accuracy_result = None
        if fixed.eta is None:
            eta, tau_l, accuracy_result = _accuracy_solve(instance, anchor, settings, iteration)
            candidate = anchor.replace(eta=eta, tau_l=tau_l)
            value = _improves(instance, candidate, objective)
            if value is None:
                accepted = False
            else:
                anchor, objective = candidate, value
                moved = True

        resource_results = []
        size = (0, 0)
        for _ in range(opts.resource_steps_per_accuracy):
            candidate, result, size = _resource_solve(instance, clamp_eta(anchor.eta), anchor, fixed, settings)
            resource_results.append(result)
            _require_optimal(result, iteration, "resource")
            if candidate.eta != anchor.eta:
                candidate = candidate.replace(eta=anchor.eta)
            value = _improves(instance, candidate, objective)
            if value is None:
                accepted = False
                continue
            anchor, objective = candidate, value
            moved = True

        record = IterationRecord(
            iteration=iteration,
            objective=objective,
            allocation=anchor,
            anchor=trace.final_allocation,
            accuracy=accuracy_result,
            resource=tuple(resource_results),
            program_size=size,
            accepted=accepted,
        )
        trace.records.append(record)
        if on_iteration is not None:
            on_iteration(record)
        if not moved:
            # every candidate failed the exact check; the objective did not settle
            trace.status = "stalled"
            break
        if previous == 0.0 or abs(previous - objective) / previous <= opts.eps:
            trace.status = "converged"
            break

    trace.wall_time = time.perf_counter() - started
    return trace


def run(
    instance: ProblemInstance,
    mode: Optional[str] = None,
    opts: Optional[ScaOptions] = None,
    *,
    on_iteration: Optional[IterationCallback] = None,
) -> Trace:
    """Full S2FL run (FDMA) or NOMA-S2FL run (``mode="noma"``) from the constructive start."""

    opts = opts or ScaOptions()
    if mode is not None and mode != instance.mode:
        instance = instance.with_mode(mode)
    start = init_feasible(instance, jitter_seed=opts.seed)
    scheme = "S2FL-NOMA" if instance.mode == "noma" else "S2FL"
    return run_loop(instance, start, opts, scheme=scheme, on_iteration=on_iteration)
