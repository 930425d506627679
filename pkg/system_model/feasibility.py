"""Constraint-by-constraint feasibility report for an allocation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .energy import energy_breakdown, local_compute_time, sensed_bits
from .models import Allocation, ProblemInstance
from .rates import achievable_rates

_TINY = 1e-300


@dataclass(frozen=True, slots=True)
class ConstraintSlack:
    """One constraint written as ``lhs <= rhs``."""

    name: str
    device: Optional[int]
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def relative_slack(self) -> float:
        if math.isinf(self.lhs) and self.lhs > 0:
            return -math.inf
        if math.isinf(self.rhs) and self.rhs > 0:
            return math.inf
        return self.slack / max(abs(self.lhs), abs(self.rhs), _TINY)

    def label(self) -> str:
        return self.name if self.device is None else f"{self.name}[{self.device}]"


@dataclass(frozen=True, slots=True)
class FeasibilityReport:
    """Slacks of every constraint plus the verdict at ``tol_rel``."""

    rows: Tuple[ConstraintSlack, ...]
    tol_rel: float

    @property
    def violated(self) -> Tuple[ConstraintSlack, ...]:
        return tuple(row for row in self.rows if row.relative_slack < -self.tol_rel)

    @property
    def feasible(self) -> bool:
        return not self.violated

    @property
    def worst(self) -> ConstraintSlack:
        return min(self.rows, key=lambda row: row.relative_slack)

    def slack(self, name: str, device: Optional[int] = None) -> float:
        for row in self.rows:
            if row.name == name and row.device == device:
                return row.slack
        raise KeyError(f"No constraint named {name!r} for device {device}")

    def summary(self) -> str:
        if self.feasible:
            return f"feasible (worst {self.worst.label()} rel slack {self.worst.relative_slack:.3e})"
        labels = ", ".join(row.label() for row in self.violated)
        return f"infeasible: {labels}"


def _per_device(name: str, lhs: np.ndarray, rhs: np.ndarray) -> List[ConstraintSlack]:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    return [ConstraintSlack(name, n, float(lhs[n]), float(rhs[n])) for n in range(lhs.shape[0])]


def check_feasibility(
    instance: ProblemInstance,
    alloc: Allocation,
    tol_rel: float = 1e-6,
) -> FeasibilityReport:
    """Evaluate every constraint of the completion-time problem at ``alloc``.

    NOMA instances swap the orthogonal rate for the SIC rate and drop the
    bandwidth-sum row.
    """

    if tol_rel <= 0:
        raise ValueError(f"tol_rel must be positive, got {tol_rel}")
    system = instance.system
    count = instance.num_devices
    energy = energy_breakdown(instance, alloc)

    rows: List[ConstraintSlack] = []
    rows += _per_device("sensing", np.full(count, system.data_bits), sensed_bits(instance, alloc))
    rows += _per_device("energy", energy.consumed, energy.harvested)
    rows += _per_device("local_time", local_compute_time(instance, alloc), np.full(count, alloc.tau_l))
    if instance.mode == "fdma" and alloc.bandwidth is None:
        raise ValueError("FDMA feasibility needs a bandwidth allocation")
    rates = achievable_rates(instance, alloc)
    rows += _per_device("upload", np.full(count, system.model_bits), alloc.tau_c * rates)
    if math.isfinite(system.energy_cap):
        rows.append(
            ConstraintSlack("source_energy", None, float(alloc.beam_power.sum() * alloc.tau_h), system.energy_cap)
        )
    rows += _per_device("transmit_power", alloc.tx_power, instance.p_max)
    rows.append(ConstraintSlack("beam_power", None, float(alloc.beam_power.sum()), system.power_budget))
    if instance.mode == "fdma":
        rows.append(ConstraintSlack("bandwidth", None, float(alloc.bandwidth.sum()), system.bandwidth))
    rows += _per_device("cpu_frequency_min", instance.f_min, alloc.cpu_freq)
    rows += _per_device("cpu_frequency_max", alloc.cpu_freq, instance.f_max)
    rows.append(ConstraintSlack("accuracy", None, alloc.eta, 1.0))
    return FeasibilityReport(rows=tuple(rows), tol_rel=tol_rel)
