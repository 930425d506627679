"""Per-round energy terms of every device."""

from __future__ import annotations

import numpy as np

from .learning import local_rounds
from .models import Allocation, EnergyBreakdown, ProblemInstance


def sensed_bits(instance: ProblemInstance, alloc: Allocation) -> np.ndarray:
    return instance.sensing_rates * alloc.tau_s


def energy_breakdown(instance: ProblemInstance, alloc: Allocation) -> EnergyBreakdown:
    """Harvested versus consumed energy (reward, sensing, local training, upload)."""

    data = sensed_bits(instance, alloc)
    eta_loc = local_rounds(instance.learning, alloc.eta)
    harvested = instance.system.efficiency * alloc.tau_h * alloc.beam_power * instance.gains
    return EnergyBreakdown(
        harvested=harvested,
        reward=instance.reward_energies * data,
        sensing=instance.sense_energies * data,
        local=eta_loc * instance.cpu_coeffs * instance.cycles_per_bit * data * alloc.cpu_freq**2,
        transmit=alloc.tx_power * alloc.tau_c,
    )


def local_compute_time(instance: ProblemInstance, alloc: Allocation) -> np.ndarray:
    """Time each device needs for its local rounds; ``inf`` when it has data but no CPU."""

    eta_loc = local_rounds(instance.learning, alloc.eta)
    cycles = eta_loc * instance.cycles_per_bit * sensed_bits(instance, alloc)
    with np.errstate(divide="ignore", invalid="ignore"):
        times = np.where(cycles > 0, cycles / alloc.cpu_freq, 0.0)
    return times
