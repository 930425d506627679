"""Uplink rates for orthogonal (FDMA) and SIC-decoded (NOMA) access."""

from __future__ import annotations

import numpy as np

from .models import Allocation, ProblemInstance


def fdma_rate(bandwidth: np.ndarray, power: np.ndarray, gain: np.ndarray, noise_density: float) -> np.ndarray:
    """``b * log2(1 + h p / (n0 b))`` with the continuous extension 0 at ``b = 0``."""

    bandwidth = np.asarray(bandwidth, dtype=float)
    power = np.asarray(power, dtype=float)
    safe_b = np.where(bandwidth > 0, bandwidth, 1.0)
    rate = bandwidth * np.log2(1.0 + gain * power / (noise_density * safe_b))
    return np.where((bandwidth > 0) & (power > 0), rate, 0.0)


def noma_interference(instance: ProblemInstance, power: np.ndarray) -> np.ndarray:
    """Noise plus power of the not-yet-decoded devices ``k > n`` for every ``n``."""

    received = np.asarray(power, dtype=float) * instance.gains
    later = np.concatenate([np.cumsum(received[::-1])[::-1][1:], [0.0]])
    return instance.system.noise_density * instance.system.bandwidth + later


def noma_rate(instance: ProblemInstance, power: np.ndarray) -> np.ndarray:
    power = np.asarray(power, dtype=float)
    sinr = instance.gains * power / noma_interference(instance, power)
    return instance.system.bandwidth * np.log2(1.0 + sinr)


def achievable_rates(instance: ProblemInstance, alloc: Allocation) -> np.ndarray:
    """Rates of all devices in bits/s under the instance's access mode."""

    if instance.mode == "noma":
        return noma_rate(instance, alloc.tx_power)
    if alloc.bandwidth is None:
        raise ValueError("FDMA rates need a bandwidth allocation")
    return fdma_rate(alloc.bandwidth, alloc.tx_power, instance.gains, instance.system.noise_density)


def achievable_rate(instance: ProblemInstance, alloc: Allocation, n: int) -> float:
    if not 0 <= n < instance.num_devices:
        raise IndexError(f"device index {n} out of range for {instance.num_devices} devices")
    return float(achievable_rates(instance, alloc)[n])
