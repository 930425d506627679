"""Seeded network realizations with Rician energy-beam channels."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Tuple

import numpy as np

from .errors import ParameterDomainError
from .models import DeviceParams, LearningParams, ProblemInstance, SystemParams

MIN_DISTANCE = 1e-3
SEED_MODULUS = 2**64

Range = Tuple[float, float]


def _check_range(name: str, bounds: Range, floor: float = 0.0) -> Range:
    low, high = (float(bounds[0]), float(bounds[1]))
    if not (math.isfinite(low) and math.isfinite(high)) or low <= floor or low > high:
        raise ParameterDomainError(name, f"invalid range {bounds!r} (need {floor} < low <= high)")
    return low, high


@dataclass(frozen=True, slots=True)
class ChannelConfig:
    """Rician beam channel between the access point and every device."""

    k_rician: float = 3.0
    antennas: int = 4
    distance_range: Range = (1.0, 5.0)
    fading_scale: float = 5e-4
    path_loss_exponent: float = 2.0

    def __post_init__(self) -> None:
        if not self.k_rician >= 0:
            raise ParameterDomainError("K>=0", f"Rician factor must be nonnegative, got {self.k_rician}")
        if int(self.antennas) != self.antennas or self.antennas < 1:
            raise ParameterDomainError("Na>=1", f"antenna count must be a positive integer, got {self.antennas}")
        object.__setattr__(self, "antennas", int(self.antennas))
        distance_range = _check_range("distance_range", self.distance_range)
        if distance_range[0] < MIN_DISTANCE:
            raise ParameterDomainError("distance_range", f"minimum distance must be at least {MIN_DISTANCE} m")
        object.__setattr__(self, "distance_range", distance_range)
        if self.fading_scale <= 0:
            raise ParameterDomainError("fading_scale>0", f"fading scale must be positive, got {self.fading_scale}")
        if self.path_loss_exponent < 0:
            raise ParameterDomainError("exponent>=0", f"path-loss exponent must be nonnegative, got {self.path_loss_exponent}")

    def mean_gain(self, distance: float) -> float:
        return self.fading_scale * distance ** (-self.path_loss_exponent)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k_rician": self.k_rician,
            "antennas": self.antennas,
            "distance_range": list(self.distance_range),
            "fading_scale": self.fading_scale,
            "path_loss_exponent": self.path_loss_exponent,
        }


@dataclass(frozen=True, slots=True)
class DeviceRanges:
    """Uniform draw ranges for device hardware parameters."""

    cycles_per_bit: Range = (10.0, 20.0)
    sensing_rate: Range = (1e6, 5e6)
    sense_energy: Range = (1e-12, 1e-11)
    reward_energy: Range = (1e-12, 1e-11)
    cpu_coeff: float = 1e-28
    f_min: float = 1e8
    f_max: float = 2e9
    p_max: float = 0.01

    def __post_init__(self) -> None:
        for name in ("cycles_per_bit", "sensing_rate", "sense_energy", "reward_energy"):
            object.__setattr__(self, name, _check_range(name, getattr(self, name)))
        for name in ("cpu_coeff", "f_min", "f_max", "p_max"):
            if not getattr(self, name) > 0:
                raise ParameterDomainError(f"{name}>0", f"{name} must be positive, got {getattr(self, name)}")
        if self.f_min > self.f_max:
            raise ParameterDomainError("f_min<=f_max", f"f_min {self.f_min} exceeds f_max {self.f_max}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cycles_per_bit": list(self.cycles_per_bit),
            "sensing_rate": list(self.sensing_rate),
            "sense_energy": list(self.sense_energy),
            "reward_energy": list(self.reward_energy),
            "cpu_coeff": self.cpu_coeff,
            "f_min": self.f_min,
            "f_max": self.f_max,
            "p_max": self.p_max,
        }


def effective_gain(channel_vector: np.ndarray) -> float:
    """Squared Euclidean norm of a (complex) channel vector."""

    vector = np.asarray(channel_vector)
    return float(np.vdot(vector, vector).real)


def channel_vectors(
    rng: np.random.Generator,
    mean_gain: float,
    config: ChannelConfig,
    size: int = 1,
) -> np.ndarray:
    """Draw ``size`` Rician channel vectors of length ``antennas``.

    The LoS part is a unit-norm uniform-linear-array steering vector with a random
    angle; the NLoS part has i.i.d. standard complex normal entries.
    """

    antennas = config.antennas
    angles = rng.uniform(-math.pi / 2, math.pi / 2, size=size)
    elements = np.arange(antennas)
    los = np.exp(1j * math.pi * np.outer(np.sin(angles), elements)) / math.sqrt(antennas)
    real = rng.standard_normal((size, antennas))
    imag = rng.standard_normal((size, antennas))
    nlos = (real + 1j * imag) / math.sqrt(2.0)
    k = config.k_rician
    return math.sqrt(k * mean_gain / (k + 1.0)) * los + math.sqrt(mean_gain / (k + 1.0)) * nlos


def device_stream(seed: int, num_devices: int) -> Tuple[np.random.Generator, ...]:
    """One PCG64 stream per device index, spawned from ``SeedSequence(seed)``."""

    children = np.random.SeedSequence(int(seed) % SEED_MODULUS).spawn(num_devices)
    return tuple(np.random.Generator(np.random.PCG64(child)) for child in children)


def _draw_device(
    index: int,
    rng: np.random.Generator,
    ranges: DeviceRanges,
    config: ChannelConfig,
) -> DeviceParams:
    distance = rng.uniform(*config.distance_range)
    cycles = rng.uniform(*ranges.cycles_per_bit)
    sensing_rate = rng.uniform(*ranges.sensing_rate)
    sense_energy = rng.uniform(*ranges.sense_energy)
    reward_energy = rng.uniform(*ranges.reward_energy)
    mean_gain = config.mean_gain(distance)
    gain = 0.0
    while gain <= 0.0:
        gain = effective_gain(channel_vectors(rng, mean_gain, config)[0])
    return DeviceParams(
        index=index,
        sensing_rate=sensing_rate,
        sense_energy=sense_energy,
        reward_energy=reward_energy,
        cycles_per_bit=cycles,
        cpu_coeff=ranges.cpu_coeff,
        f_min=ranges.f_min,
        f_max=ranges.f_max,
        p_max=ranges.p_max,
        channel_gain=gain,
    )


def sample_instance(
    system: SystemParams,
    learning: LearningParams,
    device_ranges: DeviceRanges,
    channel_config: ChannelConfig,
    seed: int,
) -> ProblemInstance:
    """Draw one network realization; identical output for identical inputs.

    Device ``n`` always reads the ``n``-th spawned stream, so growing the device
    count keeps the existing devices unchanged.
    """

    streams = device_stream(seed, system.num_devices)
    devices = tuple(
        _draw_device(index, rng, device_ranges, channel_config) for index, rng in enumerate(streams)
    )
    instance = ProblemInstance(
        system=replace(system, mode="fdma"),
        learning=learning,
        devices=devices,
        seed=int(seed),
    )
    if system.mode == "noma":
        return instance.with_mode("noma")
    return instance
