from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from system_model import (  # noqa: E402
    Allocation,
    ChannelConfig,
    DeviceParams,
    DeviceRanges,
    LearningParams,
    ProblemInstance,
    SystemParams,
    dbm_to_watts,
    sample_instance,
)


def default_learning(eps0: float = 1e-3) -> LearningParams:
    return LearningParams(L=4.0, gamma=2.0, delta=0.25, xi_hyper=1.0 / 3.0, eps0=eps0)


def default_system(num_devices: int = 10, mode: str = "fdma", **changes) -> SystemParams:
    values = dict(
        num_devices=num_devices,
        power_budget=dbm_to_watts(42.0),
        bandwidth=5e5,
        noise_density=1e-14,
        efficiency=0.9,
        model_bits=28.1e3,
        data_bits=1e5,
        energy_cap=math.inf,
        mode=mode,
    )
    values.update(changes)
    return SystemParams(**values)


def make_device(index: int = 0, gain: float = 1e-3, **changes) -> DeviceParams:
    values = dict(
        index=index,
        sensing_rate=2e6,
        sense_energy=5e-12,
        reward_energy=5e-12,
        cycles_per_bit=15.0,
        cpu_coeff=1e-28,
        f_min=1e8,
        f_max=2e9,
        p_max=0.01,
        channel_gain=gain,
    )
    values.update(changes)
    return DeviceParams(**values)


def sampled(seed: int = 0, num_devices: int = 10, mode: str = "fdma", **system_changes) -> ProblemInstance:
    return sample_instance(
        default_system(num_devices, mode, **system_changes),
        default_learning(),
        DeviceRanges(),
        ChannelConfig(),
        seed,
    )


@pytest.fixture
def learning() -> LearningParams:
    return default_learning()


@pytest.fixture
def two_device_instance(learning: LearningParams) -> ProblemInstance:
    devices = (make_device(0, gain=2e-3), make_device(1, gain=1e-3, sensing_rate=1e6))
    return ProblemInstance(system=default_system(2), learning=learning, devices=devices, seed=7)


@pytest.fixture
def single_device_instance(learning: LearningParams) -> ProblemInstance:
    return ProblemInstance(system=default_system(1), learning=learning, devices=(make_device(0),), seed=3)


@pytest.fixture
def default_instance() -> ProblemInstance:
    return sampled(seed=0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def allocation(count: int, *, bandwidth: bool = True, **changes) -> Allocation:
    values = dict(
        beam_power=np.full(count, 1.0),
        tx_power=np.full(count, 0.01),
        cpu_freq=np.full(count, 1e9),
        bandwidth=np.full(count, 5e5 / count) if bandwidth else None,
        tau_h=1.0,
        tau_s=0.1,
        tau_l=0.1,
        tau_c=0.1,
        eta=0.5,
    )
    values.update(changes)
    return Allocation(**values)
