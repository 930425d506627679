"""Shared dataclasses describing one network realization and one decision point."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Literal, NamedTuple, Optional, Tuple

import numpy as np

from .errors import ParameterDomainError

AccessMode = Literal["fdma", "noma"]
ACCESS_MODES: Tuple[str, ...] = ("fdma", "noma")


def _require(condition: bool, constraint: str, message: str) -> None:
    if not condition:
        raise ParameterDomainError(constraint, message)


@dataclass(frozen=True, slots=True)
class LearningParams:
    """Learning constants plus the derived round scales ``a`` and ``nu``.

    ``a`` scales the global rounds ``a / (1 - eta)`` and ``nu`` the local rounds
    ``nu * log2(1 / eta)``. Both are derived in ``__post_init__``.
    """

    L: float
    gamma: float
    delta: float
    xi_hyper: float
    eps0: float
    a: float = field(init=False)
    nu: float = field(init=False)

    def __post_init__(self) -> None:
        _require(self.L > 0, "L>0", f"Lipschitz constant must be positive, got {self.L}")
        _require(self.gamma > 0, "gamma>0", f"strong convexity must be positive, got {self.gamma}")
        _require(self.delta > 0, "delta>0", f"step size must be positive, got {self.delta}")
        _require(
            self.delta < 2.0 / self.L,
            "delta<2/L",
            f"step size {self.delta} must be below 2/L = {2.0 / self.L}",
        )
        _require(self.xi_hyper > 0, "xi>0", f"hyper-learning parameter must be positive, got {self.xi_hyper}")
        _require(
            self.xi_hyper < self.gamma / self.L,
            "xi<gamma/L",
            f"hyper-learning parameter {self.xi_hyper} must be below gamma/L = {self.gamma / self.L}",
        )
        _require(
            0.0 < self.eps0 <= 1.0,
            "0<eps0<1",
            f"target accuracy must lie in (0, 1], got {self.eps0}",
        )
        a = -2.0 * self.L**2 * math.log(self.eps0) / (self.gamma**2 * self.xi_hyper)
        nu = 2.0 / ((2.0 - self.L * self.delta) * self.delta * self.gamma * math.log(2.0))
        object.__setattr__(self, "a", max(a, 0.0))
        object.__setattr__(self, "nu", nu)

    def to_dict(self) -> Dict[str, float]:
        return {
            "L": self.L,
            "gamma": self.gamma,
            "delta": self.delta,
            "xi_hyper": self.xi_hyper,
            "eps0": self.eps0,
        }

    def describe(self) -> str:
        return (
            f"L={self.L!r} gamma={self.gamma!r} delta={self.delta!r} "
            f"xi={self.xi_hyper!r} eps0={self.eps0!r} a={self.a!r} nu={self.nu!r}"
        )


class RoundCounts(NamedTuple):
    """Real-valued local and global round counts for one accuracy level."""

    local: float
    global_: float

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.global_)

    def rounded(self) -> Tuple[int, Optional[int]]:
        """Integer counts for reporting; ``None`` stands for unbounded."""

        local = int(math.ceil(self.local - 1e-12)) if self.local > 0 else 0
        if not self.bounded:
            return local, None
        glo = int(math.ceil(self.global_ - 1e-12)) if self.global_ > 0 else 0
        return local, glo


@dataclass(frozen=True, slots=True)
class DeviceParams:
    """Physical parameters of one mobile device."""

    index: int
    sensing_rate: float
    sense_energy: float
    reward_energy: float
    cycles_per_bit: float
    cpu_coeff: float
    f_min: float
    f_max: float
    p_max: float
    channel_gain: float

    def __post_init__(self) -> None:
        for name in (
            "sensing_rate",
            "sense_energy",
            "reward_energy",
            "cycles_per_bit",
            "cpu_coeff",
            "f_min",
            "f_max",
            "p_max",
            "channel_gain",
        ):
            value = getattr(self, name)
            _require(
                value > 0 and math.isfinite(value),
                f"device.{name}>0",
                f"device {self.index}: {name} must be positive and finite, got {value}",
            )
        _require(
            self.f_min <= self.f_max,
            "f_min<=f_max",
            f"device {self.index}: f_min {self.f_min} exceeds f_max {self.f_max}",
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "sensing_rate": self.sensing_rate,
            "sense_energy": self.sense_energy,
            "reward_energy": self.reward_energy,
            "cycles_per_bit": self.cycles_per_bit,
            "cpu_coeff": self.cpu_coeff,
            "f_min": self.f_min,
            "f_max": self.f_max,
            "p_max": self.p_max,
            "channel_gain": self.channel_gain,
        }


@dataclass(frozen=True, slots=True)
class SystemParams:
    """Access-point budgets and shared link parameters."""

    num_devices: int
    power_budget: float
    bandwidth: float
    noise_density: float
    efficiency: float
    model_bits: float
    data_bits: float
    energy_cap: float = math.inf
    mode: AccessMode = "fdma"

    def __post_init__(self) -> None:
        _require(self.num_devices >= 1, "N>=1", f"need at least one device, got {self.num_devices}")
        for name in ("power_budget", "bandwidth", "noise_density", "model_bits", "data_bits"):
            value = getattr(self, name)
            _require(value > 0, f"{name}>0", f"{name} must be positive, got {value}")
        _require(
            0.0 < self.efficiency < 1.0,
            "0<phi<1",
            f"conversion efficiency must lie in (0, 1), got {self.efficiency}",
        )
        _require(self.energy_cap >= 0, "E_max>=0", f"energy cap must be nonnegative, got {self.energy_cap}")
        _require(self.mode in ACCESS_MODES, "mode", f"unknown access mode {self.mode!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "num_devices": self.num_devices,
            "power_budget": self.power_budget,
            "bandwidth": self.bandwidth,
            "noise_density": self.noise_density,
            "efficiency": self.efficiency,
            "model_bits": self.model_bits,
            "data_bits": self.data_bits,
            "energy_cap": None if math.isinf(self.energy_cap) else self.energy_cap,
            "mode": self.mode,
        }


@dataclass(frozen=True, slots=True)
class ProblemInstance:
    """All fixed parameters of one network realization."""

    system: SystemParams
    learning: LearningParams
    devices: Tuple[DeviceParams, ...]
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "devices", tuple(self.devices))
        _require(
            len(self.devices) == self.system.num_devices,
            "device_count",
            f"expected {self.system.num_devices} devices, got {len(self.devices)}",
        )
        if self.system.mode == "noma":
            gains = self.gains
            _require(
                bool(np.all(gains[:-1] >= gains[1:])),
                "sic_order",
                "NOMA instances must list devices by non-increasing channel gain",
            )

    @property
    def num_devices(self) -> int:
        return self.system.num_devices

    @property
    def mode(self) -> AccessMode:
        return self.system.mode

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(device, name) for device in self.devices], dtype=float)

    @property
    def gains(self) -> np.ndarray:
        return self._column("channel_gain")

    @property
    def sensing_rates(self) -> np.ndarray:
        return self._column("sensing_rate")

    @property
    def sense_energies(self) -> np.ndarray:
        return self._column("sense_energy")

    @property
    def reward_energies(self) -> np.ndarray:
        return self._column("reward_energy")

    @property
    def cycles_per_bit(self) -> np.ndarray:
        return self._column("cycles_per_bit")

    @property
    def cpu_coeffs(self) -> np.ndarray:
        return self._column("cpu_coeff")

    @property
    def f_min(self) -> np.ndarray:
        return self._column("f_min")

    @property
    def f_max(self) -> np.ndarray:
        return self._column("f_max")

    @property
    def p_max(self) -> np.ndarray:
        return self._column("p_max")

    def with_mode(self, mode: AccessMode) -> "ProblemInstance":
        """Return a copy in ``mode``; NOMA copies are re-sorted into SIC order."""

        devices = list(self.devices)
        if mode == "noma":
            order = sorted(range(len(devices)), key=lambda k: (-devices[k].channel_gain, k))
            devices = [replace(devices[k], index=position) for position, k in enumerate(order)]
        system = replace(self.system, mode=mode)
        return ProblemInstance(system=system, learning=self.learning, devices=tuple(devices), seed=self.seed)

    def with_system(self, **changes: Any) -> "ProblemInstance":
        return replace(self, system=replace(self.system, **changes))


def _frozen_array(values: Any) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, slots=True, eq=False)
class Allocation:
    """One decision point: powers, CPU rates, bandwidths, phase durations, accuracy."""

    beam_power: np.ndarray
    tx_power: np.ndarray
    cpu_freq: np.ndarray
    bandwidth: Optional[np.ndarray]
    tau_h: float
    tau_s: float
    tau_l: float
    tau_c: float
    eta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "beam_power", _frozen_array(self.beam_power))
        object.__setattr__(self, "tx_power", _frozen_array(self.tx_power))
        object.__setattr__(self, "cpu_freq", _frozen_array(self.cpu_freq))
        if self.bandwidth is not None:
            object.__setattr__(self, "bandwidth", _frozen_array(self.bandwidth))
        for name in ("tau_h", "tau_s", "tau_l", "tau_c", "eta"):
            object.__setattr__(self, name, float(getattr(self, name)))

        size = self.beam_power.shape
        vectors = [self.tx_power, self.cpu_freq]
        if self.bandwidth is not None:
            vectors.append(self.bandwidth)
        _require(
            all(vector.shape == size for vector in vectors) and len(size) == 1,
            "allocation_shape",
            "per-device vectors must share one length",
        )
        for name in ("beam_power", "tx_power", "cpu_freq", "bandwidth"):
            vector = getattr(self, name)
            if vector is not None:
                _require(
                    bool(np.all(vector >= 0)) and bool(np.all(np.isfinite(vector))),
                    f"{name}>=0",
                    f"{name} entries must be finite and nonnegative",
                )
        for name in ("tau_h", "tau_s", "tau_l", "tau_c"):
            value = getattr(self, name)
            _require(value >= 0 and math.isfinite(value), f"{name}>=0", f"{name} must be finite and nonnegative, got {value}")
        _require(0.0 < self.eta <= 1.0, "0<eta<=1", f"local accuracy must lie in (0, 1], got {self.eta}")

    @property
    def num_devices(self) -> int:
        return int(self.beam_power.shape[0])

    @property
    def tau_sum(self) -> float:
        return self.tau_h + self.tau_s + self.tau_l + self.tau_c

    def replace(self, **changes: Any) -> "Allocation":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beam_power": self.beam_power.tolist(),
            "tx_power": self.tx_power.tolist(),
            "cpu_freq": self.cpu_freq.tolist(),
            "bandwidth": None if self.bandwidth is None else self.bandwidth.tolist(),
            "tau_h": self.tau_h,
            "tau_s": self.tau_s,
            "tau_l": self.tau_l,
            "tau_c": self.tau_c,
            "eta": self.eta,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Allocation":
        return cls(
            beam_power=data["beam_power"],
            tx_power=data["tx_power"],
            cpu_freq=data["cpu_freq"],
            bandwidth=data.get("bandwidth"),
            tau_h=data["tau_h"],
            tau_s=data["tau_s"],
            tau_l=data["tau_l"],
            tau_c=data["tau_c"],
            eta=data["eta"],
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Allocation):
            return NotImplemented
        if (self.bandwidth is None) != (other.bandwidth is None):
            return False
        same_vectors = (
            np.array_equal(self.beam_power, other.beam_power)
            and np.array_equal(self.tx_power, other.tx_power)
            and np.array_equal(self.cpu_freq, other.cpu_freq)
            and (self.bandwidth is None or np.array_equal(self.bandwidth, other.bandwidth))
        )
        return same_vectors and (
            self.tau_h,
            self.tau_s,
            self.tau_l,
            self.tau_c,
            self.eta,
        ) == (other.tau_h, other.tau_s, other.tau_l, other.tau_c, other.eta)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, slots=True)
class EnergyBreakdown:
    """Per-device energy terms of one round, all in joules."""

    harvested: np.ndarray
    reward: np.ndarray
    sensing: np.ndarray
    local: np.ndarray
    transmit: np.ndarray

    @property
    def consumed(self) -> np.ndarray:
        return self.reward + self.sensing + self.local + self.transmit

    @property
    def slack(self) -> np.ndarray:
        return self.harvested - self.consumed
