"""Experiment configuration for the parameter sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from config_loader import ConfigError, resolve_runtime_options  # type: ignore[import]
from optimization import SCHEMES, ScaOptions, Scheme, SolverSettings
from system_model import (
    ChannelConfig,
    DeviceRanges,
    LearningParams,
    ModelError,
    SystemParams,
    dbm_to_watts,
)

SWEEP_VARIABLES: Tuple[str, ...] = ("P0_dBm", "Na", "D0", "B", "eps0", "N")
INTEGER_VARIABLES = frozenset({"Na", "N"})
TOP_LEVEL_KEYS = frozenset(
    {
        "sweep",
        "schemes",
        "realizations",
        "seed_base",
        "mode",
        "output_path",
        "system",
        "learning",
        "channel",
        "devices",
        "solver",
        "workers",
    }
)

DEFAULT_SYSTEM: Dict[str, Any] = {
    "num_devices": 10,
    "P0_dBm": 42.0,
    "bandwidth": 5e5,
    "noise_density": 1e-14,
    "efficiency": 0.9,
    "model_bits": 28.1e3,
    "data_bits": 1e5,
    "energy_cap": None,
}
DEFAULT_LEARNING: Dict[str, float] = {
    "L": 4.0,
    "gamma": 2.0,
    "delta": 0.25,
    "xi_hyper": 1.0 / 3.0,
    "eps0": 1e-3,
}
DEFAULT_REALIZATIONS = 20


def _section(data: Mapping[str, Any], key: str) -> Dict[str, Any]:
    value = data.get(key) or {}
    if not isinstance(value, Mapping):
        raise ConfigError(f"'{key}' must be a JSON object")
    return dict(value)


def _build(kind: str, factory: Any, values: Dict[str, Any]) -> Any:
    try:
        return factory(**values)
    except TypeError as exc:
        raise ConfigError(f"Invalid '{kind}' section: {exc}") from exc
    except ModelError as exc:
        raise ConfigError(f"Invalid '{kind}' section: {exc}") from exc


def _system_params(values: Dict[str, Any], mode: str) -> SystemParams:
    merged = dict(DEFAULT_SYSTEM)
    merged.update(values)
    power_dbm = merged.pop("P0_dBm")
    cap = merged.get("energy_cap")
    merged["energy_cap"] = math.inf if cap is None else float(cap)
    merged["power_budget"] = dbm_to_watts(float(power_dbm))
    merged["mode"] = mode
    return _build("system", SystemParams, merged)


def _device_ranges(values: Dict[str, Any]) -> DeviceRanges:
    values = dict(values)
    if "p_max_dBm" in values:
        values["p_max"] = dbm_to_watts(float(values.pop("p_max_dBm")))
    for key in ("cycles_per_bit", "sensing_rate", "sense_energy", "reward_energy"):
        if key in values:
            values[key] = tuple(values[key])
    return _build("devices", DeviceRanges, values)


def _channel_config(values: Dict[str, Any]) -> ChannelConfig:
    values = dict(values)
    if "distance_range" in values:
        values["distance_range"] = tuple(values["distance_range"])
    return _build("channel", ChannelConfig, values)


def _sca_options(values: Dict[str, Any]) -> ScaOptions:
    """SCA knobs plus the interior-point ``mu`` and ``interior_max_iter`` overrides."""

    allowed = {"eps", "max_iter", "tol", "resource_steps_per_accuracy", "mu", "interior_max_iter"}
    unknown = set(values) - allowed
    if unknown:
        raise ConfigError(f"Unknown solver keys: {', '.join(sorted(unknown))}")
    values = dict(values)
    interior = {}
    if "mu" in values:
        interior["mu"] = values.pop("mu")
    if "interior_max_iter" in values:
        interior["max_iter"] = values.pop("interior_max_iter")
    try:
        if interior:
            values["solver"] = SolverSettings(tol=values.get("tol", 1e-8), **interior)
        return ScaOptions(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid 'solver' section: {exc}") from exc


def _check_grid(variable: str, grid: Any) -> Tuple[float, ...]:
    if not isinstance(grid, list) or not grid:
        raise ConfigError("'sweep.grid' must be a non-empty list")
    try:
        values = tuple(float(value) for value in grid)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'sweep.grid' must hold numbers: {exc}") from exc
    steps = [b - a for a, b in zip(values, values[1:])]
    if steps and not (all(step > 0 for step in steps) or all(step < 0 for step in steps)):
        raise ConfigError("'sweep.grid' must be strictly monotone")
    if variable in INTEGER_VARIABLES and any(value != int(value) or value < 1 for value in values):
        raise ConfigError(f"'{variable}' grid values must be positive integers")
    return values


@dataclass(slots=True)
class ExperimentConfig:
    """One sweep: base parameters, the swept variable and its grid, and the schemes to run."""

    variable: str
    grid: Tuple[float, ...]
    schemes: Tuple[str, ...]
    output_path: Path
    system: SystemParams
    learning: LearningParams
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    devices: DeviceRanges = field(default_factory=DeviceRanges)
    options: ScaOptions = field(default_factory=ScaOptions)
    realizations: int = DEFAULT_REALIZATIONS
    seed_base: int = 0
    mode: str = "fdma"
    workers: int = 1

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """Validate a loaded config dict; raises ``ConfigError`` on any schema problem."""

        unknown = set(data) - TOP_LEVEL_KEYS
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(sorted(unknown))}")

        sweep = _section(data, "sweep")
        variable = sweep.get("variable")
        if variable not in SWEEP_VARIABLES:
            raise ConfigError(f"'sweep.variable' must be one of {', '.join(SWEEP_VARIABLES)}, got {variable!r}")
        grid = _check_grid(variable, sweep.get("grid"))

        schemes = data.get("schemes")
        if not isinstance(schemes, list) or not schemes:
            raise ConfigError("'schemes' must be a non-empty list")
        for tag in schemes:
            if tag not in SCHEMES:
                raise ConfigError(f"Unknown scheme {tag!r}; expected one of {', '.join(SCHEMES)}")
        if len(set(schemes)) != len(schemes):
            raise ConfigError("'schemes' lists a scheme twice")

        mode = data.get("mode", "fdma")
        if mode not in ("fdma", "noma"):
            raise ConfigError(f"'mode' must be 'fdma' or 'noma', got {mode!r}")

        realizations = data.get("realizations", DEFAULT_REALIZATIONS)
        if not isinstance(realizations, int) or realizations < 1:
            raise ConfigError(f"'realizations' must be a positive integer, got {realizations!r}")
        seed_base = data.get("seed_base", 0)
        if not isinstance(seed_base, int) or seed_base < 0:
            raise ConfigError(f"'seed_base' must be a nonnegative integer, got {seed_base!r}")
        workers = data.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError(f"'workers' must be a positive integer, got {workers!r}")

        output_path = data.get("output_path")
        if not output_path:
            raise ConfigError("Missing output_path configuration.")

        learning_values = dict(DEFAULT_LEARNING)
        learning_values.update(_section(data, "learning"))

        config = cls(
            variable=variable,
            grid=grid,
            schemes=tuple(schemes),
            output_path=Path(output_path),
            system=_system_params(_section(data, "system"), mode),
            learning=_build("learning", LearningParams, learning_values),
            channel=_channel_config(_section(data, "channel")),
            devices=_device_ranges(_section(data, "devices")),
            options=_sca_options(_section(data, "solver")),
            realizations=realizations,
            seed_base=seed_base,
            mode=mode,
            workers=workers,
        )
        for value in grid:
            config.at(value)
        return config

    def scheme(self, tag: str) -> Scheme:
        """``S2FL`` follows the configured access mode; benchmarks keep their own."""

        if tag == "S2FL" and self.mode == "noma":
            return SCHEMES["S2FL-NOMA"]
        return SCHEMES[tag]

    def seed(self, realization: int) -> int:
        return self.seed_base + realization

    def at(self, value: float) -> Tuple[SystemParams, LearningParams, ChannelConfig]:
        """Base parameters with the swept variable set to ``value``."""

        system, learning, channel = self.system, self.learning, self.channel
        try:
            if self.variable == "P0_dBm":
                system = replace(system, power_budget=dbm_to_watts(value))
            elif self.variable == "Na":
                channel = replace(channel, antennas=int(value))
            elif self.variable == "D0":
                system = replace(system, data_bits=value)
            elif self.variable == "B":
                system = replace(system, bandwidth=value)
            elif self.variable == "eps0":
                learning = replace(learning, eps0=value)
            else:
                system = replace(system, num_devices=int(value))
        except ModelError as exc:
            raise ConfigError(f"Grid value {value!r} invalid for {self.variable}: {exc}") from exc
        return system, learning, channel

    def header(self) -> Dict[str, str]:
        """Constants recorded in the result file header."""

        return {
            "sweep_variable": self.variable,
            "mode": self.mode,
            "a": repr(self.learning.a),
            "nu": repr(self.learning.nu),
            "learning": self.learning.describe(),
            "realizations": str(self.realizations),
            "seed_base": str(self.seed_base),
        }


def load_experiment(config_path: Optional[str] = None, **overrides: Any) -> ExperimentConfig:
    """Load and validate an experiment config, applying CLI overrides first."""

    return ExperimentConfig.from_mapping(resolve_runtime_options(config_path=config_path, **overrides))
