"""Comparison schemes: each one freezes part of the decision and reuses the SCA loop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Tuple

import numpy as np

from system_model import AccessMode, Allocation, ProblemInstance

from .sca import IterationCallback, ScaOptions, Trace, init_feasible, run_loop
from .subproblems import FixedValues

FLA_ETA = 0.25
FROZEN_NAMES = frozenset({"tau_s", "eta", "P", "b"})


@dataclass(frozen=True, slots=True)
class Scheme:
    tag: str
    mode: AccessMode
    frozen: FrozenSet[str] = frozenset()
    fixed_eta: Optional[float] = None

    def __post_init__(self) -> None:
        unknown = set(self.frozen) - FROZEN_NAMES
        if unknown:
            raise ValueError(f"Scheme {self.tag}: unknown frozen variables {sorted(unknown)}")
        if ("eta" in self.frozen) != (self.fixed_eta is not None):
            raise ValueError(f"Scheme {self.tag}: a frozen eta needs fixed_eta and vice versa")
        if self.mode == "noma" and "b" in self.frozen:
            raise ValueError(f"Scheme {self.tag}: NOMA has no bandwidth to freeze")

    @classmethod
    def from_tag(cls, tag: str) -> "Scheme":
        try:
            return SCHEMES[tag.upper()]
        except KeyError as exc:
            raise ValueError(f"Unknown scheme {tag!r}; expected one of {', '.join(SCHEMES)}") from exc

    def fixed_values(self, instance: ProblemInstance) -> FixedValues:
        """Values of the frozen variables on ``instance``."""

        system = instance.system
        tau_s = None
        beam_power = None
        bandwidth = None
        if "tau_s" in self.frozen:
            tau_s = float(np.max(system.data_bits / instance.sensing_rates))
        if "P" in self.frozen:
            gains = instance.gains
            beam_power = system.power_budget * gains / gains.sum()
        if "b" in self.frozen:
            bandwidth = np.full(instance.num_devices, system.bandwidth / instance.num_devices)
        return FixedValues(tau_s=tau_s, beam_power=beam_power, bandwidth=bandwidth, eta=self.fixed_eta)

    def initial_allocation(self, instance: ProblemInstance, seed: Optional[int] = None) -> Allocation:
        return init_feasible(instance, fixed=self.fixed_values(instance), jitter_seed=seed)


SCHEMES: Dict[str, Scheme] = {
    "S2FL": Scheme("S2FL", "fdma"),
    "S2FL-NOMA": Scheme("S2FL-NOMA", "noma"),
    "FTD": Scheme("FTD", "fdma", frozenset({"tau_s"})),
    "FLA": Scheme("FLA", "fdma", frozenset({"eta"}), fixed_eta=FLA_ETA),
    "PPT": Scheme("PPT", "fdma", frozenset({"P"})),
    "EBA": Scheme("EBA", "fdma", frozenset({"b"})),
}
SCHEME_ORDER: Tuple[str, ...] = tuple(SCHEMES)


def run_benchmark(
    instance: ProblemInstance,
    scheme: Scheme | str,
    opts: Optional[ScaOptions] = None,
    *,
    on_iteration: Optional[IterationCallback] = None,
) -> Trace:
    """Run ``scheme`` on ``instance``; the instance is converted to the scheme's access mode."""

    if isinstance(scheme, str):
        scheme = Scheme.from_tag(scheme)
    opts = opts or ScaOptions()
    if instance.mode != scheme.mode:
        instance = instance.with_mode(scheme.mode)
    fixed = scheme.fixed_values(instance)
    start = init_feasible(instance, fixed=fixed, jitter_seed=opts.seed)
    return run_loop(instance, start, opts, fixed=fixed, scheme=scheme.tag, on_iteration=on_iteration)
