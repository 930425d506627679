"""Builders for the accuracy and resource subproblems of one SCA iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from system_model import Allocation, ProblemInstance, global_rounds, local_rounds

from .errors import AnchorInfeasibleError
from .program import ConvexProgram, Expression
from .surrogates import (
    ANCHOR_FLOOR,
    accuracy_ratio_upper,
    bilinear_lower,
    bilinear_upper,
    clamp_anchor,
    fdma_rate_lower,
    noma_rate_lower,
    ratio_upper,
    sqrt_product_upper,
)

ETA_MIN = 1e-4
ETA_MAX = 1.0 - 1e-4
LN2 = math.log(2.0)


def clamp_eta(eta: float) -> float:
    return min(max(float(eta), ETA_MIN), ETA_MAX)


@dataclass(frozen=True, slots=True)
class FixedValues:
    """Quantities held constant by a scheme; ``None`` leaves them free."""

    tau_s: Optional[float] = None
    beam_power: Optional[np.ndarray] = None
    bandwidth: Optional[np.ndarray] = None
    eta: Optional[float] = None

    def names(self) -> frozenset:
        return frozenset(
            name
            for name, value in (
                ("tau_s", self.tau_s),
                ("beam_power", self.beam_power),
                ("bandwidth", self.bandwidth),
                ("eta", self.eta),
            )
            if value is not None
        )


def energy_headroom(instance: ProblemInstance, anchor: Allocation) -> np.ndarray:
    """Energy left for local training at the anchor: harvested minus upload, sensing and reward."""

    data = instance.sensing_rates * anchor.tau_s
    harvested = instance.system.efficiency * anchor.tau_h * anchor.beam_power * instance.gains
    spent = anchor.tx_power * anchor.tau_c + (instance.sense_energies + instance.reward_energies) * data
    return harvested - spent


@dataclass(slots=True)
class AccuracyProgram:
    program: ConvexProgram
    start: np.ndarray

    def decode(self, x: np.ndarray) -> tuple:
        values = self.program.unpack(x)
        return values["eta"], values["tau_l"]


def build_accuracy_program(instance: ProblemInstance, anchor: Allocation) -> AccuracyProgram:
    """Convexified accuracy problem over ``(eta, tau_l)`` with the other variables at the anchor."""

    learning = instance.learning
    headroom = energy_headroom(instance, anchor)
    negative = np.flatnonzero(headroom < 0)
    if negative.size:
        n = int(negative[0])
        raise AnchorInfeasibleError(
            f"anchor leaves device {n} with negative training energy {headroom[n]:.3e} J",
            device=n,
        )

    eta_bar = clamp_eta(anchor.eta)
    tau_l_bar = clamp_anchor(anchor.tau_l)
    iota = anchor.tau_h + anchor.tau_s + anchor.tau_c
    program = ConvexProgram("accuracy")
    eta = program.add_variable("eta", ETA_MIN, ETA_MAX, scale=eta_bar)
    tau_l = program.add_variable("tau_l", ANCHOR_FLOOR, math.inf, scale=tau_l_bar)

    ratio = accuracy_ratio_upper(tau_l_bar, eta_bar, learning.a)
    objective = Expression().reciprocal(eta, learning.a * iota, slope=-1.0, offset=1.0)
    objective.quotient_square(
        ratio.coeffs["c"],
        tau_l,
        slope=1.0 / ratio.coeffs["u_bar"],
        offset=0.0,
        numer=ratio.coeffs["v_bar"],
        den_var=eta,
        den_slope=-1.0,
        den_offset=1.0,
    )
    program.set_objective(objective)

    data = instance.sensing_rates * anchor.tau_s
    rounds_per_log = learning.nu / LN2
    train_energy = instance.cpu_coeffs * instance.cycles_per_bit * data * anchor.cpu_freq**2
    train_cycles = instance.cycles_per_bit * data
    for n in range(instance.num_devices):
        if data[n] <= 0:
            continue
        program.add_constraint(
            f"energy[{n}]",
            Expression().neg_log(eta, rounds_per_log * train_energy[n]).add_constant(-headroom[n]),
        )
        program.add_constraint(
            f"local_time[{n}]",
            Expression().neg_log(eta, rounds_per_log * train_cycles[n] / anchor.cpu_freq[n]).add_linear(tau_l, -1.0),
        )

    start = np.array([eta_bar, tau_l_bar])
    program.autoscale(start)
    return AccuracyProgram(program=program, start=start)


@dataclass(slots=True)
class ResourceProgram:
    program: ConvexProgram
    start: np.ndarray
    eta: float
    fixed: FixedValues
    mode: str

    def decode(self, x: np.ndarray, instance: ProblemInstance) -> Allocation:
        count = instance.num_devices
        values = np.asarray(x, dtype=float)
        index = self.program.index

        def vector(prefix: str) -> np.ndarray:
            return np.array([values[index(f"{prefix}[{n}]")] for n in range(count)])

        beam_power = self.fixed.beam_power if self.fixed.beam_power is not None else vector("P")
        if self.mode == "noma":
            bandwidth = None
        elif self.fixed.bandwidth is not None:
            bandwidth = self.fixed.bandwidth
        else:
            bandwidth = vector("b")
        return Allocation(
            beam_power=beam_power,
            tx_power=vector("p"),
            cpu_freq=vector("f"),
            bandwidth=bandwidth,
            tau_h=values[index("tau_h")],
            tau_s=self.fixed.tau_s if self.fixed.tau_s is not None else values[index("tau_s")],
            tau_l=values[index("tau_l")],
            tau_c=values[index("tau_c")],
            eta=self.eta,
        )


def build_resource_program(
    instance: ProblemInstance,
    eta: float,
    anchor: Allocation,
    fixed: Optional[FixedValues] = None,
) -> ResourceProgram:
    """Inner convex approximation of the resource problem at ``anchor`` for fixed ``eta``.

    FDMA programs carry ``4N + 4`` variables, NOMA programs ``3N + 4``; frozen
    quantities drop out and their terms become exact.
    """

    fixed = fixed or FixedValues()
    system = instance.system
    count = instance.num_devices
    noma = instance.mode == "noma"
    gains = instance.gains
    rates = instance.sensing_rates
    eta_loc = local_rounds(instance.learning, eta)
    eta_glo = global_rounds(instance.learning, eta)

    tau_bar = {name: clamp_anchor(getattr(anchor, name)) for name in ("tau_h", "tau_s", "tau_l", "tau_c")}
    P_bar = clamp_anchor(anchor.beam_power)
    p_bar = clamp_anchor(anchor.tx_power)
    f_bar = clamp_anchor(anchor.cpu_freq)

    program = ConvexProgram("resource-noma" if noma else "resource-fdma")
    start = []

    def variable(name: str, lower: float, upper: float, anchor_value: float) -> int:
        start.append(anchor_value)
        return program.add_variable(name, lower, upper, scale=anchor_value)

    tau_h = variable("tau_h", ANCHOR_FLOOR, math.inf, tau_bar["tau_h"])
    tau_s = None if fixed.tau_s is not None else variable("tau_s", ANCHOR_FLOOR, math.inf, tau_bar["tau_s"])
    tau_l = variable("tau_l", ANCHOR_FLOOR, math.inf, tau_bar["tau_l"])
    tau_c = variable("tau_c", ANCHOR_FLOOR, math.inf, tau_bar["tau_c"])
    P = None
    if fixed.beam_power is None:
        P = [variable(f"P[{n}]", ANCHOR_FLOOR, system.power_budget, float(P_bar[n])) for n in range(count)]
    p = [variable(f"p[{n}]", ANCHOR_FLOOR, float(instance.p_max[n]), float(p_bar[n])) for n in range(count)]
    f_upper = np.maximum(instance.f_max, np.nextafter(instance.f_min, math.inf))
    f = [
        variable(f"f[{n}]", float(instance.f_min[n]), float(f_upper[n]), float(f_bar[n]))
        for n in range(count)
    ]
    b = None
    b_bar = None
    if not noma:
        b_bar = clamp_anchor(fixed.bandwidth if fixed.bandwidth is not None else anchor.bandwidth)
        if fixed.bandwidth is None:
            b = [variable(f"b[{n}]", ANCHOR_FLOOR, system.bandwidth, float(b_bar[n])) for n in range(count)]

    objective = Expression()
    for var in (tau_h, tau_l, tau_c):
        objective.add_linear(var, eta_glo)
    if tau_s is None:
        objective.add_constant(eta_glo * fixed.tau_s)
    else:
        objective.add_linear(tau_s, eta_glo)
    program.set_objective(objective)

    efficiency = system.efficiency
    for n in range(count):
        per_bit = (instance.sense_energies[n] + instance.reward_energies[n]) * rates[n]
        train_scale = eta_loc * instance.cpu_coeffs[n] * instance.cycles_per_bit[n] * rates[n]
        energy = Expression()
        if tau_s is not None:
            energy.add_linear(tau_s, per_bit)
            if train_scale > 0:
                train = bilinear_upper(tau_bar["tau_s"], float(f_bar[n]), squared=True)
                energy.square(tau_s, train_scale * train.coeffs["ct"])
                energy.quartic(f[n], train_scale * train.coeffs["cz"])
        else:
            energy.add_constant(per_bit * fixed.tau_s)
            energy.square(f[n], train_scale * fixed.tau_s)
        upload = bilinear_upper(float(p_bar[n]), tau_bar["tau_c"])
        energy.square(p[n], upload.coeffs["ct"]).square(tau_c, upload.coeffs["cz"])
        if P is None:
            energy.add_linear(tau_h, -efficiency * gains[n] * float(fixed.beam_power[n]))
        else:
            harvest = bilinear_lower(tau_bar["tau_h"], float(P_bar[n]))
            energy.neg_sqrt(tau_h, efficiency * gains[n] * harvest.coeffs["ct"])
            energy.reciprocal(P[n], efficiency * gains[n] * harvest.coeffs["cz"])
        program.add_constraint(f"energy[{n}]", energy)

        chi = eta_loc * instance.cycles_per_bit[n] * rates[n]
        local = Expression().add_linear(tau_l, -1.0)
        if chi > 0:
            if tau_s is not None:
                ratio = ratio_upper(tau_bar["tau_s"], float(f_bar[n]), scale=chi)
                local.quotient_square(
                    ratio.coeffs["c"],
                    tau_s,
                    slope=1.0 / ratio.coeffs["u_bar"],
                    offset=0.0,
                    numer=ratio.coeffs["v_bar"],
                    den_var=f[n],
                )
            else:
                local.reciprocal(f[n], chi * fixed.tau_s)
        program.add_constraint(f"local_time[{n}]", local)

        upload_row = Expression()
        if noma:
            rate = noma_rate_lower(p_bar, tau_bar["tau_c"], n, gains, system.noise_density, system.bandwidth)
            lam, mu, ups = rate.coeffs["lambda"], rate.coeffs["mu"], rate.coeffs["upsilon"]
            interference_bar = rate.coeffs["interference_bar"]
            required = system.model_bits * LN2 / system.bandwidth
            upload_row.add_constant(
                required - lam - 2.0 * mu + mu * system.noise_density * system.bandwidth / interference_bar
            )
            upload_row.reciprocal(p[n], mu * rate.coeffs["p_bar"])
            for k in range(n + 1, count):
                upload_row.add_linear(p[k], mu * gains[k] / interference_bar)
            upload_row.reciprocal(tau_c, ups)
        else:
            rate = fdma_rate_lower(float(b_bar[n]), float(p_bar[n]), float(gains[n]), system.noise_density)
            lam, mu, ups = rate.coeffs["lambda"], rate.coeffs["mu"], rate.coeffs["upsilon"]
            upload_row.reciprocal(tau_c, system.model_bits * LN2)
            upload_row.add_constant(-lam - 2.0 * mu)
            upload_row.reciprocal(p[n], mu * rate.coeffs["p_bar"])
            if b is None:
                b_fixed = float(fixed.bandwidth[n])
                upload_row.add_constant(mu * b_fixed / rate.coeffs["b_bar"] + ups / b_fixed)
            else:
                upload_row.add_linear(b[n], mu / rate.coeffs["b_bar"])
                upload_row.reciprocal(b[n], ups)
        program.add_constraint(f"upload[{n}]", upload_row)

        if tau_s is not None:
            program.add_constraint(
                f"sensing[{n}]",
                Expression().add_constant(system.data_bits).add_linear(tau_s, -rates[n]),
            )

    if math.isfinite(system.energy_cap):
        cap = Expression()
        if P is None:
            cap.add_linear(tau_h, float(np.sum(fixed.beam_power))).add_constant(-system.energy_cap)
        else:
            total_bar = float(np.sum(P_bar))
            bound = sqrt_product_upper(tau_bar["tau_h"], total_bar)
            cap.add_linear(tau_h, bound.coeffs["cx"])
            for var in P:
                cap.add_linear(var, bound.coeffs["cy"])
            cap.add_constant(-math.sqrt(system.energy_cap))
        program.add_constraint("source_energy", cap)
    if P is not None:
        total = Expression().add_constant(-system.power_budget)
        for var in P:
            total.add_linear(var, 1.0)
        program.add_constraint("beam_power", total)
    if b is not None:
        total = Expression().add_constant(-system.bandwidth)
        for var in b:
            total.add_linear(var, 1.0)
        program.add_constraint("bandwidth", total)

    start_vector = np.array(start, dtype=float)
    program.autoscale(start_vector)
    return ResourceProgram(
        program=program,
        start=start_vector,
        eta=float(eta),
        fixed=fixed,
        mode=instance.mode,
    )
