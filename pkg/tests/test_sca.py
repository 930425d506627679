from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import default_learning, sampled
from optimization import (
    AnchorInfeasibleError,
    FixedValues,
    ScaOptions,
    SolverSettings,
    SubproblemError,
    accuracy_step,
    build_resource_program,
    init_feasible,
    resource_step,
    run,
    run_benchmark,
    trace_to_csv,
    trace_to_json,
)
from optimization.sca import run_loop
from system_model import (
    InfeasibleInstanceError,
    ProblemInstance,
    check_feasibility,
    total_completion_time,
)

DESCENT_SLACK = 1e-6


def test_init_is_feasible_and_deterministic(default_instance):
    start = init_feasible(default_instance)
    assert check_feasibility(default_instance, start, tol_rel=1e-9).feasible
    assert start == init_feasible(default_instance)
    assert start.eta == 0.5
    assert start.tau_s == pytest.approx(float(np.max(1e5 / default_instance.sensing_rates)))
    np.testing.assert_array_equal(start.cpu_freq, default_instance.f_min)
    assert math.isfinite(total_completion_time(start, default_instance.learning))


def test_jittered_init_stays_feasible(default_instance):
    jittered = init_feasible(default_instance, jitter_seed=4)
    assert jittered != init_feasible(default_instance)
    assert check_feasibility(default_instance, jittered, tol_rel=1e-9).feasible
    assert jittered == init_feasible(default_instance, jitter_seed=4)


def test_init_reallocates_beams_under_energy_cap(default_instance):
    start = init_feasible(default_instance)
    capped = default_instance.with_system(energy_cap=start.tau_h * start.beam_power.sum() * 0.999)
    constrained = init_feasible(capped)
    assert check_feasibility(capped, constrained, tol_rel=1e-9).feasible
    assert constrained.tau_h * constrained.beam_power.sum() <= capped.system.energy_cap
    assert not np.allclose(constrained.beam_power, start.beam_power)


def test_zero_energy_cap_is_reported(default_instance):
    capped = default_instance.with_system(energy_cap=0.0)
    with pytest.raises(InfeasibleInstanceError) as excinfo:
        init_feasible(capped)
    assert excinfo.value.budget == "source_energy"
    assert excinfo.value.report is not None
    assert not excinfo.value.report.feasible


def test_accuracy_step_never_increases_objective(default_instance):
    anchor = init_feasible(default_instance)
    eta, tau_l = accuracy_step(default_instance, anchor)
    candidate = anchor.replace(eta=eta, tau_l=tau_l)
    before = total_completion_time(anchor, default_instance.learning)
    assert total_completion_time(candidate, default_instance.learning) <= before * (1 + DESCENT_SLACK)
    assert check_feasibility(default_instance, candidate).feasible


def test_accuracy_step_with_zero_global_scale(single_device_instance):
    instance = ProblemInstance(
        system=single_device_instance.system,
        learning=default_learning(eps0=1.0),
        devices=single_device_instance.devices,
    )
    anchor = init_feasible(instance)
    assert accuracy_step(instance, anchor) == (anchor.eta, anchor.tau_l)
    trace = run(instance)
    assert trace.final_objective == 0.0
    assert trace.converged
    assert trace.iterations == 0


def test_accuracy_step_rejects_energy_deficit(two_device_instance):
    anchor = init_feasible(two_device_instance).replace(tau_h=0.0)
    with pytest.raises(AnchorInfeasibleError) as excinfo:
        accuracy_step(two_device_instance, anchor)
    assert excinfo.value.device is not None


def test_resource_step_is_exactly_feasible_and_descends(default_instance):
    anchor = init_feasible(default_instance)
    alloc = resource_step(default_instance, anchor.eta, anchor, "fdma")
    assert check_feasibility(default_instance, alloc, tol_rel=1e-6).feasible
    learning = default_instance.learning
    assert total_completion_time(alloc, learning) <= total_completion_time(anchor, learning) * (1 + DESCENT_SLACK)


def test_repeated_resource_steps_never_increase(default_instance):
    anchor = init_feasible(default_instance)
    learning = default_instance.learning
    current = anchor
    objectives = [total_completion_time(anchor, learning)]
    for _ in range(4):
        current = resource_step(default_instance, anchor.eta, current)
        objectives.append(total_completion_time(current, learning))
    for previous, after in zip(objectives, objectives[1:]):
        assert after <= previous * (1 + DESCENT_SLACK)


def test_resource_step_rejects_mode_mismatch(default_instance):
    with pytest.raises(ValueError):
        resource_step(default_instance, 0.5, init_feasible(default_instance), "noma")


def test_program_sizes_by_mode(default_instance):
    anchor = init_feasible(default_instance)
    fdma = build_resource_program(default_instance, 0.5, anchor)
    assert fdma.program.size()[0] == 4 * 10 + 4
    noma_instance = default_instance.with_mode("noma")
    noma_anchor = init_feasible(noma_instance)
    noma = build_resource_program(noma_instance, 0.5, noma_anchor)
    assert noma.program.size()[0] == 3 * 10 + 4


def _assert_sound(trace):
    objectives = trace.objectives
    for previous, current in zip(objectives, objectives[1:]):
        assert current <= previous * (1 + DESCENT_SLACK)
    for record in trace.records:
        assert check_feasibility(trace.instance, record.allocation, tol_rel=1e-6).feasible


def test_run_descends_and_stays_feasible(default_instance):
    trace = run(default_instance, opts=ScaOptions(max_iter=30))
    _assert_sound(trace)
    assert trace.converged
    assert trace.final_objective < trace.initial_objective
    assert trace.scheme == "S2FL"


def test_run_is_deterministic(default_instance):
    first = run(default_instance, opts=ScaOptions(max_iter=5, seed=9))
    second = run(default_instance, opts=ScaOptions(max_iter=5, seed=9))
    assert first.objectives == second.objectives
    assert first.final_allocation == second.final_allocation


def test_run_noma_mode_sorts_and_descends(default_instance):
    trace = run(default_instance, "noma", ScaOptions(max_iter=30))
    assert trace.instance.mode == "noma"
    assert trace.final_allocation.bandwidth is None
    assert trace.scheme == "S2FL-NOMA"
    _assert_sound(trace)


def test_iteration_cap_is_reported_not_raised(default_instance):
    trace = run(default_instance, opts=ScaOptions(max_iter=1, eps=1e-12))
    assert trace.status == "iteration-cap"
    assert trace.iterations == 1


def test_on_iteration_callback_and_serialization(default_instance):
    seen = []
    trace = run(default_instance, opts=ScaOptions(max_iter=3), on_iteration=seen.append)
    assert [record.iteration for record in seen] == list(range(1, trace.iterations + 1))
    text = trace_to_json(trace)
    assert '"format": "wpfl-trace"' in text
    rows = trace_to_csv(trace).strip().splitlines()
    assert rows[0].startswith("iteration,objective,eta")
    assert len(rows) == trace.iterations + 2


def test_two_timescale_ratio(default_instance):
    trace = run(default_instance, opts=ScaOptions(max_iter=2, resource_steps_per_accuracy=3))
    assert all(len(record.resource) == 3 for record in trace.records)
    _assert_sound(trace)


def test_sensing_constraint_binds_at_the_slowest_device(default_instance):
    trace = run(default_instance, opts=ScaOptions(max_iter=30))
    final = trace.final_allocation
    slowest = float(np.min(default_instance.sensing_rates))
    assert slowest * final.tau_s - 1e5 <= 1e-3 * 1e5


def test_single_device_noma_matches_full_band_fdma():
    instance = sampled(seed=1, num_devices=1)
    fdma = run_loop(
        instance,
        init_feasible(instance),
        ScaOptions(max_iter=50, eps=1e-6),
    )
    noma = run(instance, "noma", ScaOptions(max_iter=50, eps=1e-6))
    assert noma.final_objective == pytest.approx(fdma.final_objective, rel=0.01)


@pytest.mark.slow
@pytest.mark.parametrize("size", [6, 10, 14, 18, 22])
def test_converges_within_thirty_iterations(size):
    trace = run(sampled(seed=0, num_devices=size), opts=ScaOptions(max_iter=30))
    assert trace.converged
    _assert_sound(trace)


@pytest.mark.slow
def test_soundness_over_seeded_realizations():
    for seed in range(20):
        _assert_sound(run(sampled(seed=seed)))


def test_fixed_sensing_time_drops_its_variable_and_rows(default_instance):
    tau_s = float(np.max(1e5 / default_instance.sensing_rates)) * 1.2
    fixed = FixedValues(tau_s=tau_s)
    anchor = init_feasible(default_instance, fixed=fixed)
    built = build_resource_program(default_instance, anchor.eta, anchor, fixed)
    names = {variable.name for variable in built.program.variables}
    assert "tau_s" not in names
    assert not any(row.name.startswith("sensing[") for row in built.program.constraints)
    assert built.program.size() == (4 * 10 + 3, 3 * 10 + 2)

    alloc = resource_step(default_instance, anchor.eta, anchor, fixed=fixed)
    assert alloc.tau_s == tau_s
    assert check_feasibility(default_instance, alloc, tol_rel=1e-6).feasible
    learning = default_instance.learning
    assert total_completion_time(alloc, learning) <= total_completion_time(anchor, learning) * (1 + DESCENT_SLACK)


def test_fixed_sensing_time_run_descends(default_instance):
    trace = run_benchmark(default_instance, "FTD", ScaOptions(max_iter=10))
    assert trace.iterations >= 1
    assert all(record.allocation.tau_s == trace.initial_allocation.tau_s for record in trace.records)
    _assert_sound(trace)


def test_truncated_subproblem_is_raised_not_converged(default_instance):
    opts = ScaOptions(max_iter=5, solver=SolverSettings(max_iter=1))
    with pytest.raises(SubproblemError) as excinfo:
        run(default_instance, opts=opts)
    assert excinfo.value.status == "max-iter"
    assert excinfo.value.iteration == 1
    assert excinfo.value.phase in ("accuracy", "resource")

    with pytest.raises(SubproblemError) as excinfo:
        run_benchmark(default_instance, "FLA", opts)
    assert excinfo.value.phase == "resource"

    anchor = init_feasible(default_instance)
    with pytest.raises(SubproblemError):
        resource_step(default_instance, anchor.eta, anchor, settings=SolverSettings(max_iter=1))


def test_rejected_iteration_stalls_instead_of_converging(default_instance, monkeypatch):
    monkeypatch.setattr("optimization.sca._improves", lambda instance, candidate, reference: None)
    trace = run(default_instance, opts=ScaOptions(max_iter=10))
    assert trace.status == "stalled"
    assert not trace.converged
    assert trace.iterations == 1
    assert not trace.records[0].accepted
    assert trace.final_objective == trace.initial_objective
