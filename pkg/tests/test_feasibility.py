from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import allocation
from system_model import check_feasibility


def test_idle_allocation_violates_sensing(two_device_instance):
    idle = allocation(2, tau_h=0.0, tau_s=0.0, tau_l=0.0, tau_c=0.0, beam_power=[0.0, 0.0])
    report = check_feasibility(two_device_instance, idle)
    assert not report.feasible
    assert report.worst.name == "sensing"
    assert {row.name for row in report.violated} >= {"sensing", "upload"}


def _feasible_point(instance):
    system = instance.system
    tau_s = float(np.max(system.data_bits / instance.sensing_rates))
    return allocation(
        instance.num_devices,
        beam_power=np.full(instance.num_devices, system.power_budget / instance.num_devices),
        cpu_freq=instance.f_min,
        tau_h=5.0,
        tau_s=tau_s,
        tau_l=2.0,
        tau_c=1.0,
    )


def test_generous_point_is_feasible(two_device_instance):
    report = check_feasibility(two_device_instance, _feasible_point(two_device_instance))
    assert report.feasible, report.summary()
    assert report.summary().startswith("feasible")


def test_full_power_budget_has_zero_slack(two_device_instance):
    alloc = _feasible_point(two_device_instance)
    report = check_feasibility(two_device_instance, alloc)
    assert report.slack("beam_power") == pytest.approx(0.0, abs=1e-12)
    assert report.feasible


def test_bandwidth_row_only_for_fdma(two_device_instance):
    noma = two_device_instance.with_mode("noma")
    alloc = _feasible_point(noma).replace(bandwidth=None)
    names = {row.name for row in check_feasibility(noma, alloc).rows}
    assert "bandwidth" not in names
    assert "bandwidth" in {row.name for row in check_feasibility(two_device_instance, _feasible_point(two_device_instance)).rows}


def test_energy_cap_row(two_device_instance):
    capped = two_device_instance.with_system(energy_cap=1.0)
    alloc = _feasible_point(capped)
    report = check_feasibility(capped, alloc)
    assert report.slack("source_energy") == pytest.approx(1.0 - 5.0 * alloc.beam_power.sum())
    assert "source_energy" in {row.name for row in report.violated}
    assert not math.isfinite(two_device_instance.system.energy_cap)


def test_cpu_bounds_and_per_device_labels(two_device_instance):
    alloc = _feasible_point(two_device_instance).replace(cpu_freq=np.array([5e9, 1e9]))
    report = check_feasibility(two_device_instance, alloc)
    labels = {row.label() for row in report.violated}
    assert "cpu_frequency_max[0]" in labels
    with pytest.raises(KeyError):
        report.slack("missing")


def test_tolerance_must_be_positive(two_device_instance):
    with pytest.raises(ValueError):
        check_feasibility(two_device_instance, _feasible_point(two_device_instance), tol_rel=0.0)
