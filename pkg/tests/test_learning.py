from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import allocation, default_learning
from system_model import (
    LearningParams,
    ParameterDomainError,
    dbm_to_watts,
    derive_learning_constants,
    global_rounds,
    local_rounds,
    round_counts,
    total_completion_time,
    watts_to_dbm,
)


def test_zero_target_gap_gives_zero_global_scale():
    params = derive_learning_constants(4.0, 2.0, 0.25, 1.0 / 3.0, 1.0)
    assert params.a == 0.0


def test_global_scale_at_inverse_e():
    params = derive_learning_constants(4.0, 2.0, 0.25, 1.0 / 3.0, math.exp(-1.0))
    assert params.a == pytest.approx(24.0, rel=1e-12)


def test_local_scale_matches_closed_form():
    params = default_learning()
    assert params.nu == pytest.approx(2.0 / (1.0 * 0.25 * 2.0 * math.log(2.0)), rel=1e-12)
    assert params.nu == pytest.approx(5.7708, abs=1e-4)


@pytest.mark.parametrize(
    "kwargs, constraint",
    [
        (dict(delta=0.5), "delta<2/L"),
        (dict(xi_hyper=0.6), "xi<gamma/L"),
        (dict(eps0=0.0), "0<eps0<1"),
        (dict(eps0=1.5), "0<eps0<1"),
        (dict(L=-1.0), "L>0"),
    ],
)
def test_domain_violations_name_the_constraint(kwargs, constraint):
    values = dict(L=4.0, gamma=2.0, delta=0.25, xi_hyper=1.0 / 3.0, eps0=1e-3)
    values.update(kwargs)
    with pytest.raises(ParameterDomainError) as excinfo:
        LearningParams(**values)
    assert excinfo.value.constraint == constraint


def test_local_rounds_examples(learning):
    assert local_rounds(learning, 1.0) == 0.0
    assert local_rounds(learning, 0.25) == pytest.approx(11.5416, abs=1e-3)


def test_global_rounds_example():
    params = derive_learning_constants(4.0, 2.0, 0.25, 1.0 / 3.0, math.exp(-1.0))
    assert global_rounds(params, 0.5) == pytest.approx(48.0)


def test_global_rounds_unbounded_and_degenerate():
    assert global_rounds(default_learning(), 1.0) == math.inf
    assert global_rounds(default_learning(eps0=1.0), 1.0) == 0.0
    with pytest.raises(ParameterDomainError):
        global_rounds(default_learning(), 0.0)


def test_round_counts_rounding():
    counts = round_counts(default_learning(), 0.25)
    assert counts.bounded
    local, glo = counts.rounded()
    assert local == 12
    assert glo == math.ceil(default_learning().a / 0.75)
    assert round_counts(default_learning(), 1.0).rounded()[1] is None


def test_completion_time_examples():
    params = derive_learning_constants(4.0, 2.0, 0.25, 1.0 / 3.0, math.exp(-1.0))
    alloc = allocation(2, tau_h=0.5, tau_s=0.5, tau_l=0.5, tau_c=0.5, eta=0.5)
    assert total_completion_time(alloc, params) == pytest.approx(96.0)
    idle = allocation(2, tau_h=0.0, tau_s=0.0, tau_l=0.0, tau_c=0.0)
    assert total_completion_time(idle, params) == 0.0


def test_completion_time_is_linear_in_durations(learning):
    base = allocation(3, tau_h=0.3, tau_s=0.2, tau_l=0.4, tau_c=0.1, eta=0.3)
    scaled = base.replace(tau_h=0.9, tau_s=0.6, tau_l=1.2, tau_c=0.3)
    assert total_completion_time(scaled, learning) == pytest.approx(3.0 * total_completion_time(base, learning))


def test_completion_time_unbounded_signal(learning):
    assert total_completion_time(allocation(1, eta=1.0), learning) == math.inf


def test_dbm_conversions_round_trip():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(10.0) == pytest.approx(0.01)
    np.testing.assert_allclose(watts_to_dbm(dbm_to_watts(42.0)), 42.0)


def test_round_counts_trade_off_monotonically(learning):
    etas = np.linspace(1e-3, 0.999, 1000)
    glo = np.array([global_rounds(learning, eta) for eta in etas])
    loc = np.array([local_rounds(learning, eta) for eta in etas])
    assert np.all(np.diff(glo) > 0)
    assert np.all(np.diff(loc) < 0)
